// Copyright 2026 The emprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <random>

#include "emprobe/error.hpp"
#include "emprobe/forge.hpp"
#include "util/hash.hpp"

namespace fs = std::filesystem;

namespace emprobe {

namespace {

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<fs::path> list_images(const std::string& dir, bool masks) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: '" + dir + "'");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = lower_ext(entry.path());
    if (ext == ".png" || (!masks && (ext == ".jpg" || ext == ".jpeg"))) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

AnnotatedVideo load_video(const std::string& frame_dir, const std::string& mask_dir,
                          std::uint8_t object_index, std::string video_id) {
  const auto frame_paths = list_images(frame_dir, false);
  const auto mask_paths = list_images(mask_dir, true);
  if (frame_paths.empty()) throw Error(ErrorCode::kInvalidArgument, "no frames in '" + frame_dir + "'");
  if (frame_paths.size() != mask_paths.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame/mask count mismatch: " + std::to_string(frame_paths.size()) + " frames, " +
                    std::to_string(mask_paths.size()) + " masks");
  }
  AnnotatedVideo video;
  video.video_id =
      video_id.empty() ? fs::path(frame_dir).lexically_normal().filename().string() : video_id;
  if (video.video_id.empty()) video.video_id = fs::path(frame_dir).parent_path().filename().string();
  for (std::size_t i = 0; i < frame_paths.size(); ++i) {
    RgbImage frame = read_rgb(frame_paths[i].string());
    IndexImage idx = read_index_png(mask_paths[i].string());
    if (!video.frames.empty() &&
        (frame.width != video.width() || frame.height != video.height())) {
      throw Error(ErrorCode::kInvalidArgument,
                  "frame '" + frame_paths[i].string() + "' differs in size from frame 0");
    }
    if (idx.width != frame.width || idx.height != frame.height) {
      throw Error(ErrorCode::kInvalidArgument,
                  "mask '" + mask_paths[i].string() + "' is " + std::to_string(idx.width) + "x" +
                      std::to_string(idx.height) + ", frame is " + std::to_string(frame.width) +
                      "x" + std::to_string(frame.height));
    }
    Mask mask(idx.width, idx.height);
    for (std::size_t p = 0; p < idx.index.size(); ++p) mask.bits[p] = idx.index[p] == object_index;
    if (i == 0 && mask.empty()) {
      throw Error(ErrorCode::kDegenerate, "object index " + std::to_string(object_index) +
                                              " does not appear in the first mask of '" +
                                              mask_dir + "'");
    }
    video.frames.push_back(std::move(frame));
    video.masks.push_back(std::move(mask));
  }
  return video;
}

AnnotatedVideo synth_video(const SynthVideoSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.size <= 0 || spec.num_frames == 0) {
    throw Error(ErrorCode::kSpec, "synth_video needs positive dims, size and frame count");
  }
  const double n1 = static_cast<double>(spec.num_frames - 1);
  const std::array<double, 2> start =
      spec.start.value_or(std::array<double, 2>{spec.width / 2.0 - spec.velocity_x * n1 / 2.0,
                                                spec.height / 2.0 - spec.velocity_y * n1 / 2.0});

  std::vector<Point> centers;
  for (std::uint32_t t = 0; t < spec.num_frames; ++t) {
    const Point c{static_cast<int>(std::lround(start[0] + spec.velocity_x * t)),
                  static_cast<int>(std::lround(start[1] + spec.velocity_y * t))};
    if (c.x - spec.size < 0 || c.y - spec.size < 0 || c.x + spec.size >= spec.width ||
        c.y + spec.size >= spec.height) {
      throw Error(ErrorCode::kSpec, "object leaves the frame at frame " + std::to_string(t));
    }
    centers.push_back(c);
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> channel(40, 215);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int bg[3] = {channel(rng), channel(rng), channel(rng)};
  int fg[3];
  // Keep the object visibly distinct from the background.
  do {
    for (int& c : fg) c = channel(rng);
  } while (std::abs(fg[0] - bg[0]) + std::abs(fg[1] - bg[1]) + std::abs(fg[2] - bg[2]) < 120);
  const double fx = 0.05 + 0.2 * unit(rng), fy = 0.05 + 0.2 * unit(rng);
  const double phase = 6.283185307179586 * unit(rng);
  const std::uint64_t tex_seed = rng();

  AnnotatedVideo video;
  video.video_id = spec.video_id;
  for (std::uint32_t t = 0; t < spec.num_frames; ++t) {
    RgbImage frame(spec.width, spec.height);
    Mask mask(spec.width, spec.height);
    const Point c = centers[t];
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const int dx = x - c.x, dy = y - c.y;
        const bool inside = spec.shape == ObjectShape::kDisk
                                ? dx * dx + dy * dy <= spec.size * spec.size
                                : std::abs(dx) <= spec.size && std::abs(dy) <= spec.size;
        std::uint8_t* px = frame.at(x, y);
        if (inside) {
          mask.set(x, y);
          // Texture attached to the object so it moves rigidly.
          const int jitter = static_cast<int>(
              util::hash_mix(tex_seed, static_cast<std::uint64_t>(dx + 4096) * 8192 + (dy + 4096)) %
              21) - 10;
          for (int k = 0; k < 3; ++k) px[k] = clamp_u8(fg[k] + jitter);
        } else {
          const double wave = 30.0 * std::sin(fx * x + phase) * std::cos(fy * y);
          const int noise = static_cast<int>(
              util::hash_mix(tex_seed ^ (0x9e3779b97f4a7c15ull * (t + 1)),
                             static_cast<std::uint64_t>(y) * spec.width + x) %
              13) - 6;
          for (int k = 0; k < 3; ++k) {
            px[k] = clamp_u8(bg[k] + static_cast<int>(std::lround(wave)) + noise);
          }
        }
      }
    }
    video.frames.push_back(std::move(frame));
    video.masks.push_back(std::move(mask));
  }
  return video;
}

}  // namespace emprobe
