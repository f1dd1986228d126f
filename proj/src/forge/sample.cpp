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
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "emprobe/error.hpp"
#include "emprobe/forge.hpp"
#include "util/hash.hpp"

namespace fs = std::filesystem;

namespace emprobe {

SyntheticPool::SyntheticPool(SyntheticPoolConfig config) : config_(config) {
  if (config_.count == 0) throw Error(ErrorCode::kInvalidArgument, "synthetic pool is empty");
}

std::string SyntheticPool::id(std::size_t i) const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth%04zu", i);
  return buf;
}

SynthVideoSpec SyntheticPool::spec_for(std::size_t i) const {
  std::mt19937_64 rng(util::hash_mix(config_.seed, i));
  std::uniform_int_distribution<int> size(6, 12);
  std::uniform_real_distribution<double> velocity(-1.5, 1.5);
  SynthVideoSpec spec;
  spec.video_id = id(i);
  spec.num_frames = config_.num_frames;
  spec.width = config_.width;
  spec.height = config_.height;
  spec.shape = (rng() & 1) ? ObjectShape::kDisk : ObjectShape::kSquare;
  spec.size = std::min(size(rng), std::min(spec.width, spec.height) / 6);
  spec.velocity_x = velocity(rng);
  spec.velocity_y = velocity(rng);
  // Slow down if the centered trajectory would leave the frame.
  const double reach_x = spec.width / 2.0 - spec.size - 1;
  const double reach_y = spec.height / 2.0 - spec.size - 1;
  const double half = (spec.num_frames - 1) / 2.0 + 0.5;
  spec.velocity_x = std::clamp(spec.velocity_x, -reach_x / half, reach_x / half);
  spec.velocity_y = std::clamp(spec.velocity_y, -reach_y / half, reach_y / half);
  spec.seed = rng();
  return spec;
}

AnnotatedVideo SyntheticPool::load(std::size_t i) const {
  if (i >= config_.count) throw Error(ErrorCode::kInvalidArgument, "pool index out of range");
  return synth_video(spec_for(i));
}

DirectoryPool::DirectoryPool(const std::string& root, std::uint8_t object_index)
    : root_(root), object_index_(object_index) {
  const fs::path r(root);
  if (!fs::is_directory(r)) throw Error(ErrorCode::kIo, "pool root '" + root + "' is not a directory");
  fs::path frames = r / "JPEGImages";
  fs::path masks = r / "Annotations";
  if (fs::is_directory(frames) && fs::is_directory(masks)) {
    if (fs::is_directory(frames / "480p") && fs::is_directory(masks / "480p")) {
      frames /= "480p";
      masks /= "480p";
    }
    frame_root_ = frames.string();
    mask_root_ = masks.string();
    for (const auto& e : fs::directory_iterator(frames)) {
      if (e.is_directory() && fs::is_directory(masks / e.path().filename())) {
        videos_.push_back(e.path().filename().string());
      }
    }
  } else {
    // <root>/<video>/{frames,masks}
    for (const auto& e : fs::directory_iterator(r)) {
      if (e.is_directory() && fs::is_directory(e.path() / "frames") &&
          fs::is_directory(e.path() / "masks")) {
        videos_.push_back(e.path().filename().string());
      }
    }
  }
  std::sort(videos_.begin(), videos_.end());
  if (videos_.empty()) throw Error(ErrorCode::kInvalidArgument, "no videos found under '" + root + "'");
}

AnnotatedVideo DirectoryPool::load(std::size_t i) const {
  const std::string& vid = videos_.at(i);
  if (!frame_root_.empty()) {
    return load_video((fs::path(frame_root_) / vid).string(), (fs::path(mask_root_) / vid).string(),
                      object_index_, vid);
  }
  return load_video((fs::path(root_) / vid / "frames").string(),
                    (fs::path(root_) / vid / "masks").string(), object_index_, vid);
}

namespace {

std::size_t pick_other(std::mt19937_64& rng, std::size_t pool_size, std::size_t exclude) {
  std::uniform_int_distribution<std::size_t> d(0, pool_size - 2);
  const std::size_t k = d(rng);
  return k >= exclude ? k + 1 : k;
}

std::array<double, 2> centroid(const Mask& m, std::array<double, 2> fallback) {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.get(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) return fallback;
  return {sx / n, sy / n};
}

Point clamp_placement(double cx, double cy, const Cutout& c, int w, int h) {
  return Point{std::clamp(static_cast<int>(std::lround(cx - c.width() / 2.0)), 0, w - c.width()),
               std::clamp(static_cast<int>(std::lround(cy - c.height() / 2.0)), 0, h - c.height())};
}

AnnotatedVideo truncate(AnnotatedVideo v, std::size_t n) {
  if (v.size() > n) {
    v.frames.resize(n);
    v.masks.resize(n);
  }
  return v;
}

}  // namespace

TransformedVideo forge_sample(const VideoPool& pool, Transform transform, std::uint64_t base_seed,
                              std::size_t index, const SampleOptions& options) {
  if (pool.size() == 0) throw Error(ErrorCode::kInvalidArgument, "video pool is empty");
  const bool needs_donor = transform == Transform::kInterjection ||
                           transform == Transform::kObjectRemoval ||
                           transform == Transform::kObscuration ||
                           transform == Transform::kOverlay3;
  if (needs_donor && pool.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(to_string(transform)) + " needs at least two pool videos");
  }
  std::mt19937_64 rng(base_seed + index);
  std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
  const std::size_t base_idx = any(rng);
  const SegmentLayout& layout = options.layout;

  TransformedVideo out;
  switch (transform) {
    case Transform::kClean: {
      AnnotatedVideo base = truncate(pool.load(base_idx), layout.total());
      out.id = "clean_" + base.video_id;
      out.transform = Transform::kClean;
      out.manifest = Manifest{out.id, Transform::kClean, {base.video_id}, {}};
      for (std::size_t t = 0; t < base.size(); ++t) {
        ManifestFrame f;
        f.index = static_cast<std::uint32_t>(t);
        f.object_present = !base.masks[t].empty();
        if (f.object_present) f.bbox = normalized_bbox(base.masks[t]);
        out.manifest.frames.push_back(f);
      }
      out.frames = std::move(base.frames);
      out.gt_masks = std::move(base.masks);
      break;
    }
    case Transform::kInterjection: {
      const AnnotatedVideo a = pool.load(base_idx);
      const AnnotatedVideo b = pool.load(pick_other(rng, pool.size(), base_idx));
      if (b.size() < layout.inter) {
        throw Error(ErrorCode::kInvalidArgument, "interjected video too short");
      }
      std::uniform_int_distribution<std::size_t> offset(0, b.size() - layout.inter);
      out = forge_interjection(a, b, static_cast<std::uint32_t>(offset(rng)), layout);
      break;
    }
    case Transform::kObjectRemoval: {
      const AnnotatedVideo base = pool.load(base_idx);
      const AnnotatedVideo donor = pool.load(pick_other(rng, pool.size(), base_idx));
      out = forge_object_removal(base, donor_cutout(donor, base.width()), {}, layout);
      out.manifest.sources.push_back(donor.video_id);
      break;
    }
    case Transform::kContextRemoval: {
      Fill fill = options.fill;
      fill.seed = util::hash_mix(fill.seed, base_seed + index);
      out = forge_context_removal(pool.load(base_idx), fill, layout);
      break;
    }
    case Transform::kObscuration: {
      const AnnotatedVideo base = pool.load(base_idx);
      const std::size_t donor_idx = pick_other(rng, pool.size(), base_idx);
      const Cutout donor = donor_cutout(pool.load(donor_idx), base.width());
      const int w = base.width(), h = base.height();
      const auto c0 = centroid(base.masks.front(), {w / 2.0, h / 2.0});
      const int y = std::clamp(static_cast<int>(std::lround(c0[1] - donor.height() / 2.0)), 0,
                               h - donor.height());
      const bool rightward = rng() & 1;
      const double span = w - donor.width();
      Path path;
      const double steps = base.size() > 1 ? static_cast<double>(base.size() - 1) : 1.0;
      for (std::size_t t = 0; t < base.size(); ++t) {
        const double u = rightward ? t / steps : 1.0 - t / steps;
        path.push_back(Point{static_cast<int>(std::lround(u * span)), y});
      }
      out = forge_obscuration(base, donor, path);
      out.manifest.sources.push_back(pool.id(donor_idx));
      break;
    }
    case Transform::kOverlay3: {
      const AnnotatedVideo base = pool.load(base_idx);
      const int w = base.width(), h = base.height();
      std::array<Cutout, 3> donors;
      std::array<Path, 3> paths;
      const PixelBox box0 = bounds(base.masks.front());
      const double reach = box0.empty() ? w / 8.0 : std::max(box0.width(), box0.height()) / 2.0;
      std::uniform_real_distribution<double> jitter(-reach, reach);
      std::array<std::size_t, 3> donor_idx{};
      for (std::size_t d = 0; d < 3; ++d) {
        donor_idx[d] = pick_other(rng, pool.size(), base_idx);
        donors[d] = donor_cutout(pool.load(donor_idx[d]), w);
        const double dx = jitter(rng), dy = jitter(rng);
        std::array<double, 2> c{w / 2.0, h / 2.0};
        for (std::size_t t = 0; t < base.size(); ++t) {
          c = centroid(base.masks[t], c);
          paths[d].push_back(clamp_placement(c[0] + dx, c[1] + dy, donors[d], w, h));
        }
      }
      out = forge_overlay3(base, donors, paths);
      for (std::size_t d : donor_idx) out.manifest.sources.push_back(pool.id(d));
      break;
    }
    case Transform::kSynthetic:
      throw Error(ErrorCode::kInvalidArgument, "'synthetic' is a trace transform, not a video one");
  }

  char id[48];
  std::snprintf(id, sizeof(id), "%s_%05zu", std::string(to_string(transform)).c_str(), index);
  out.id = id;
  out.manifest.id = id;
  return out;
}

std::vector<Manifest> sample_dataset(const VideoPool& pool, Transform transform, std::size_t n,
                                     std::uint64_t base_seed, const SampleOptions& options) {
  std::vector<Manifest> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(forge_sample(pool, transform, base_seed, i, options).manifest);
  }
  return out;
}

}  // namespace emprobe
