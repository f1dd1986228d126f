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

#include "emprobe/error.hpp"
#include "emprobe/forge.hpp"
#include "util/hash.hpp"

namespace emprobe {

namespace {

TransformedVideo start_video(std::string id, Transform transform,
                             std::vector<std::string> sources) {
  TransformedVideo v;
  v.id = std::move(id);
  v.transform = transform;
  v.manifest.id = v.id;
  v.manifest.transform = transform;
  v.manifest.sources = std::move(sources);
  return v;
}

// A frame counts as present only when its ground truth has pixels, so the
// flag and the mask can never disagree.
void push_frame(TransformedVideo& v, RgbImage frame, Mask gt, bool present,
                std::optional<double> obscuration = std::nullopt) {
  ManifestFrame mf;
  mf.index = static_cast<std::uint32_t>(v.frames.size());
  mf.object_present = present && !gt.empty();
  if (!mf.object_present) gt = Mask(gt.width, gt.height);
  mf.obscuration_percent = obscuration;
  if (mf.object_present) mf.bbox = normalized_bbox(gt);
  v.frames.push_back(std::move(frame));
  v.gt_masks.push_back(std::move(gt));
  v.manifest.frames.push_back(std::move(mf));
}

void require_frames(const AnnotatedVideo& v, std::size_t needed, const char* role) {
  if (v.size() < needed) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(role) + " video '" + v.video_id + "' has " + std::to_string(v.size()) +
                    " frames, needs " + std::to_string(needed));
  }
}

bool in_interjection(std::size_t t, const SegmentLayout& layout) {
  return t >= layout.prefix && t < layout.prefix + layout.inter;
}

Mask subtract(const Mask& a, const Mask& b) {
  Mask out = a;
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = a.bits[i] && !b.bits[i];
  return out;
}

}  // namespace

TransformedVideo forge_interjection(const AnnotatedVideo& a, const AnnotatedVideo& b,
                                    std::uint32_t b_offset, const SegmentLayout& layout) {
  require_frames(a, static_cast<std::size_t>(layout.prefix) + layout.suffix, "host");
  require_frames(b, static_cast<std::size_t>(b_offset) + layout.inter, "interjected");
  auto v = start_video("interjection_" + a.video_id + "_" + b.video_id, Transform::kInterjection,
                       {a.video_id, b.video_id});
  const int w = a.width(), h = a.height();
  for (std::uint32_t t = 0; t < layout.prefix; ++t) push_frame(v, a.frames[t], a.masks[t], true);
  for (std::uint32_t t = 0; t < layout.inter; ++t) {
    const RgbImage& src = b.frames[b_offset + t];
    RgbImage frame = (src.width == w && src.height == h) ? src : resize_nearest(src, w, h);
    push_frame(v, std::move(frame), Mask(w, h), false);
  }
  for (std::uint32_t t = layout.prefix; t < layout.prefix + layout.suffix; ++t) {
    push_frame(v, a.frames[t], a.masks[t], true);
  }
  return v;
}

Path default_removal_path(int frame_width, int frame_height, const Cutout& donor,
                          std::size_t frames) {
  Point start{(frame_width - donor.width()) / 2, (frame_height - donor.height()) / 2};
  const int drift = frames > 0 ? static_cast<int>(frames - 1) : 0;
  // Pull the start left so the whole drift stays inside the frame.
  start.x = std::max(0, std::min(start.x, frame_width - donor.width() - drift));
  return linear_path(start, 1.0, 0.0, frames);
}

TransformedVideo forge_object_removal(const AnnotatedVideo& base, const Cutout& donor,
                                      const Path& path, const SegmentLayout& layout) {
  const std::size_t total = layout.total();
  require_frames(base, total, "base");
  const Path route = path.empty() ? default_removal_path(base.width(), base.height(), donor, total)
                                  : path;
  if (route.size() != total) {
    throw Error(ErrorCode::kInvalidArgument, "object-removal path needs " + std::to_string(total) +
                                                 " placements, got " +
                                                 std::to_string(route.size()));
  }
  auto v = start_video("object_removal_" + base.video_id, Transform::kObjectRemoval,
                       {base.video_id});
  for (std::size_t t = 0; t < total; ++t) {
    if (in_interjection(t, layout)) {
      push_frame(v, base.frames[t], Mask(base.width(), base.height()), false);
      continue;
    }
    RgbImage frame = base.frames[t];
    Mask covered = paste(frame, donor, route[t]);
    push_frame(v, std::move(frame), std::move(covered), true);
  }
  return v;
}

TransformedVideo forge_context_removal(const AnnotatedVideo& base, const Fill& fill,
                                       const SegmentLayout& layout) {
  const std::size_t total = layout.total();
  require_frames(base, total, "base");
  auto v = start_video("context_removal_" + base.video_id, Transform::kContextRemoval,
                       {base.video_id});
  for (std::size_t t = 0; t < total; ++t) {
    RgbImage frame = base.frames[t];
    if (in_interjection(t, layout)) {
      const Mask& keep = base.masks[t];
      for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
          if (keep.get(x, y)) continue;
          std::uint8_t* px = frame.at(x, y);
          switch (fill.mode) {
            case FillMode::kBlack: px[0] = px[1] = px[2] = 0; break;
            case FillMode::kGray: px[0] = px[1] = px[2] = 128; break;
            case FillMode::kNoise: {
              const auto hsh = util::hash_mix(
                  fill.seed + t, static_cast<std::uint64_t>(y) * frame.width + x);
              px[0] = static_cast<std::uint8_t>(hsh);
              px[1] = static_cast<std::uint8_t>(hsh >> 8);
              px[2] = static_cast<std::uint8_t>(hsh >> 16);
              break;
            }
          }
        }
      }
    }
    push_frame(v, std::move(frame), base.masks[t], true);
  }
  return v;
}

TransformedVideo forge_obscuration(const AnnotatedVideo& base, const Cutout& donor,
                                   const Path& path) {
  if (path.size() != base.size()) {
    throw Error(ErrorCode::kInvalidArgument, "obscuration path has " +
                                                 std::to_string(path.size()) +
                                                 " placements for " + std::to_string(base.size()) +
                                                 " frames");
  }
  auto v = start_video("obscuration_" + base.video_id, Transform::kObscuration, {base.video_id});
  for (std::size_t t = 0; t < base.size(); ++t) {
    RgbImage frame = base.frames[t];
    const Mask covered = paste(frame, donor, path[t]);
    const Mask& object = base.masks[t];
    std::optional<double> percent;
    if (!object.empty()) percent = obscuration_percent(object, covered);
    push_frame(v, std::move(frame), subtract(object, covered), percent && *percent < 1.0, percent);
  }
  return v;
}

TransformedVideo forge_overlay3(const AnnotatedVideo& base, const std::array<Cutout, 3>& donors,
                                const std::array<Path, 3>& paths) {
  for (const auto& p : paths) {
    if (p.size() != base.size()) {
      throw Error(ErrorCode::kInvalidArgument, "overlay path length differs from base video");
    }
  }
  auto v = start_video("overlay3_" + base.video_id, Transform::kOverlay3, {base.video_id});
  for (std::size_t t = 0; t < base.size(); ++t) {
    RgbImage frame = base.frames[t];
    Mask covered(frame.width, frame.height);
    for (std::size_t d = 0; d < donors.size(); ++d) {
      const Mask m = paste(frame, donors[d], paths[d][t]);
      for (std::size_t i = 0; i < m.bits.size(); ++i) covered.bits[i] |= m.bits[i];
    }
    const Mask& object = base.masks[t];
    std::optional<double> percent;
    if (!object.empty()) percent = obscuration_percent(object, covered);
    push_frame(v, std::move(frame), subtract(object, covered), percent && *percent < 1.0, percent);
  }
  return v;
}

}  // namespace emprobe
