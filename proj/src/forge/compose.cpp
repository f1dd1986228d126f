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

#include "emprobe/error.hpp"
#include "emprobe/forge.hpp"

namespace emprobe {

Path linear_path(Point start, double velocity_x, double velocity_y, std::size_t frames) {
  Path path;
  path.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    path.push_back(Point{start.x + static_cast<int>(std::lround(velocity_x * t)),
                         start.y + static_cast<int>(std::lround(velocity_y * t))});
  }
  return path;
}

Cutout cut_object(const RgbImage& frame, const Mask& mask, int max_width) {
  if (frame.width != mask.width || frame.height != mask.height) {
    throw Error(ErrorCode::kInvalidArgument, "cutout frame and mask differ in size");
  }
  const PixelBox box = bounds(mask);
  if (box.empty()) throw Error(ErrorCode::kDegenerate, "cannot cut an object from an empty mask");
  Cutout cut{RgbImage(box.width(), box.height()), Mask(box.width(), box.height())};
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) {
      const std::uint8_t* src = frame.at(box.x0 + x, box.y0 + y);
      std::copy(src, src + 3, cut.pixels.at(x, y));
      cut.mask.set(x, y, mask.get(box.x0 + x, box.y0 + y));
    }
  }
  if (max_width > 0 && cut.width() > max_width) {
    const double scale = static_cast<double>(max_width) / cut.width();
    const int h = std::max(1, static_cast<int>(std::lround(cut.height() * scale)));
    cut.pixels = resize_nearest(cut.pixels, max_width, h);
    cut.mask = resize_nearest(cut.mask, max_width, h);
    if (cut.mask.empty()) throw Error(ErrorCode::kDegenerate, "donor vanished when downscaled");
  }
  return cut;
}

Cutout donor_cutout(const AnnotatedVideo& donor, int target_frame_width) {
  const int max_width = static_cast<int>(std::floor(kDonorMaxWidthFraction * target_frame_width));
  for (std::size_t i = 0; i < donor.size(); ++i) {
    if (!donor.masks[i].empty()) return cut_object(donor.frames[i], donor.masks[i], max_width);
  }
  throw Error(ErrorCode::kDegenerate, "donor video '" + donor.video_id + "' has no object pixels");
}

Mask paste(RgbImage& dst, const Cutout& cutout, Point at) {
  if (at.x < 0 || at.y < 0 || at.x + cutout.width() > dst.width ||
      at.y + cutout.height() > dst.height) {
    throw Error(ErrorCode::kInvalidArgument,
                "placement (" + std::to_string(at.x) + "," + std::to_string(at.y) + ") of a " +
                    std::to_string(cutout.width()) + "x" + std::to_string(cutout.height()) +
                    " cutout leaves the " + std::to_string(dst.width) + "x" +
                    std::to_string(dst.height) + " frame");
  }
  Mask covered(dst.width, dst.height);
  for (int y = 0; y < cutout.height(); ++y) {
    for (int x = 0; x < cutout.width(); ++x) {
      if (!cutout.mask.get(x, y)) continue;
      const std::uint8_t* src = cutout.pixels.at(x, y);
      std::copy(src, src + 3, dst.at(at.x + x, at.y + y));
      covered.set(at.x + x, at.y + y);
    }
  }
  return covered;
}

double obscuration_percent(const Mask& object_mask, const Mask& obscuring_mask) {
  if (object_mask.width != obscuring_mask.width || object_mask.height != obscuring_mask.height) {
    throw Error(ErrorCode::kInvalidArgument, "obscuration masks differ in size");
  }
  std::size_t object = 0, overlap = 0;
  for (std::size_t i = 0; i < object_mask.bits.size(); ++i) {
    if (!object_mask.bits[i]) continue;
    ++object;
    overlap += obscuring_mask.bits[i] != 0;
  }
  if (object == 0) throw Error(ErrorCode::kDegenerate, "obscuration percent of an empty object");
  return static_cast<double>(overlap) / static_cast<double>(object);
}

std::optional<Bbox> normalized_bbox(const Mask& mask) {
  const PixelBox box = bounds(mask);
  if (box.empty()) return std::nullopt;
  const float w = static_cast<float>(mask.width), h = static_cast<float>(mask.height);
  return Bbox{box.x0 / w, box.y0 / h, (box.x1 + 1) / w, (box.y1 + 1) / h};
}

}  // namespace emprobe
