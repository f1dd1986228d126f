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

#include <cmath>

#include "emprobe/error.hpp"
#include "emprobe/viz.hpp"

namespace emprobe {

HeatmapImage heatmap(const Grid2D& grid) {
  if (grid.rows == 0 || grid.cols == 0 || grid.values.size() != grid.rows * grid.cols) {
    throw Error(ErrorCode::kInvalidArgument, "heatmap needs a non-empty rectangular grid");
  }
  HeatmapImage out;
  out.min = grid.values.front();
  out.max = grid.values.front();
  for (double v : grid.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumeric, "non-finite value in heatmap grid");
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  out.image = GrayImage(static_cast<int>(grid.cols), static_cast<int>(grid.rows), 128);
  if (out.max == out.min) return out;
  const double range = out.max - out.min;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double t = (grid.values[i] - out.min) / range;
    out.image.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
  }
  return out;
}

}  // namespace emprobe
