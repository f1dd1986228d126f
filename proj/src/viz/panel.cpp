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
#include "emprobe/viz.hpp"

namespace emprobe {

namespace {

constexpr std::uint8_t kGapFill = 24;
constexpr std::uint8_t kGapMark = 200;

void blit(GrayImage& dst, const GrayImage& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    std::copy_n(&src.pixels[static_cast<std::size_t>(y) * src.width], src.width,
                &dst.pixels[static_cast<std::size_t>(y0 + y) * dst.width + x0]);
  }
}

void gap_cell(GrayImage& dst, int x0, int y0, int size) {
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) dst.at(x0 + x, y0 + y) = kGapFill;
    dst.at(x0 + y, y0 + y) = kGapMark;
    dst.at(x0 + size - 1 - y, y0 + y) = kGapMark;
  }
}

}  // namespace

Panel position_panel(const EmbeddingTrace& trace, std::uint32_t frame_index,
                     std::span<const Position> positions, int cell_size) {
  if (positions.empty()) throw Error(ErrorCode::kInvalidArgument, "panel needs at least one position");
  if (cell_size <= 0) throw Error(ErrorCode::kInvalidArgument, "panel cell size must be positive");
  const auto frame = std::find_if(trace.frames.begin(), trace.frames.end(),
                                  [&](const FrameRecord& f) { return f.frame_index == frame_index; });
  if (frame == trace.frames.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "trace '" + trace.video_id + "' has no frame " + std::to_string(frame_index));
  }

  Panel panel;
  panel.cell_size = cell_size;
  panel.image = GrayImage(cell_size * static_cast<int>(positions.size()), 2 * cell_size, 0);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const Position p = positions[k];
    const int x0 = static_cast<int>(k) * cell_size;
    PanelColumn col{p, false, std::string(position_name(p))};
    if (p == Position::kObjectPointer) {
      col.gap = true;
      col.label = "object pointer has no spatial layout";
    } else if (!frame->tensors.count(p)) {
      col.gap = true;
      col.label = std::string(position_name(p)) + " not captured";
    }
    if (col.gap) {
      gap_cell(panel.image, x0, 0, cell_size);
      gap_cell(panel.image, x0, cell_size, cell_size);
    } else {
      const auto stats = channel_stats(frame->at(p), p);
      const auto mean = heatmap(stats.mean2d);
      const auto var = heatmap(stats.var2d);
      col.mean_min = mean.min;
      col.mean_max = mean.max;
      col.var_min = var.min;
      col.var_max = var.max;
      blit(panel.image, resize_nearest(mean.image, cell_size, cell_size), x0, 0);
      blit(panel.image, resize_nearest(var.image, cell_size, cell_size), x0, cell_size);
    }
    panel.columns.push_back(std::move(col));
  }
  return panel;
}

std::string panel_filename(const std::string& video_id, std::uint32_t frame_index) {
  return video_id + "_" + std::to_string(frame_index) + "_panel.png";
}

}  // namespace emprobe
