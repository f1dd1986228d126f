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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emprobe/image.hpp"
#include "emprobe/trace.hpp"

namespace emprobe {

struct HeatmapImage {
  GrayImage image;  // width = grid cols, height = grid rows
  double min = 0.0;
  double max = 0.0;
};

// Min-max scaled to 0..255; a constant grid becomes uniform 128.
HeatmapImage heatmap(const Grid2D& grid);

inline constexpr std::array<Position, 5> kPanelPositions = {
    Position::kInput, Position::kImageEmbedding, Position::kMemoryAttention,
    Position::kPromptAttention, Position::kMemoryFeatures};

struct PanelColumn {
  Position position;
  bool gap = false;
  std::string label;  // reason text for gap columns, position name otherwise
  double mean_min = 0, mean_max = 0, var_min = 0, var_max = 0;
};

struct Panel {
  GrayImage image;  // columns * cell wide, 2 * cell tall; row 0 mean, row 1 variance
  int cell_size = 0;
  std::vector<PanelColumn> columns;
};

// Throws Error(kInvalidArgument) if no frame carries `frame_index`.
Panel position_panel(const EmbeddingTrace& trace, std::uint32_t frame_index,
                     std::span<const Position> positions = kPanelPositions, int cell_size = 64);

std::string panel_filename(const std::string& video_id, std::uint32_t frame_index);

struct Series {
  std::string label;
  std::vector<std::optional<double>> values;
  bool operator==(const Series&) const = default;
};

struct PlotOptions {
  // Half-open frame range [first, second); empty or absent means no band.
  std::optional<std::pair<std::uint32_t, std::uint32_t>> band;
  bool render = true;
  int width = 640;
  int height = 360;
};

struct Plot {
  std::string csv;  // frame,<label>...
  std::optional<RgbImage> image;
};

// Throws Error(kInvalidArgument) when a curve's length differs from `frames`.
Plot plot_series(std::span<const std::uint32_t> frames, std::span<const Series> curves,
                 const PlotOptions& options = {});

struct SeriesTable {
  std::vector<std::uint32_t> frames;
  std::vector<Series> curves;
};
SeriesTable parse_series_csv(const std::string& text);

}  // namespace emprobe
