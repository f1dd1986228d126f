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
#include "emprobe/viz.hpp"
#include "util/csv.hpp"

namespace emprobe {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 6> kPalette = {{
    {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {255, 127, 14}, {148, 103, 189}, {23, 190, 207}}};

void put(RgbImage& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::copy(c.begin(), c.end(), img.at(x, y));
}

void line(RgbImage& img, int x0, int y0, int x1, int y1, const std::array<std::uint8_t, 3>& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put(img, x0, y0, c);
    put(img, x0, y0 + 1, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

RgbImage render(std::span<const std::uint32_t> frames, std::span<const Series> curves,
                const PlotOptions& opt) {
  if (opt.width < 32 || opt.height < 32) throw Error(ErrorCode::kInvalidArgument, "plot too small");
  RgbImage img(opt.width, opt.height, 255);
  const int left = 12, right = opt.width - 12, top = 12, bottom = opt.height - 12;

  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : curves) {
    for (const auto& v : s.values) {
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    }
  }
  if (!(lo <= hi)) lo = 0, hi = 1;
  if (lo == hi) lo -= 1, hi += 1;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double f0 = frames.empty() ? 0.0 : frames.front();
  const double f1 = frames.empty() ? 1.0 : std::max<double>(frames.back(), f0 + 1);
  auto px = [&](double f) {
    return static_cast<int>(std::lround(left + (f - f0) / (f1 - f0) * (right - left)));
  };
  auto py = [&](double v) {
    return static_cast<int>(std::lround(bottom - (v - lo) / (hi - lo) * (bottom - top)));
  };

  if (opt.band && opt.band->first < opt.band->second) {
    const int xa = std::max(left, px(opt.band->first - 0.5));
    const int xb = std::min(right, px(opt.band->second - 0.5));
    for (int y = top; y <= bottom; ++y) {
      for (int x = xa; x <= xb; ++x) put(img, x, y, {200, 235, 200});
    }
  }
  line(img, left, bottom, right, bottom, {0, 0, 0});
  line(img, left, top, left, bottom, {0, 0, 0});

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& color = kPalette[k % kPalette.size()];
    const auto& vals = curves[k].values;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      if (vals[i] && vals[i + 1] && std::isfinite(*vals[i]) && std::isfinite(*vals[i + 1])) {
        line(img, px(frames[i]), py(*vals[i]), px(frames[i + 1]), py(*vals[i + 1]), color);
      }
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i] || !std::isfinite(*vals[i])) continue;
      const int cx = px(frames[i]), cy = py(*vals[i]);
      for (int d = -2; d <= 2; ++d) {
        put(img, cx + d, cy, color);
        put(img, cx, cy + d, color);
      }
    }
  }
  return img;
}

}  // namespace

Plot plot_series(std::span<const std::uint32_t> frames, std::span<const Series> curves,
                 const PlotOptions& options) {
  for (const auto& s : curves) {
    if (s.values.size() != frames.size()) {
      throw Error(ErrorCode::kInvalidArgument, "curve '" + s.label + "' has " +
                                                   std::to_string(s.values.size()) +
                                                   " values for " + std::to_string(frames.size()) +
                                                   " frames");
    }
    if (s.label.find_first_of(",\n\r") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "curve label may not contain commas or newlines");
    }
  }
  Plot plot;
  plot.csv = "frame";
  for (const auto& s : curves) plot.csv += ',' + s.label;
  plot.csv += '\n';
  for (std::size_t i = 0; i < frames.size(); ++i) {
    plot.csv += std::to_string(frames[i]);
    for (const auto& s : curves) plot.csv += ',' + util::format_optional(s.values[i]);
    plot.csv += '\n';
  }
  if (options.render) plot.image = render(frames, curves, options);
  return plot;
}

SeriesTable parse_series_csv(const std::string& text) {
  const auto lines = util::split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::kInvalidArgument, "empty series CSV");
  const auto head = util::split_line(lines[0]);
  if (head.empty() || head[0] != "frame") {
    throw Error(ErrorCode::kInvalidArgument, "series CSV must start with a frame column");
  }
  SeriesTable table;
  for (std::size_t k = 1; k < head.size(); ++k) table.curves.push_back({std::string(head[k]), {}});
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = util::split_line(lines[i]);
    if (cells.size() != head.size()) {
      throw Error(ErrorCode::kInvalidArgument, "series CSV row " + std::to_string(i) +
                                                   " has the wrong number of cells");
    }
    table.frames.push_back(static_cast<std::uint32_t>(util::parse_double(cells[0])));
    for (std::size_t k = 1; k < cells.size(); ++k) {
      table.curves[k - 1].values.push_back(util::parse_optional(cells[k]));
    }
  }
  return table;
}

}  // namespace emprobe
