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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emprobe/trace.hpp"

namespace emprobe {

// Floor applied to the element-wise variance when the window holds more than
// one reference.
inline constexpr double kSigmaFloor = 1e-6;

struct WindowStats {
  Shape shape;
  std::vector<double> mean;   // f_m
  std::vector<double> sigma;  // element-wise variance, or 1 for a single reference
  std::size_t w_effective = 0;
};

// Statistics over the last min(w, |refs|) references.
WindowStats window_stats(std::span<const Tensor* const> refs, std::size_t w);
WindowStats window_stats(std::span<const Tensor> refs, std::size_t w);

// sqrt(mean(((f - mean) / sigma)^2)). Throws Error(kNumeric) on NaN input.
double regularized_l2(const Tensor& f, const WindowStats& stats);

struct FeatureRecord {
  std::uint32_t frame_index = 0;
  std::optional<double> short_l2;
  std::optional<double> long_l2;
  std::optional<double> short_ratio;
  bool object_present = true;
  bool operator==(const FeatureRecord&) const = default;
};

struct FeatureSeries {
  std::string video_id;
  Position position = Position::kObjectPointer;
  std::vector<FeatureRecord> frames;
  bool operator==(const FeatureSeries&) const = default;
};

struct FeatureOptions {
  std::size_t short_window = 1;
  std::size_t long_window = 5;
  double epsilon = 1e-6;  // clamps both sides of the short-term ratio
  // Called once per frame t >= 1 with the frame indices used as references.
  std::function<void(std::uint32_t, std::span<const std::uint32_t>)> on_references;
};

// References for frame t are the earlier frames flagged object_present.
// Frame 0, and any frame without an earlier reference, gets undefined features.
FeatureSeries frame_features(const EmbeddingTrace& trace, Position position,
                             const FeatureOptions& options = {});

struct AverageCurves {
  Position position = Position::kObjectPointer;
  std::vector<std::uint32_t> frame_index;
  std::vector<std::optional<double>> short_l2;
  std::vector<std::optional<double>> long_l2;
  std::vector<std::optional<double>> short_ratio;
  std::vector<std::size_t> short_count;
  std::vector<std::size_t> long_count;
  std::vector<std::size_t> ratio_count;
};

// Per-frame mean over the series that define the value at that frame.
AverageCurves dataset_average(std::span<const FeatureSeries> series);

// Columns frame,position,short_l2,long_l2,short_ratio,object_present; an
// undefined value is an empty cell.
std::string features_csv(const FeatureSeries& series);
FeatureSeries parse_features_csv(const std::string& text, std::string video_id = {});

}  // namespace emprobe
