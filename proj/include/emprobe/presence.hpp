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

#include "emprobe/stream_metrics.hpp"

namespace emprobe {

inline constexpr std::array<const char*, 3> kFeatureNames = {"short_l2", "long_l2", "short_ratio"};

struct LabeledFeature {
  std::array<double, 3> features{};  // short_l2, long_l2, short_ratio
  bool present = true;
  std::uint32_t frame_index = 0;
  std::string video_id;
};

struct LabeledSet {
  std::vector<LabeledFeature> samples;
  std::size_t excluded = 0;  // frames with any undefined feature
};

LabeledSet labeled_features(std::span<const FeatureSeries> series);

struct ThresholdFit {
  // Predict "absent" when score > threshold (absent_above) or score <= threshold.
  double threshold = 0.0;
  bool absent_above = true;
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
  double auc = 0.5;  // oriented so that auc >= 0.5

  bool predicts_absent(double score) const noexcept {
    return absent_above ? score > threshold : score <= threshold;
  }
};

// Mann-Whitney estimate of P(score_absent > score_present), ties counted half.
double rank_auc(std::span<const double> scores, std::span<const std::uint8_t> absent);

// Orientation from the rank AUC, then the threshold (one of the observed
// scores, or -inf) maximizing balanced accuracy.
ThresholdFit fit_threshold_scores(std::span<const double> scores,
                                  std::span<const std::uint8_t> absent);
ThresholdFit fit_threshold(std::span<const LabeledFeature> samples, int feature_index);

struct LinearFit {
  std::array<double, 3> weights{};  // unit norm
  double bias = 0.0;                // -threshold, for score = w.x + bias
  ThresholdFit fit;
  bool ridge_applied = false;
  // Set when the discriminant scored below the best single feature on the
  // training data and that feature's axis was used instead.
  std::optional<int> fallback_axis;

  bool predicts_absent(const std::array<double, 3>& x) const noexcept;
};

inline constexpr double kLdaRidge = 1e-6;

// Fisher discriminant on standardized features, thresholded like fit_threshold.
LinearFit fit_linear(std::span<const LabeledFeature> samples);

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t count = 0;
};

BoxStats box_stats(std::vector<double> values);

struct FrameDistribution {
  std::uint32_t frame_index = 0;
  std::array<std::optional<BoxStats>, 3> present;
  std::array<std::optional<BoxStats>, 3> absent;
};

struct SeparabilityReport {
  Position position = Position::kObjectPointer;
  std::size_t series_count = 0;
  std::size_t sample_count = 0;
  std::size_t present_count = 0;
  std::size_t absent_count = 0;
  std::size_t excluded_count = 0;
  bool degenerate_labels = false;
  std::string note;
  std::vector<FrameDistribution> frames;
  std::array<std::optional<ThresholdFit>, 3> single;
  std::optional<LinearFit> linear;
};

SeparabilityReport separability_report(std::span<const FeatureSeries> series, Position position);

std::string report_json(const SeparabilityReport& report);
// Columns frame,feature,label,count,min,q1,median,q3,max.
std::string distribution_csv(const SeparabilityReport& report);

}  // namespace emprobe
