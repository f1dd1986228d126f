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

#include "emprobe/presence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "emprobe/error.hpp"
#include "util/csv.hpp"

namespace emprobe {

LabeledSet labeled_features(std::span<const FeatureSeries> series) {
  LabeledSet out;
  for (const auto& s : series) {
    for (const auto& r : s.frames) {
      if (!r.short_l2 || !r.long_l2 || !r.short_ratio) {
        ++out.excluded;
        continue;
      }
      out.samples.push_back(
          LabeledFeature{{*r.short_l2, *r.long_l2, *r.short_ratio}, r.object_present, r.frame_index,
                         s.video_id});
    }
  }
  return out;
}

double rank_auc(std::span<const double> scores, std::span<const std::uint8_t> absent) {
  if (scores.size() != absent.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_absent = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (absent[order[k]]) {
        rank_sum += avg_rank;
        ++n_absent;
      }
    }
    i = j;
  }
  const std::size_t n_present = n - n_absent;
  if (n_absent == 0 || n_present == 0) {
    throw Error(ErrorCode::kDegenerate, "AUC needs both present and absent samples");
  }
  const double a = static_cast<double>(n_absent);
  return (rank_sum - a * (a + 1.0) / 2.0) / (a * static_cast<double>(n_present));
}

ThresholdFit fit_threshold_scores(std::span<const double> scores,
                                  std::span<const std::uint8_t> absent) {
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorCode::kNumeric, "NaN score in threshold fit");
  }
  const double raw_auc = rank_auc(scores, absent);  // also rejects single-class input
  const std::size_t n = scores.size();
  const double n_absent =
      static_cast<double>(std::count_if(absent.begin(), absent.end(), [](auto a) { return a; }));
  const double n_present = static_cast<double>(n) - n_absent;

  ThresholdFit fit;
  fit.absent_above = raw_auc >= 0.5;
  fit.auc = std::max(raw_auc, 1.0 - raw_auc);
  fit.threshold = -std::numeric_limits<double>::infinity();
  fit.balanced_accuracy = 0.5;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double absent_at_or_below = 0, present_at_or_below = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    const double v = scores[order[i]];
    while (j < n && scores[order[j]] == v) {
      (absent[order[j]] ? absent_at_or_below : present_at_or_below) += 1;
      ++j;
    }
    const double tpr = fit.absent_above ? (n_absent - absent_at_or_below) / n_absent
                                        : absent_at_or_below / n_absent;
    const double tnr = fit.absent_above ? present_at_or_below / n_present
                                        : (n_present - present_at_or_below) / n_present;
    const double bal = 0.5 * (tpr + tnr);
    if (bal > fit.balanced_accuracy) {
      fit.balanced_accuracy = bal;
      fit.threshold = v;
    }
    i = j;
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    correct += fit.predicts_absent(scores[i]) == static_cast<bool>(absent[i]);
  }
  fit.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return fit;
}

ThresholdFit fit_threshold(std::span<const LabeledFeature> samples, int feature_index) {
  if (feature_index < 0 || feature_index > 2) {
    throw Error(ErrorCode::kInvalidArgument, "feature index must be 0, 1 or 2");
  }
  std::vector<double> scores;
  std::vector<std::uint8_t> absent;
  scores.reserve(samples.size());
  for (const auto& s : samples) {
    scores.push_back(s.features[feature_index]);
    absent.push_back(!s.present);
  }
  return fit_threshold_scores(scores, absent);
}

bool LinearFit::predicts_absent(const std::array<double, 3>& x) const noexcept {
  return fit.predicts_absent(weights[0] * x[0] + weights[1] * x[1] + weights[2] * x[2]);
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Cholesky solve; returns false when a pivot is not clearly positive.
bool cholesky_solve(const Mat3& a, const std::array<double, 3>& b, std::array<double, 3>& x) {
  Mat3 l{};
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) scale = std::max(scale, std::abs(a[i][i]));
  if (scale == 0.0) return false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 1e-10 * scale) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  std::array<double, 3> y{};
  for (int i = 0; i < 3; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
    y[i] = s / l[i][i];
  }
  for (int i = 2; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < 3; ++k) s -= l[k][i] * x[k];
    x[i] = s / l[i][i];
  }
  return true;
}

}  // namespace

LinearFit fit_linear(std::span<const LabeledFeature> samples) {
  if (samples.size() < 4) throw Error(ErrorCode::kDegenerate, "fit_linear needs at least 4 samples");
  const std::size_t n = samples.size();
  std::array<double, 3> mean{}, sd{};
  for (const auto& s : samples) {
    for (int k = 0; k < 3; ++k) mean[k] += s.features[k];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& s : samples) {
    for (int k = 0; k < 3; ++k) sd[k] += (s.features[k] - mean[k]) * (s.features[k] - mean[k]);
  }
  for (auto& v : sd) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }

  std::array<double, 3> mu_present{}, mu_absent{};
  std::size_t n_present = 0, n_absent = 0;
  auto z = [&](const LabeledFeature& s, int k) { return (s.features[k] - mean[k]) / sd[k]; };
  for (const auto& s : samples) {
    auto& mu = s.present ? mu_present : mu_absent;
    (s.present ? n_present : n_absent)++;
    for (int k = 0; k < 3; ++k) mu[k] += z(s, k);
  }
  if (n_present == 0 || n_absent == 0) {
    throw Error(ErrorCode::kDegenerate, "fit_linear needs both present and absent samples");
  }
  for (int k = 0; k < 3; ++k) {
    mu_present[k] /= static_cast<double>(n_present);
    mu_absent[k] /= static_cast<double>(n_absent);
  }
  Mat3 pooled{};
  for (const auto& s : samples) {
    const auto& mu = s.present ? mu_present : mu_absent;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) pooled[i][j] += (z(s, i) - mu[i]) * (z(s, j) - mu[j]);
    }
  }
  const double dof = std::max<double>(1.0, static_cast<double>(n) - 2.0);
  for (auto& row : pooled) {
    for (auto& v : row) v /= dof;
  }
  std::array<double, 3> diff{};
  for (int k = 0; k < 3; ++k) diff[k] = mu_absent[k] - mu_present[k];

  LinearFit out;
  std::array<double, 3> w{};
  if (!cholesky_solve(pooled, diff, w)) {
    out.ridge_applied = true;
    for (int k = 0; k < 3; ++k) pooled[k][k] += kLdaRidge;
    if (!cholesky_solve(pooled, diff, w)) {
      // Every standardized feature is constant within both classes.
      w = diff;
    }
  }
  for (int k = 0; k < 3; ++k) w[k] /= sd[k];
  double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    w = {1.0, 0.0, 0.0};
    norm = 1.0;
  }
  for (auto& v : w) v /= norm;
  out.weights = w;

  std::vector<double> scores;
  std::vector<std::uint8_t> absent;
  for (const auto& s : samples) {
    scores.push_back(w[0] * s.features[0] + w[1] * s.features[1] + w[2] * s.features[2]);
    absent.push_back(!s.present);
  }
  out.fit = fit_threshold_scores(scores, absent);

  int best_axis = -1;
  ThresholdFit best_single;
  for (int k = 0; k < 3; ++k) {
    ThresholdFit f = fit_threshold(samples, k);
    if (best_axis < 0 || f.balanced_accuracy > best_single.balanced_accuracy) {
      best_axis = k;
      best_single = f;
    }
  }
  if (best_single.balanced_accuracy > out.fit.balanced_accuracy) {
    out.fallback_axis = best_axis;
    out.weights = {0.0, 0.0, 0.0};
    out.weights[best_axis] = 1.0;
    out.fit = best_single;
  }
  out.bias = -out.fit.threshold;
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "box stats of no values");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return BoxStats{values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back(),
                  values.size()};
}

SeparabilityReport separability_report(std::span<const FeatureSeries> series, Position position) {
  if (series.empty()) throw Error(ErrorCode::kInvalidArgument, "separability report of no series");
  SeparabilityReport report;
  report.position = position;
  report.series_count = series.size();
  for (const auto& s : series) {
    if (s.position != position) {
      throw Error(ErrorCode::kInvalidArgument, "series '" + s.video_id + "' is for position " +
                                                   std::to_string(to_index(s.position)));
    }
  }

  // frame -> feature -> label -> values
  std::map<std::uint32_t, std::array<std::array<std::vector<double>, 2>, 3>> per_frame;
  for (const auto& s : series) {
    for (const auto& r : s.frames) {
      auto& slot = per_frame[r.frame_index];
      const std::optional<double>* vals[3] = {&r.short_l2, &r.long_l2, &r.short_ratio};
      for (int k = 0; k < 3; ++k) {
        if (*vals[k]) slot[k][r.object_present ? 0 : 1].push_back(**vals[k]);
      }
    }
  }
  for (auto& [frame, slot] : per_frame) {
    FrameDistribution d;
    d.frame_index = frame;
    for (int k = 0; k < 3; ++k) {
      if (!slot[k][0].empty()) d.present[k] = box_stats(std::move(slot[k][0]));
      if (!slot[k][1].empty()) d.absent[k] = box_stats(std::move(slot[k][1]));
    }
    report.frames.push_back(std::move(d));
  }

  const LabeledSet set = labeled_features(series);
  report.sample_count = set.samples.size();
  report.excluded_count = set.excluded;
  for (const auto& s : set.samples) (s.present ? report.present_count : report.absent_count)++;
  if (report.present_count == 0 || report.absent_count == 0) {
    report.degenerate_labels = true;
    report.note = "degenerate labels: only one class among defined frames; classifiers skipped";
    return report;
  }
  for (int k = 0; k < 3; ++k) report.single[k] = fit_threshold(set.samples, k);
  if (set.samples.size() >= 4) {
    report.linear = fit_linear(set.samples);
  } else {
    report.note = "fewer than 4 samples; linear classifier skipped";
  }
  return report;
}

namespace {

nlohmann::ordered_json threshold_json(const ThresholdFit& f) {
  nlohmann::ordered_json j;
  j["threshold"] = std::isfinite(f.threshold) ? nlohmann::ordered_json(f.threshold)
                                              : nlohmann::ordered_json("-inf");
  j["absent_above"] = f.absent_above;
  j["balanced_accuracy"] = f.balanced_accuracy;
  j["accuracy"] = f.accuracy;
  j["auc"] = f.auc;
  return j;
}

}  // namespace

std::string report_json(const SeparabilityReport& r) {
  nlohmann::ordered_json j;
  j["position"] = to_index(r.position);
  j["series_count"] = r.series_count;
  j["sample_count"] = r.sample_count;
  j["present_count"] = r.present_count;
  j["absent_count"] = r.absent_count;
  j["excluded_count"] = r.excluded_count;
  j["degenerate_labels"] = r.degenerate_labels;
  j["note"] = r.note;
  nlohmann::ordered_json single = nlohmann::ordered_json::object();
  for (int k = 0; k < 3; ++k) {
    single[kFeatureNames[k]] = r.single[k] ? threshold_json(*r.single[k]) : nlohmann::ordered_json();
  }
  j["single_feature"] = std::move(single);
  if (r.linear) {
    nlohmann::ordered_json lin = threshold_json(r.linear->fit);
    lin["weights"] = r.linear->weights;
    lin["bias"] = std::isfinite(r.linear->bias) ? nlohmann::ordered_json(r.linear->bias)
                                                : nlohmann::ordered_json("inf");
    lin["ridge_applied"] = r.linear->ridge_applied;
    lin["fallback_axis"] = r.linear->fallback_axis ? nlohmann::ordered_json(*r.linear->fallback_axis)
                                                   : nlohmann::ordered_json();
    j["linear"] = std::move(lin);
  } else {
    j["linear"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string distribution_csv(const SeparabilityReport& r) {
  std::string out = "frame,feature,label,count,min,q1,median,q3,max\n";
  for (const auto& d : r.frames) {
    for (int k = 0; k < 3; ++k) {
      for (int label = 0; label < 2; ++label) {
        const auto& b = label == 0 ? d.present[k] : d.absent[k];
        if (!b) continue;
        out += std::to_string(d.frame_index) + ',' + kFeatureNames[k] + ',' +
               (label == 0 ? "present" : "absent") + ',' + std::to_string(b->count) + ',' +
               util::format_double(b->min) + ',' + util::format_double(b->q1) + ',' +
               util::format_double(b->median) + ',' + util::format_double(b->q3) + ',' +
               util::format_double(b->max) + '\n';
      }
    }
  }
  return out;
}

}  // namespace emprobe
