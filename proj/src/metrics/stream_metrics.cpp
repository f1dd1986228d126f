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

#include "emprobe/stream_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "emprobe/error.hpp"
#include "util/csv.hpp"

namespace emprobe {

WindowStats window_stats(std::span<const Tensor* const> refs, std::size_t w) {
  if (refs.empty()) throw Error(ErrorCode::kDegenerate, "window statistics need a reference");
  if (w == 0) throw Error(ErrorCode::kInvalidArgument, "window length must be >= 1");
  const std::size_t take = std::min(w, refs.size());
  const auto window = refs.subspan(refs.size() - take);
  const Shape& shape = window.front()->shape();
  for (const Tensor* t : window) {
    if (t->shape() != shape) {
      throw Error(ErrorCode::kInvalidArgument, "reference tensors differ in shape");
    }
  }
  const std::size_t n = element_count(shape);
  WindowStats stats{shape, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), take};

  for (const Tensor* t : window) {
    const auto v = t->values();
    for (std::size_t i = 0; i < n; ++i) stats.mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(take);
  for (auto& m : stats.mean) m *= inv;

  if (take == 1) {
    std::fill(stats.sigma.begin(), stats.sigma.end(), 1.0);
    return stats;
  }
  for (const Tensor* t : window) {
    const auto v = t->values();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = v[i] - stats.mean[i];
      stats.sigma[i] += d * d;
    }
  }
  for (auto& s : stats.sigma) s = std::max(s * inv, kSigmaFloor);
  return stats;
}

WindowStats window_stats(std::span<const Tensor> refs, std::size_t w) {
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(refs.size());
  for (const auto& t : refs) ptrs.push_back(&t);
  return window_stats(std::span<const Tensor* const>(ptrs), w);
}

double regularized_l2(const Tensor& f, const WindowStats& stats) {
  if (f.shape() != stats.shape) {
    throw Error(ErrorCode::kInvalidArgument, "tensor shape " + shape_to_string(f.shape()) +
                                                 " differs from window shape " +
                                                 shape_to_string(stats.shape));
  }
  const auto v = f.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double z = (v[i] - stats.mean[i]) / stats.sigma[i];
    sum += z * z;
  }
  if (std::isnan(sum)) throw Error(ErrorCode::kNumeric, "NaN in regularized L2 inputs");
  return v.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(v.size()));
}

FeatureSeries frame_features(const EmbeddingTrace& trace, Position position,
                             const FeatureOptions& options) {
  if (!trace.declares(position)) {
    throw Error(ErrorCode::kInvalidArgument, "trace '" + trace.video_id +
                                                 "' has no position " +
                                                 std::to_string(to_index(position)));
  }
  FeatureSeries series;
  series.video_id = trace.video_id;
  series.position = position;

  std::vector<const Tensor*> refs;
  std::vector<std::uint32_t> ref_frames;
  std::optional<double> prev_short;
  for (std::size_t t = 0; t < trace.frames.size(); ++t) {
    const FrameRecord& frame = trace.frames[t];
    FeatureRecord rec;
    rec.frame_index = frame.frame_index;
    rec.object_present = frame.object_present;
    const Tensor& current = frame.at(position);
    if (t > 0) {
      if (options.on_references) options.on_references(frame.frame_index, ref_frames);
      if (!refs.empty()) {
        rec.short_l2 = regularized_l2(current, window_stats(refs, options.short_window));
        rec.long_l2 = regularized_l2(current, window_stats(refs, options.long_window));
        if (prev_short) {
          rec.short_ratio = std::max(*rec.short_l2, options.epsilon) /
                            std::max(*prev_short, options.epsilon);
        }
        prev_short = rec.short_l2;
      }
    }
    if (frame.object_present) {
      refs.push_back(&current);
      ref_frames.push_back(frame.frame_index);
    }
    series.frames.push_back(rec);
  }
  return series;
}

AverageCurves dataset_average(std::span<const FeatureSeries> series) {
  if (series.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset_average of no series");
  const std::size_t len = series.front().frames.size();
  for (const auto& s : series) {
    if (s.frames.size() != len || s.position != series.front().position) {
      throw Error(ErrorCode::kInvalidArgument,
                  "series '" + s.video_id + "' differs in length or position");
    }
  }
  AverageCurves out;
  out.position = series.front().position;
  for (std::size_t t = 0; t < len; ++t) {
    double sums[3] = {0, 0, 0};
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& s : series) {
      const auto& r = s.frames[t];
      const std::optional<double>* vals[3] = {&r.short_l2, &r.long_l2, &r.short_ratio};
      for (int k = 0; k < 3; ++k) {
        if (*vals[k]) {
          sums[k] += **vals[k];
          ++counts[k];
        }
      }
    }
    auto mean = [&](int k) -> std::optional<double> {
      if (counts[k] == 0) return std::nullopt;
      return sums[k] / static_cast<double>(counts[k]);
    };
    out.frame_index.push_back(series.front().frames[t].frame_index);
    out.short_l2.push_back(mean(0));
    out.long_l2.push_back(mean(1));
    out.short_ratio.push_back(mean(2));
    out.short_count.push_back(counts[0]);
    out.long_count.push_back(counts[1]);
    out.ratio_count.push_back(counts[2]);
  }
  return out;
}

std::string features_csv(const FeatureSeries& series) {
  std::string out = "frame,position,short_l2,long_l2,short_ratio,object_present\n";
  const std::string pos = std::to_string(to_index(series.position));
  for (const auto& r : series.frames) {
    out += std::to_string(r.frame_index);
    out += ',' + pos;
    out += ',' + util::format_optional(r.short_l2);
    out += ',' + util::format_optional(r.long_l2);
    out += ',' + util::format_optional(r.short_ratio);
    out += r.object_present ? ",1\n" : ",0\n";
  }
  return out;
}

FeatureSeries parse_features_csv(const std::string& text, std::string video_id) {
  const auto lines = util::split_lines(text);
  if (lines.empty() || lines.front() != "frame,position,short_l2,long_l2,short_ratio,object_present") {
    throw Error(ErrorCode::kFormat, "not a feature CSV");
  }
  FeatureSeries s;
  s.video_id = std::move(video_id);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = util::split_line(lines[i]);
    if (cells.size() != 6) throw Error(ErrorCode::kFormat, "feature CSV row needs 6 cells");
    FeatureRecord r;
    r.frame_index = static_cast<std::uint32_t>(util::parse_double(cells[0]));
    s.position = position_from_index(static_cast<int>(util::parse_double(cells[1])));
    r.short_l2 = util::parse_optional(cells[2]);
    r.long_l2 = util::parse_optional(cells[3]);
    r.short_ratio = util::parse_optional(cells[4]);
    r.object_present = cells[5] == "1";
    s.frames.push_back(r);
  }
  return s;
}

}  // namespace emprobe
