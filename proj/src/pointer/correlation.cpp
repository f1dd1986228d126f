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
#include "emprobe/pointer_lab.hpp"
#include "util/csv.hpp"

namespace emprobe {

PointerSet collect_pointers(std::span<const EmbeddingTrace> traces) {
  std::size_t rows = 0;
  for (const auto& t : traces) {
    if (!t.declares(Position::kObjectPointer)) {
      throw Error(ErrorCode::kInvalidArgument, "trace '" + t.video_id + "' has no object pointer");
    }
    if (element_count(t.shape_of(Position::kObjectPointer)) != kPointerDim) {
      throw Error(ErrorCode::kInvalidArgument, "trace '" + t.video_id + "' pointer is not 256-d");
    }
    rows += t.frames.size();
  }
  PointerSet set;
  set.pointers = Matrix(rows, kPointerDim);
  std::size_t r = 0;
  for (const auto& t : traces) {
    for (const auto& f : t.frames) {
      const auto v = f.at(Position::kObjectPointer).values();
      for (std::size_t c = 0; c < kPointerDim; ++c) set.pointers(r, c) = v[c];
      set.frame_indices.push_back(f.frame_index);
      set.video_ids.push_back(t.video_id);
      ++r;
    }
  }
  return set;
}

std::vector<double> pointer_distance_series(const EmbeddingTrace& a, const EmbeddingTrace& b) {
  if (a.frames.size() != b.frames.size()) {
    throw Error(ErrorCode::kInvalidArgument, "traces differ in frame count (" +
                                                 std::to_string(a.frames.size()) + " vs " +
                                                 std::to_string(b.frames.size()) + ")");
  }
  std::vector<double> out;
  out.reserve(a.frames.size());
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    const auto pa = a.frames[t].at(Position::kObjectPointer).values();
    const auto pb = b.frames[t].at(Position::kObjectPointer).values();
    if (pa.size() != pb.size()) throw Error(ErrorCode::kInvalidArgument, "pointer sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
      s += d * d;
    }
    out.push_back(std::sqrt(s));
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "pearson inputs differ in length");
  if (x.size() < 3) throw Error(ErrorCode::kInvalidArgument, "pearson needs at least 3 pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::kDegenerate, "correlation undefined: an input has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation obscuration_correlation(std::span<const double> distances,
                                    std::span<const double> percents) {
  Correlation out;
  out.pearson_r = pearson(distances, percents);
  out.scatter_csv = "distance,obscuration_percent\n";
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out.scatter_csv += util::format_double(distances[i]) + ',' + util::format_double(percents[i]) + '\n';
  }
  return out;
}

}  // namespace emprobe
