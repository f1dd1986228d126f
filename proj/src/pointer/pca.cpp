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
#include <numeric>

#include "emprobe/error.hpp"
#include "emprobe/pointer_lab.hpp"
#include "util/csv.hpp"

namespace emprobe {

namespace {

// Cyclic Jacobi rotations on a symmetric matrix. On return `a` is (nearly)
// diagonal and the columns of `v` are its eigenvectors.
void jacobi_eigen(Matrix& a, Matrix& v) {
  const std::size_t n = a.rows;
  v = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  double total = 0.0;
  for (double x : a.data) total += x * x;
  if (total == 0.0) return;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off <= 1e-30 * total) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(dot(v, v));
  for (auto& x : v) x /= norm;
}

void apply_sign_convention(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0) {
    for (auto& x : v) x = -x;
  }
}

}  // namespace

PcaProjection pca2(const Matrix& points) {
  const std::size_t n = points.rows, d = points.cols;
  if (n < 2) throw Error(ErrorCode::kDegenerate, "pca2 needs at least two points");
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "pca2 needs at least two dimensions");
  for (double x : points.data) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNumeric, "non-finite coordinate in pca2 input");
  }

  PcaProjection out;
  out.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.mean[c] += points(r, c);
  }
  for (auto& m : out.mean) m /= static_cast<double>(n);
  Matrix x(n, d);
  double scale = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      x(r, c) = points(r, c) - out.mean[c];
      scale = std::max(scale, std::abs(points(r, c)));
    }
  }
  const double denom = static_cast<double>(n - 1);
  for (double v : x.data) out.total_variance += v * v;
  out.total_variance /= denom;

  // Eigen-decompose the smaller of the Gram (n x n) and scatter (d x d) matrices.
  const bool gram = n <= d;
  const std::size_t m = gram ? n : d;
  Matrix s(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double acc = 0.0;
      if (gram) {
        acc = dot(x.row(i), x.row(j));
      } else {
        for (std::size_t r = 0; r < n; ++r) acc += x(r, i) * x(r, j);
      }
      s(i, j) = s(j, i) = acc;
    }
  }
  Matrix vecs;
  jacobi_eigen(s, vecs);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s(a, a) > s(b, b); });

  const double lambda1 = std::max(0.0, s(order[0], order[0]));
  const double lambda2 = m > 1 ? std::max(0.0, s(order[1], order[1])) : 0.0;
  if (lambda1 <= 1e-24 * scale * scale * static_cast<double>(n * d)) {
    throw Error(ErrorCode::kDegenerate, "pca2 input has no spread in any direction");
  }

  auto axis = [&](std::size_t k, double lambda) {
    std::vector<double> v(d, 0.0);
    if (gram) {
      for (std::size_t r = 0; r < n; ++r) {
        const double u = vecs(r, order[k]);
        for (std::size_t c = 0; c < d; ++c) v[c] += u * x(r, c);
      }
      for (auto& e : v) e /= std::sqrt(lambda);
    } else {
      for (std::size_t c = 0; c < d; ++c) v[c] = vecs(c, order[k]);
    }
    return v;
  };
  out.components[0] = axis(0, lambda1);
  normalize(out.components[0]);
  if (lambda2 > 1e-12 * lambda1) {
    out.components[1] = axis(1, lambda2);
  } else {
    // Rank-one data: any unit vector orthogonal to the first axis.
    const auto& c0 = out.components[0];
    std::size_t j = 0;
    for (std::size_t i = 1; i < d; ++i) {
      if (std::abs(c0[i]) < std::abs(c0[j])) j = i;
    }
    out.components[1].assign(d, 0.0);
    out.components[1][j] = 1.0;
  }
  {
    auto& c1 = out.components[1];
    const double p = dot(c1, out.components[0]);
    for (std::size_t i = 0; i < d; ++i) c1[i] -= p * out.components[0][i];
    normalize(c1);
  }
  for (auto& c : out.components) apply_sign_convention(c);
  out.explained_variance = {lambda1 / denom, lambda2 / denom};

  out.projections = Matrix(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < 2; ++k) out.projections(r, k) = dot(x.row(r), out.components[k]);
  }
  return out;
}

std::string pca_csv(const PcaProjection& pca, const PointerSet& set) {
  std::string out = "index,video_id,frame,pc1,pc2\n";
  for (std::size_t r = 0; r < pca.projections.rows; ++r) {
    out += std::to_string(r) + ',' + (r < set.video_ids.size() ? set.video_ids[r] : "") + ',' +
           (r < set.frame_indices.size() ? std::to_string(set.frame_indices[r]) : "") + ',' +
           util::format_double(pca.projections(r, 0)) + ',' +
           util::format_double(pca.projections(r, 1)) + '\n';
  }
  return out;
}

}  // namespace emprobe
