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
#include <random>

#include <doctest.h>

#include "emprobe/error.hpp"
#include "emprobe/stream_metrics.hpp"
#include "oracles.hpp"

using namespace emprobe;

namespace {

Tensor random_tensor(std::mt19937_64& rng, const Shape& shape, float scale = 1.0f) {
  std::normal_distribution<float> n(0.0f, scale);
  std::vector<float> v(element_count(shape));
  for (auto& x : v) x = n(rng);
  return Tensor(shape, std::move(v));
}

std::vector<float> as_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

EmbeddingTrace trace_from(const std::vector<Tensor>& tensors, const std::vector<bool>& present) {
  EmbeddingTrace t;
  t.video_id = "m";
  t.positions = {{Position::kMemoryFeatures, tensors.front().shape()}};
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    FrameRecord r;
    r.frame_index = static_cast<std::uint32_t>(i);
    r.object_present = present[i];
    r.tensors.emplace(Position::kMemoryFeatures, tensors[i]);
    t.frames.push_back(std::move(r));
  }
  return t;
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_SUITE("stream metrics") {

TEST_CASE("single reference gives the plain mean and unit sigma") {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const auto s = window_stats(std::span<const Tensor>(&a, 1), 1);
  CHECK(s.w_effective == 1);
  CHECK(s.mean == std::vector<double>{1, 2, 3, 4});
  CHECK(s.sigma == std::vector<double>(4, 1.0));
  CHECK(regularized_l2(a, s) == 0.0);
}

TEST_CASE("identical references floor the variance") {
  const std::vector<Tensor> refs(5, Tensor({3}, {1, 1, 1}));
  const auto s = window_stats(refs, 5);
  CHECK(s.w_effective == 5);
  for (double v : s.sigma) CHECK(v == kSigmaFloor);
}

TEST_CASE("window uses only the most recent references") {
  std::vector<Tensor> refs;
  for (float v : {100.0f, 1.0f, 3.0f}) refs.emplace_back(Shape{1}, std::vector<float>{v});
  const auto s = window_stats(refs, 2);
  CHECK(s.w_effective == 2);
  CHECK(s.mean[0] == 2.0);
  CHECK(s.sigma[0] == 1.0);
  const auto all = window_stats(refs, 5);
  CHECK(all.w_effective == 3);
}

TEST_CASE("worked distance example") {
  const Tensor f({2}, {2, 2});
  const Tensor m({2}, {1, 1});
  CHECK(regularized_l2(f, window_stats(std::span<const Tensor>(&m, 1), 1)) == 1.0);
}

TEST_CASE("bad window inputs") {
  const std::vector<Tensor> none;
  CHECK_THROWS_AS(window_stats(none, 1), Error);
  const std::vector<Tensor> mixed = {Tensor({2}), Tensor({3})};
  CHECK_THROWS_AS(window_stats(mixed, 2), Error);
  const std::vector<Tensor> one = {Tensor({2})};
  CHECK_THROWS_AS(window_stats(one, 0), Error);
  const auto s = window_stats(one, 1);
  CHECK_THROWS_AS(regularized_l2(Tensor({3}), s), Error);
  const Tensor bad({2}, {std::nanf(""), 0.0f});
  try {
    regularized_l2(bad, s);
    FAIL("expected numeric error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumeric);
  }
}

TEST_CASE("window statistics and distance match the loop oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const Shape shape = {1 + static_cast<std::uint32_t>(rng() % 8), 1 + static_cast<std::uint32_t>(rng() % 6),
                         1 + static_cast<std::uint32_t>(rng() % 6)};
    const std::size_t nrefs = 1 + rng() % 7;
    const std::size_t w = 1 + rng() % 6;
    std::vector<Tensor> refs;
    std::vector<std::vector<float>> raw;
    for (std::size_t r = 0; r < nrefs; ++r) {
      refs.push_back(random_tensor(rng, shape, 2.0f));
      raw.push_back(as_vector(refs.back()));
    }
    const Tensor f = random_tensor(rng, shape, 3.0f);
    const auto s = window_stats(refs, w);
    const auto o = oracle::window(raw, w, kSigmaFloor);
    for (std::size_t e = 0; e < o.mean.size(); ++e) {
      REQUIRE(std::abs(s.mean[e] - o.mean[e]) <= 1e-6 * std::max(1.0, std::abs(o.mean[e])));
      REQUIRE(rel_close(s.sigma[e], o.sigma[e], 1e-6));
    }
    REQUIRE(rel_close(regularized_l2(f, s), oracle::regularized_l2(as_vector(f), o), 1e-6));
  }
}

TEST_CASE("distance is zero at the mean and grows with any single deviation") {
  std::mt19937_64 rng(4);
  std::vector<Tensor> refs = {random_tensor(rng, {4, 4, 4}), random_tensor(rng, {4, 4, 4}),
                              random_tensor(rng, {4, 4, 4})};
  const auto s = window_stats(refs, 5);
  std::vector<float> at_mean(s.mean.begin(), s.mean.end());
  CHECK(regularized_l2(Tensor({4, 4, 4}, at_mean), s) < 1e-6);
  double last = -1.0;
  for (float d : {0.1f, 0.5f, 1.0f, 4.0f}) {
    auto v = at_mean;
    v[17] += d;
    const double l2 = regularized_l2(Tensor({4, 4, 4}, v), s);
    CHECK(l2 > last);
    last = l2;
  }
}

TEST_CASE("short distance is scale-equivariant") {
  std::mt19937_64 rng(8);
  const Tensor a = random_tensor(rng, {3, 5});
  const Tensor b = random_tensor(rng, {3, 5});
  const double base = regularized_l2(b, window_stats(std::span<const Tensor>(&a, 1), 1));
  for (float c : {-2.0f, 0.5f, 3.0f}) {
    std::vector<float> sa = as_vector(a), sb = as_vector(b);
    for (auto& x : sa) x *= c;
    for (auto& x : sb) x *= c;
    const Tensor ta({3, 5}, sa);
    const double scaled = regularized_l2(Tensor({3, 5}, sb), window_stats(std::span<const Tensor>(&ta, 1), 1));
    CHECK(scaled == doctest::Approx(std::abs(c) * base).epsilon(1e-6));
  }
}

TEST_CASE("constant trace: zero distance, unit ratio, undefined boundary") {
  const std::vector<Tensor> tensors(6, Tensor({2, 2, 2}, std::vector<float>(8, 0.7f)));
  const auto s = frame_features(trace_from(tensors, std::vector<bool>(6, true)), Position::kMemoryFeatures);
  REQUIRE(s.frames.size() == 6);
  CHECK_FALSE(s.frames[0].short_l2.has_value());
  CHECK_FALSE(s.frames[0].long_l2.has_value());
  CHECK_FALSE(s.frames[0].short_ratio.has_value());
  CHECK(s.frames[1].short_l2 == std::optional<double>(0.0));
  CHECK_FALSE(s.frames[1].short_ratio.has_value());
  for (std::size_t t = 2; t < 6; ++t) {
    CHECK(*s.frames[t].short_l2 == 0.0);
    CHECK(*s.frames[t].long_l2 == 0.0);
    CHECK(*s.frames[t].short_ratio == 1.0);
  }
}

TEST_CASE("full pipeline equals a naive reimplementation") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 14;
    std::vector<Tensor> tensors;
    std::vector<bool> present;
    for (std::size_t i = 0; i < n; ++i) {
      tensors.push_back(random_tensor(rng, {3, 2, 4}));
      present.push_back(i == 0 || rng() % 4 != 0);
    }
    const auto s = frame_features(trace_from(tensors, present), Position::kMemoryFeatures);

    std::vector<std::vector<float>> refs;
    std::optional<double> prev;
    for (std::size_t t = 0; t < n; ++t) {
      const auto& rec = s.frames[t];
      CHECK(rec.object_present == present[t]);
      if (t == 0) {
        CHECK_FALSE(rec.short_l2.has_value());
      } else {
        const auto f = as_vector(tensors[t]);
        const double sh = oracle::regularized_l2(f, oracle::window(refs, 1, kSigmaFloor));
        const double lo = oracle::regularized_l2(f, oracle::window(refs, 5, kSigmaFloor));
        REQUIRE(rec.short_l2.has_value());
        CHECK(rel_close(*rec.short_l2, sh, 1e-6));
        CHECK(rel_close(*rec.long_l2, lo, 1e-6));
        if (prev) {
          REQUIRE(rec.short_ratio.has_value());
          CHECK(rel_close(*rec.short_ratio, std::max(sh, 1e-6) / std::max(*prev, 1e-6), 1e-6));
        } else {
          CHECK_FALSE(rec.short_ratio.has_value());
        }
        prev = sh;
      }
      if (present[t]) refs.push_back(as_vector(tensors[t]));
    }
  }
}

TEST_CASE("absent frames never enter the reference list") {
  SynthTraceSpec spec;
  spec.positions = {{Position::kMemoryFeatures, {2, 2, 2}}};
  spec.shift_magnitude = 5.0;
  const auto trace = synth_trace(spec);
  FeatureOptions opts;
  std::size_t calls = 0;
  opts.on_references = [&](std::uint32_t frame, std::span<const std::uint32_t> refs) {
    ++calls;
    for (std::uint32_t r : refs) {
      CHECK(r < frame);
      CHECK_FALSE((r >= 12 && r < 16));
    }
    if (frame > 16) CHECK(refs.size() == frame - 4);
  };
  frame_features(trace, Position::kMemoryFeatures, opts);
  CHECK(calls == 27);
}

TEST_CASE("shifted window stands out in the short distance") {
  SynthTraceSpec spec;
  spec.positions = {{Position::kMemoryAttention, {4, 8, 8}}};
  spec.shift_magnitude = 5.0;
  spec.base_seed = 3;
  const auto s = frame_features(synth_trace(spec), Position::kMemoryAttention);
  double in = 0, out = 0;
  std::size_t nin = 0, nout = 0;
  for (const auto& r : s.frames) {
    if (!r.short_l2) continue;
    if (r.frame_index >= 12 && r.frame_index < 16) {
      in += *r.short_l2;
      ++nin;
    } else {
      out += *r.short_l2;
      ++nout;
    }
  }
  CHECK(in / nin >= 3.0 * (out / nout));
}

TEST_CASE("frames without a prior reference stay undefined") {
  std::mt19937_64 rng(1);
  std::vector<Tensor> tensors = {random_tensor(rng, {2}), random_tensor(rng, {2}), random_tensor(rng, {2})};
  const auto s = frame_features(trace_from(tensors, {false, false, true}), Position::kMemoryFeatures);
  for (const auto& r : s.frames) CHECK_FALSE(r.short_l2.has_value());
  CHECK_THROWS_AS(frame_features(trace_from(tensors, {true, true, true}), Position::kObjectPointer), Error);
}

TEST_CASE("feature computation is deterministic") {
  SynthTraceSpec spec;
  spec.positions = {{Position::kPromptAttention, {3, 4, 4}}};
  spec.shift_magnitude = 2.0;
  const auto trace = synth_trace(spec);
  CHECK(frame_features(trace, Position::kPromptAttention) == frame_features(trace, Position::kPromptAttention));
}

TEST_CASE("dataset average") {
  FeatureSeries a, b;
  a.position = b.position = Position::kMemoryFeatures;
  for (std::uint32_t i = 0; i < 3; ++i) {
    a.frames.push_back({i, std::nullopt, std::nullopt, std::nullopt, true});
    b.frames.push_back({i, std::nullopt, std::nullopt, std::nullopt, true});
  }
  a.frames[1].short_l2 = 1.0;
  b.frames[1].short_l2 = 3.0;
  a.frames[2].long_l2 = 5.0;

  SUBCASE("single series is unchanged") {
    const auto c = dataset_average(std::span<const FeatureSeries>(&a, 1));
    CHECK(c.short_l2[1] == std::optional<double>(1.0));
    CHECK(c.long_l2[2] == std::optional<double>(5.0));
    CHECK_FALSE(c.short_l2[0].has_value());
  }
  SUBCASE("means over defined values with contributor counts") {
    const std::vector<FeatureSeries> both = {a, b};
    const auto c = dataset_average(both);
    CHECK(c.short_l2[1] == std::optional<double>(2.0));
    CHECK(c.short_count[1] == 2);
    CHECK(c.long_l2[2] == std::optional<double>(5.0));
    CHECK(c.long_count[2] == 1);
    CHECK(c.ratio_count[2] == 0);
    CHECK(c.frame_index == std::vector<std::uint32_t>{0, 1, 2});
  }
  SUBCASE("mismatched or empty input") {
    FeatureSeries shorter = a;
    shorter.frames.pop_back();
    const std::vector<FeatureSeries> bad = {a, shorter};
    CHECK_THROWS_AS(dataset_average(bad), Error);
    CHECK_THROWS_AS(dataset_average(std::span<const FeatureSeries>()), Error);
  }
}

TEST_CASE("synthetic ensemble average plateaus exactly over the shifted frames") {
  std::vector<FeatureSeries> all;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthTraceSpec spec;
    spec.positions = {{Position::kObjectPointer, {1, 256}}};
    spec.shift_magnitude = 5.0;
    spec.base_seed = seed;
    all.push_back(frame_features(synth_trace(spec), Position::kObjectPointer));
  }
  const auto c = dataset_average(all);
  double max_out = 0, min_in = 1e300;
  for (std::size_t t = 1; t < c.frame_index.size(); ++t) {
    const bool inside = t >= 12 && t < 16;
    if (inside) min_in = std::min(min_in, *c.short_l2[t]);
    else if (t != 16) max_out = std::max(max_out, *c.short_l2[t]);
  }
  CHECK(min_in > 2.0 * max_out);
}

TEST_CASE("feature CSV round-trips") {
  SynthTraceSpec spec;
  spec.positions = {{Position::kMemoryFeatures, {2, 3, 3}}};
  spec.shift_magnitude = 1.5;
  spec.base_seed = 77;
  auto s = frame_features(synth_trace(spec), Position::kMemoryFeatures);
  const std::string csv = features_csv(s);
  CHECK(csv.rfind("frame,position,short_l2,long_l2,short_ratio,object_present\n", 0) == 0);
  CHECK(csv.find("\n0,5,,,,1\n") != std::string::npos);
  const auto back = parse_features_csv(csv, s.video_id);
  CHECK(back == s);
  CHECK_THROWS_AS(parse_features_csv("a,b\n"), Error);
}

}  // TEST_SUITE
