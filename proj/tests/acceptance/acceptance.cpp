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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "emprobe/forge.hpp"
#include "emprobe/pointer_lab.hpp"
#include "emprobe/presence.hpp"
#include "emprobe/stream_metrics.hpp"
#include "emprobe/trace.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#ifndef EMPROBE_CLI
#error "EMPROBE_CLI must name the command-line tool"
#endif

using namespace emprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && pass) detail << "[first failure: " << what << "] ";
    pass = pass && cond;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_root;

// ---- A1 -------------------------------------------------------------------

void a1(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0xa1);
  std::size_t frames = 0, violations = 0, mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const auto t = fixture::random_trace(rng, 8);
    frames += t.frames.size();
    const std::string bytes = fixture::encode(t);
    if (!bit_identical(fixture::decode(bytes), t)) ++mismatches;
    violations += fixture::validate(bytes).violations.size();
  }
  const double secs = seconds_since(t0);
  o.expect(mismatches == 0, "bit-exact round trip");
  o.expect(violations == 0, "zero validator violations");
  o.expect(secs < 10.0, "runtime < 10 s");
  o.detail << "200 traces, " << frames << " frames, mismatches=" << mismatches
           << ", violations=" << violations << ", " << secs << " s";
}

// ---- A2 -------------------------------------------------------------------

void a2(Outcome& o) {
  std::mt19937_64 rng(0xa2);
  std::normal_distribution<float> g(0.0f, 1.0f);
  double worst = 0.0;
  auto rel = [](double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / scale;
  };
  for (int i = 0; i < 1000; ++i) {
    const Shape shape = {1 + static_cast<std::uint32_t>(rng() % 32), 1 + static_cast<std::uint32_t>(rng() % 16),
                         1 + static_cast<std::uint32_t>(rng() % 16)};
    const std::size_t n = element_count(shape);
    const std::size_t nrefs = 1 + rng() % 6;
    const std::size_t w = 1 + rng() % 5;
    const float scale = 0.1f + static_cast<float>(rng() % 50);
    std::vector<Tensor> refs;
    std::vector<std::vector<float>> raw;
    for (std::size_t r = 0; r < nrefs; ++r) {
      std::vector<float> v(n);
      for (auto& x : v) x = scale * g(rng);
      raw.push_back(v);
      refs.emplace_back(shape, std::move(v));
    }
    std::vector<float> f(n);
    for (auto& x : f) x = scale * g(rng);
    const auto stats = window_stats(refs, w);
    const auto ref = oracle::window(raw, w, kSigmaFloor);
    for (std::size_t e = 0; e < n; ++e) {
      // Means near zero are compared on the data's own scale.
      worst = std::max(worst, std::abs(stats.mean[e] - ref.mean[e]) / std::max(1e-12, std::max<double>(scale, std::abs(ref.mean[e]))));
      worst = std::max(worst, rel(stats.sigma[e], ref.sigma[e]));
    }
    worst = std::max(worst, rel(regularized_l2(Tensor(shape, f), stats), oracle::regularized_l2(f, ref)));
  }
  o.expect(worst <= 1e-6, "relative error <= 1e-6");
  o.detail << "1000 tensors up to [32,16,16], max relative error " << worst;
}

// ---- A3 -------------------------------------------------------------------

std::size_t find_video(const VideoPool& pool, const std::string& id) {
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool.id(i) == id) return i;
  throw std::runtime_error("unknown pool video " + id);
}

bool same_pixel(const RgbImage& a, const RgbImage& b, int x, int y) {
  return std::equal(a.at(x, y), a.at(x, y) + 3, b.at(x, y));
}

void a3(Outcome& o) {
  const auto t0 = Clock::now();
  SyntheticPool pool({24, 28, 128, 128, 0xa3});
  std::size_t checked_frames = 0, percent_checks = 0;

  for (std::size_t i = 0; i < 50; ++i) {
    const auto v = forge_sample(pool, Transform::kInterjection, 3000, i);
    bool ok = v.frames.size() == 28;
    for (std::size_t t = 0; ok && t < 28; ++t) {
      ok = v.manifest.frames[t].object_present == !(t >= 12 && t < 16);
    }
    o.expect(ok, "interjection 12+4+12 with frames 12-15 absent");
  }

  for (std::size_t i = 0; i < 50; ++i) {
    const auto v = forge_sample(pool, Transform::kObjectRemoval, 4000, i);
    const auto base = pool.load(find_video(pool, v.manifest.sources.at(0)));
    bool ok = v.frames.size() == 28;
    for (std::size_t t = 12; ok && t < 16; ++t) {
      ok = v.frames[t] == base.frames[t] && !v.manifest.frames[t].object_present;
    }
    o.expect(ok, "object-removal interjection frames bit-identical to base");
  }

  for (std::size_t i = 0; i < 50; ++i) {
    const auto v = forge_sample(pool, Transform::kContextRemoval, 5000, i);
    const auto base = pool.load(find_video(pool, v.manifest.sources.at(0)));
    bool ok = v.frames.size() == 28;
    for (std::size_t t = 0; ok && t < 28; ++t) {
      ok = v.manifest.frames[t].object_present;
      for (int y = 0; ok && y < base.height(); ++y)
        for (int x = 0; ok && x < base.width(); ++x)
          if (base.masks[t].get(x, y)) ok = same_pixel(v.frames[t], base.frames[t], x, y);
      ++checked_frames;
    }
    o.expect(ok, "context-removal object pixels identical and all present");
  }

  // Percent from the forged ground truth: occluded = |object| - |visible|.
  for (Transform tr : {Transform::kObscuration, Transform::kOverlay3}) {
    for (std::size_t i = 0; i < 50; ++i) {
      const auto v = forge_sample(pool, tr, 6000, i);
      const auto base = pool.load(find_video(pool, v.manifest.sources.at(0)));
      bool ok = true;
      for (std::size_t t = 0; t < v.frames.size(); ++t) {
        const double object = static_cast<double>(base.masks[t].count());
        const double visible = static_cast<double>(v.gt_masks[t].count());
        const auto& p = v.manifest.frames[t].obscuration_percent;
        ok = ok && p.has_value() && *p == (object - visible) / object;
        ++percent_checks;
      }
      o.expect(ok, "obscuration_percent equals the pixel-count oracle");
    }
  }

  // Direct sweeps with placements known to the oracle.
  for (std::uint64_t s = 0; s < 50; ++s) {
    SynthVideoSpec spec;
    spec.seed = s;
    spec.velocity_x = static_cast<double>(s % 3) - 1.0;
    const auto base = synth_video(spec);
    SynthVideoSpec dspec;
    dspec.seed = s + 1000;
    dspec.shape = ObjectShape::kSquare;
    dspec.size = 6 + static_cast<int>(s % 10);
    const auto donor = donor_cutout(synth_video(dspec), base.width());
    Path path;
    const auto box = bounds(base.masks[0]);
    for (int t = 0; t < 28; ++t) {
      path.push_back({std::clamp(box.x0 - donor.width() + 2 * t, 0, base.width() - donor.width()),
                      std::clamp(box.y0 + static_cast<int>(s % 5) - 2, 0, base.height() - donor.height())});
    }
    const auto v = forge_obscuration(base, donor, path);
    bool ok = true;
    for (std::size_t t = 0; t < 28; ++t) {
      std::size_t object = 0, overlap = 0;
      for (int y = 0; y < base.height(); ++y)
        for (int x = 0; x < base.width(); ++x) {
          if (!base.masks[t].get(x, y)) continue;
          ++object;
          const int dx = x - path[t].x, dy = y - path[t].y;
          overlap += dx >= 0 && dy >= 0 && dx < donor.width() && dy < donor.height() && donor.mask.get(dx, dy);
        }
      ok = ok && *v.manifest.frames[t].obscuration_percent ==
                     static_cast<double>(overlap) / static_cast<double>(object);
      ++percent_checks;
    }
    o.expect(ok, "swept obscuration matches the per-pixel count");
  }

  const double secs = seconds_since(t0);
  o.expect(secs < 60.0, "runtime < 60 s");
  o.detail << "50 samples per transform, " << checked_frames << " context frames, " << percent_checks
           << " percent checks, " << secs << " s";
}

// ---- A4 -------------------------------------------------------------------

struct EnsembleResult {
  double inside = 0, outside = 0, linear_accuracy = 0, linear_auc = 0;
  std::array<double, 3> auc{};
};

EnsembleResult ensemble(Position pos, const Shape& shape, double shift) {
  std::vector<FeatureSeries> all;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthTraceSpec spec;
    spec.video_id = "e" + std::to_string(seed);
    spec.positions = {{pos, shape}};
    spec.shift_magnitude = shift;
    spec.base_seed = 0xa4000 + seed;
    all.push_back(frame_features(synth_trace(spec), pos));
  }
  EnsembleResult r;
  double si = 0, so = 0;
  std::size_t ni = 0, no = 0;
  for (const auto& s : all)
    for (const auto& f : s.frames) {
      if (!f.short_l2) continue;
      if (f.frame_index >= 12 && f.frame_index < 16) {
        si += *f.short_l2;
        ++ni;
      } else {
        so += *f.short_l2;
        ++no;
      }
    }
  r.inside = si / ni;
  r.outside = so / no;
  const auto report = separability_report(all, pos);
  if (report.linear) {
    r.linear_accuracy = report.linear->fit.accuracy;
    r.linear_auc = report.linear->fit.auc;
  }
  const auto set = labeled_features(all);
  std::vector<std::uint8_t> absent;
  for (const auto& s : set.samples) absent.push_back(!s.present);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> col;
    for (const auto& s : set.samples) col.push_back(s.features[k]);
    r.auc[k] = rank_auc(col, absent);
  }
  return r;
}

void a4(Outcome& o) {
  const auto t0 = Clock::now();
  const std::pair<Position, Shape> cases[] = {{Position::kObjectPointer, {1, 256}},
                                              {Position::kMemoryAttention, {16, 16, 16}}};
  for (const auto& [pos, shape] : cases) {
    const auto hot = ensemble(pos, shape, 5.0);
    const auto cold = ensemble(pos, shape, 0.0);
    o.expect(hot.inside >= 3.0 * hot.outside, "inside >= 3x outside");
    o.expect(hot.linear_accuracy == 1.0, "linear accuracy 1.0");
    for (double a : cold.auc) o.expect(a >= 0.45 && a <= 0.55, "0-sigma AUC in [0.45, 0.55]");
    o.detail << "pos" << to_index(pos) << ": inside/outside=" << hot.inside / hot.outside
             << " linear_acc=" << hot.linear_accuracy << " auc0=[" << cold.auc[0] << "," << cold.auc[1]
             << "," << cold.auc[2] << "] linear_auc0=" << cold.linear_auc << "; ";
  }
  const double secs = seconds_since(t0);
  o.expect(secs < 60.0, "runtime < 60 s");
  o.detail << secs << " s";
}

// ---- A5 -------------------------------------------------------------------

void a5(Outcome& o) {
  std::mt19937_64 rng(0xa5);
  std::normal_distribution<double> g;
  double eig_err = 0, comp_err = 0, shift_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix m(20, 256);
    for (auto& v : m.data) v = g(rng);
    const auto p = pca2(m);

    Eigen::MatrixXd x(20, 256);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 256; ++c) x(r, c) = m(r, c);
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 19.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    for (int k = 0; k < 2; ++k) {
      const double lambda = es.eigenvalues()(255 - k);
      eig_err = std::max(eig_err, std::abs(lambda - p.explained_variance[k]));
      Eigen::VectorXd v = es.eigenvectors().col(255 - k);
      Eigen::Index arg;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) v = -v;
      for (int c = 0; c < 256; ++c) comp_err = std::max(comp_err, std::abs(v(c) - p.components[k][c]));
    }

    Matrix shifted = m;
    std::vector<double> offset(256);
    for (auto& d : offset) d = 100.0 * g(rng);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 256; ++c) shifted(r, c) += offset[c];
    const auto q = pca2(shifted);
    for (std::size_t i = 0; i < p.projections.data.size(); ++i) {
      shift_err = std::max(shift_err, std::abs(p.projections.data[i] - q.projections.data[i]));
    }
  }
  o.expect(eig_err <= 1e-8, "eigenvalues within 1e-8");
  o.expect(comp_err <= 1e-8, "components within 1e-8 under the sign convention");
  o.expect(shift_err <= 1e-10, "translation invariance within 1e-10");
  o.detail << "100 sets 20x256: eigenvalue err " << eig_err << ", component err " << comp_err
           << ", translation err " << shift_err;
}

// ---- A6 -------------------------------------------------------------------

void a6(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0xa6);
  std::normal_distribution<double> g;
  double worst_grad = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DecoderConfig c;
    c.seed = seed;
    const auto dec = PointerDecoder::initialized(c);
    std::vector<double> x(kPointerDim);
    for (auto& v : x) v = g(rng);
    std::uniform_real_distribution<float> u(0.0f, 0.5f);
    const float a = u(rng), b = u(rng);
    worst_grad = std::max(worst_grad, grad_check(dec, x, Bbox{a, b, a + 0.4f, b + 0.5f}, 1e-4, 128, seed));
  }
  o.expect(worst_grad <= 1e-4, "grad_check <= 1e-4");

  const auto data = synth_pointer_boxes(2000, 0.01, 0xa6);
  TrainingData train{Matrix(1600, kPointerDim), {}};
  std::copy(data.inputs.data.begin(), data.inputs.data.begin() + 1600 * kPointerDim, train.inputs.data.begin());
  train.targets.assign(data.targets.begin(), data.targets.begin() + 1600);
  const DecoderConfig defaults;
  const auto result = train_decoder(train, defaults);
  double iou_sum = 0;
  for (std::size_t r = 1600; r < 2000; ++r) iou_sum += iou(decode_bbox(result.decoder, data.inputs.row(r)).box, data.targets[r]);
  const double heldout = iou_sum / 400.0;
  o.expect(heldout >= 0.7, "held-out IoU >= 0.7");

  TrainingData constant{Matrix(256, kPointerDim), std::vector<Bbox>(256, Bbox{0.25f, 0.3f, 0.65f, 0.8f})};
  for (auto& v : constant.inputs.data) v = g(rng);
  const auto flat = train_decoder(constant, defaults);
  o.expect(flat.final_loss < 1e-4, "constant-target loss < 1e-4");

  const double secs = seconds_since(t0);
  o.expect(secs < 60.0, "runtime < 60 s");
  o.detail << "grad rel err " << worst_grad << ", held-out IoU " << heldout << " (final train loss "
           << result.final_loss << "), constant loss " << flat.final_loss << ", " << secs << " s";
}

// ---- A7 -------------------------------------------------------------------

EmbeddingTrace pointer_trace(const std::string& id, const std::vector<std::vector<float>>& ptrs,
                             const std::vector<double>& percents) {
  EmbeddingTrace t;
  t.video_id = id;
  t.transform = percents.empty() ? Transform::kClean : Transform::kObscuration;
  t.canonical = true;
  t.positions = {{Position::kObjectPointer, {1, 256}}};
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    FrameRecord r;
    r.frame_index = static_cast<std::uint32_t>(i);
    if (!percents.empty()) r.obscuration_percent = static_cast<float>(percents[i]);
    r.tensors.emplace(Position::kObjectPointer, Tensor({1, 256}, ptrs[i]));
    t.frames.push_back(std::move(r));
  }
  return t;
}

// Pointer pairs whose distance grows linearly with obscuration.
std::pair<std::vector<EmbeddingTrace>, std::vector<EmbeddingTrace>> planted_pairs(double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<EmbeddingTrace> refs, obs;
  for (int v = 0; v < 8; ++v) {
    std::vector<float> dir(256);
    double norm = 0;
    for (auto& d : dir) {
      d = g(rng);
      norm += d * d;
    }
    for (auto& d : dir) d = static_cast<float>(d / std::sqrt(norm));
    std::vector<std::vector<float>> a, b;
    std::vector<double> pct;
    for (int f = 0; f < 28; ++f) {
      std::vector<float> p(256);
      for (auto& x : p) x = g(rng);
      const double percent = std::round(u(rng) * 1000.0) / 1000.0;
      std::vector<float> q = p;
      for (std::size_t e = 0; e < 256; ++e) q[e] += static_cast<float>(4.0 * percent + 0.5) * dir[e];
      if (noise > 0)
        for (auto& x : q) x += static_cast<float>(noise) * g(rng);
      a.push_back(p);
      b.push_back(q);
      pct.push_back(percent);
    }
    refs.push_back(pointer_trace("r" + std::to_string(v), a, {}));
    obs.push_back(pointer_trace("o" + std::to_string(v), b, pct));
  }
  return {refs, obs};
}

double pipeline_r(const std::vector<EmbeddingTrace>& refs, const std::vector<EmbeddingTrace>& obs) {
  std::vector<double> dist, pct;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto d = pointer_distance_series(refs[i], obs[i]);
    for (std::size_t f = 0; f < d.size(); ++f) {
      dist.push_back(d[f]);
      pct.push_back(*obs[i].frames[f].obscuration_percent);
    }
  }
  return obscuration_correlation(dist, pct).pearson_r;
}

void a7(Outcome& o) {
  const auto [r0, o0] = planted_pairs(0.0, 0xa7);
  const double exact = pipeline_r(r0, o0);
  const auto [r1, o1] = planted_pairs(0.05, 0xa7 + 1);
  const double noisy = pipeline_r(r1, o1);
  // f32 storage of the pointers bounds how close the noiseless case can get.
  o.expect(std::abs(exact - 1.0) <= 1e-6, "noiseless r == 1.0");
  o.expect(noisy >= 0.9, "noisy r >= 0.9");
  o.detail << "noiseless r = " << exact << " (1 - r = " << 1.0 - exact << "), noisy r = " << noisy;
}

// ---- A8 -------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + EMPROBE_CLI + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void a8(Outcome& o) {
  const auto t0 = Clock::now();
  const fs::path root = scratch_root / "a8";
  fs::create_directories(root);
  const fs::path log = root / "cli.log";

  // Inputs shared by both runs.
  const fs::path inputs = root / "inputs";
  fs::create_directories(inputs);
  const auto [refs, obs] = planted_pairs(0.05, 0xa8);
  std::string ref_args, obs_args;
  for (std::size_t i = 0; i < 2; ++i) {
    write_trace_file(refs[i], (inputs / ("ref" + std::to_string(i) + ".emtr")).string());
    write_trace_file(obs[i], (inputs / ("obs" + std::to_string(i) + ".emtr")).string());
    ref_args += " " + (inputs / ("ref" + std::to_string(i) + ".emtr")).string();
    obs_args += " " + (inputs / ("obs" + std::to_string(i) + ".emtr")).string();
  }
  const fs::path traces = inputs / "traces";
  const std::string gen = "synth-trace --out " + traces.string() +
                          " --video-id st --positions 2 4 --shapes 2:4x8x8 --shift 5 --count 3 --seed 11";
  const fs::path clean = inputs / "clean";
  const std::string gen_clean = "synth-trace --out " + clean.string() +
                                " --video-id cl --positions 2 4 --shapes 2:4x8x8 --count 2 --seed 40";
  o.expect(run_cli(gen, log) == 0 && run_cli(gen_clean, log) == 0, "input generation");
  const std::string st0 = (traces / "st_000.emtr").string();
  const std::string st_all = st0 + " " + (traces / "st_001.emtr").string() + " " + (traces / "st_002.emtr").string();
  const std::string cl_all = (clean / "cl_000.emtr").string() + " " + (clean / "cl_001.emtr").string();
  const fs::path decoder_dir = inputs / "decoder";
  o.expect(run_cli("train-decoder --out " + decoder_dir.string() + " --synthetic 128 --epochs 1", log) == 0,
           "decoder for decode");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"forge_interjection", "forge --transform interjection --n 3 --seed 5 --pool-size 4 --width 64 --height 64 --jobs 2"},
      {"forge_object_removal", "forge --transform object_removal --n 3 --seed 5 --pool-size 4 --width 64 --height 64"},
      {"forge_context_removal", "forge --transform context_removal --n 2 --seed 5 --pool-size 4 --width 64 --height 64 --fill noise --fill-seed 3"},
      {"forge_obscuration", "forge --transform obscuration --n 3 --seed 5 --pool-size 4 --width 64 --height 64"},
      {"forge_overlay3", "forge --transform overlay3 --n 2 --seed 5 --pool-size 5 --width 64 --height 64"},
      {"synth_video", "synth-video --video-id sv --frames 12 --width 64 --height 64 --shape square --size 5 --velocity 1,0.5 --seed 9"},
      {"synth_trace", "synth-trace --video-id t --positions 1 4 --shapes 1:4x6x6 --shift 2 --count 2 --seed 3"},
      {"validate", "validate --trace " + st_all},
      {"features", "features --trace " + st_all + " --position 2"},
      {"report", "report --trace " + st_all + " " + cl_all + " --position 2"},
      {"panel", "panel --trace " + st0 + " --frame 3 13 --cell-size 16"},
      {"plot", "plot --group \"shifted=" + (traces / "st_000.emtr").string() + ";" + (traces / "st_001.emtr").string() +
                   "\" --group \"clean=" + (clean / "cl_000.emtr").string() + "\" --position 4"},
      {"pca", "pca --trace " + st_all + " " + cl_all},
      {"corr", "corr --reference" + ref_args + " --obscured" + obs_args},
      {"train_decoder", "train-decoder --synthetic 256 --epochs 3 --seed 2 --data-seed 4"},
      {"decode", "decode --decoder " + (decoder_dir / "decoder.emdc").string() + " --trace " + st_all},
  };

  std::size_t files = 0;
  for (const auto& [name, args] : commands) {
    const fs::path a = root / (name + "_a"), b = root / (name + "_b"), c = root / (name + "_c");
    const int ra = run_cli(args + " --out " + a.string(), log);
    const int rb = run_cli(args + " --out " + b.string(), log);
    const int rc = run_cli(std::string(args.substr(0, args.find(' '))) + " --config " +
                               (a / "run_config.json").string() + " --out " + c.string(),
                           log);
    o.expect(ra == 0 && rb == 0 && rc == 0, name + " exit status");
    if (ra != 0 || rb != 0 || rc != 0) continue;
    const auto sa = snapshot(a), sb = snapshot(b), sc = snapshot(c);
    o.expect(sa == sb, name + " rerun byte-identical");
    o.expect(sa == sc, name + " config replay byte-identical");
    o.expect(sa.count("outputs.json") && sa.count("run_config.json"), name + " manifests present");
    files += sa.size();
  }
  const double secs = seconds_since(t0);
  o.detail << commands.size() << " invocations x3 (rerun, config replay), " << files
           << " files compared, " << secs << " s";
}

}  // namespace

int main(int argc, char** argv) {
  scratch_root = argc > 1 ? fs::path(argv[1])
                          : fs::temp_directory_path() / ("emprobe_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch_root);
  fs::create_directories(scratch_root);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"A1 trace round-trip", a1},   {"A2 distance oracle", a2}, {"A3 forge invariants", a3},
      {"A4 signal detection", a4},   {"A5 PCA oracle", a5},      {"A6 decoder", a6},
      {"A7 correlation", a7},        {"A8 CLI determinism", a8},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::printf("%s %-22s %6.2f s  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  if (argc <= 1) fs::remove_all(scratch_root);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
