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
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emprobe/emprobe.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(emp_status s, const std::string& context) {
  if (s != EMP_OK) {
    throw Failure(context + ": " + emp_status_name(s) + ": " + emp_last_error());
  }
}

// Owns a malloc'd string handed out by the library.
struct CStr {
  char* p = nullptr;
  ~CStr() { emp_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct Trace {
  emp_trace* h = nullptr;
  explicit Trace(const std::string& path) { check(emp_trace_read(path.c_str(), &h), path); }
  Trace(Trace&& o) noexcept : h(o.h) { o.h = nullptr; }
  Trace(const Trace&) = delete;
  ~Trace() { emp_trace_free(h); }
};

struct FeatureSet {
  emp_feature_set* h = nullptr;
  FeatureSet() { check(emp_feature_set_new(&h), "feature set"); }
  FeatureSet(FeatureSet&& o) noexcept : h(o.h) { o.h = nullptr; }
  FeatureSet(const FeatureSet&) = delete;
  ~FeatureSet() { emp_feature_set_free(h); }
};

struct Decoder {
  emp_decoder* h = nullptr;
  Decoder() = default;
  Decoder(const Decoder&) = delete;
  ~Decoder() { emp_decoder_free(h); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure("cannot write '" + path.string() + "'");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool is_csv(const std::string& path) { return fs::path(path).extension() == ".csv"; }

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void require_unique_stems(const std::vector<std::string>& paths) {
  std::map<std::string, std::string> seen;
  for (const auto& p : paths) {
    const auto [it, fresh] = seen.emplace(stem_of(p), p);
    if (!fresh) throw UsageError("inputs '" + it->second + "' and '" + p + "' share a file name");
  }
}

// Options bound to variables, dumpable as the replayable run config.
class Registry {
 public:
  explicit Registry(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    auto* o = app_->add_option("--" + name, var, help);
    if constexpr (!std::is_same_v<T, std::string> && requires { var.begin(); }) {
      o->delimiter(',');
      clearers_[name] = [&var] { var = T{}; };
    }
    dumpers_.emplace_back(name, [&var] { return json(var); });
    return o->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    auto* o = app_->add_flag("--" + name, var, help);
    dumpers_.emplace_back(name, [&var] { return json(var); });
    return o;
  }

  json dump() const {
    json j = json::object();
    for (const auto& [name, f] : dumpers_) j[name] = f();
    return j;
  }

  // Config values fill options not given on the command line.
  void apply(const json& config) {
    for (const auto& [key, value] : config.items()) {
      if (key == "subcommand") continue;
      CLI::Option* o = app_->get_option_no_throw("--" + key);
      if (!o) throw UsageError("config key '" + key + "' is not an option of '" + app_->get_name() + "'");
      if (o->count() > 0) continue;
      std::vector<std::string> tokens;
      auto token = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (value.is_array() && value.empty() && clearers_.count(key)) {
        clearers_[key]();
        continue;
      }
      if (value.is_array()) {
        for (const auto& v : value) tokens.push_back(token(v));
      } else {
        tokens.push_back(token(value));
      }
      o->clear();
      for (const auto& t : tokens) o->add_result(t);
      try {
        o->run_callback();
      } catch (const CLI::Error& e) {
        throw UsageError("config key '" + key + "': " + e.what());
      }
    }
  }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<json()>>> dumpers_;
  std::map<std::string, std::function<void()>> clearers_;
};

struct Common {
  std::string out;
  std::string config;
  int jobs = 0;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Registry> reg;
  std::function<void(const fs::path&, const Common&)> run;
};

// ---- subcommand bodies ---------------------------------------------------

struct ForgeArgs {
  std::string transform = "interjection";
  std::size_t n = 1;
  std::uint64_t seed = 0;
  std::string pool_root;
  int object_index = 1;
  std::size_t pool_size = 16;
  int width = 128;
  int height = 128;
  std::uint64_t pool_seed = 0;
  std::string fill = "black";
  std::uint64_t fill_seed = 0;
};

void run_forge(const ForgeArgs& a, const fs::path& out, const Common& c) {
  json opt;
  opt["transform"] = a.transform;
  opt["n"] = a.n;
  opt["seed"] = a.seed;
  if (a.pool_root.empty()) {
    opt["pool"] = {{"kind", "synthetic"}, {"count", a.pool_size}, {"width", a.width},
                   {"height", a.height}, {"seed", a.pool_seed}};
  } else {
    if (a.object_index < 0 || a.object_index > 255) throw UsageError("--object-index must be 0..255");
    opt["pool"] = {{"kind", "directory"}, {"root", a.pool_root}, {"object_index", a.object_index}};
  }
  opt["fill"] = {{"mode", a.fill}, {"seed", a.fill_seed}};
  CStr index;
  check(emp_forge_dataset(opt.dump().c_str(), out.string().c_str(), c.jobs, index.out()), "forge");
  write_file(out / "index.json", index.str());
  std::cerr << "forged " << a.n << " " << a.transform << " samples\n";
}

struct SynthVideoArgs {
  std::string video_id = "synth";
  std::uint32_t frames = 28;
  int width = 128;
  int height = 128;
  std::string shape = "disk";
  int size = 8;
  std::vector<double> start;
  std::vector<double> velocity = {0.0, 0.0};
  std::uint64_t seed = 0;
};

void run_synth_video(const SynthVideoArgs& a, const fs::path& out, const Common&) {
  if (!a.start.empty() && a.start.size() != 2) throw UsageError("--start takes x,y");
  if (a.velocity.size() != 2) throw UsageError("--velocity takes vx,vy");
  json spec = {{"video_id", a.video_id}, {"frames", a.frames}, {"width", a.width},
               {"height", a.height},     {"shape", a.shape},   {"size", a.size},
               {"velocity", a.velocity}, {"seed", a.seed}};
  if (!a.start.empty()) spec["start"] = a.start;
  check(emp_synth_video(spec.dump().c_str(), (out / a.video_id).string().c_str()), "synth-video");
}

struct SynthTraceArgs {
  std::string video_id = "synthetic";
  std::uint32_t frames = 28;
  std::vector<int> positions = {4};
  std::vector<std::string> shapes;
  std::vector<std::uint32_t> interjection = {12, 16};
  double shift = 0.0;
  std::uint64_t seed = 0;
  std::size_t count = 1;
};

void run_synth_trace(const SynthTraceArgs& a, const fs::path& out, const Common&) {
  if (a.interjection.size() != 2) throw UsageError("--interjection takes begin,end");
  std::map<int, json> overrides;
  for (const auto& s : a.shapes) {
    const auto parts = split(s, ':');
    if (parts.size() != 2) throw UsageError("--shapes entries look like ID:AxBxC");
    json dims = json::array();
    for (const auto& d : split(parts[1], 'x')) {
      try {
        dims.push_back(std::stoul(d));
      } catch (const std::exception&) {
        throw UsageError("bad shape '" + s + "'");
      }
    }
    overrides[std::stoi(parts[0])] = dims;
  }
  json positions = json::array();
  for (int p : a.positions) {
    if (overrides.count(p)) {
      positions.push_back({{"id", p}, {"shape", overrides[p]}});
    } else {
      positions.push_back(p);
    }
  }
  for (std::size_t i = 0; i < a.count; ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_%03zu", i);
    const std::string id = a.count == 1 ? a.video_id : a.video_id + suffix;
    json spec = {{"video_id", id},
                 {"num_frames", a.frames},
                 {"positions", positions},
                 {"interjection_begin", a.interjection[0]},
                 {"interjection_end", a.interjection[1]},
                 {"shift", a.shift},
                 {"seed", a.seed + i},
                 {"canonical", overrides.empty()}};
    emp_trace* t = nullptr;
    check(emp_trace_synth(spec.dump().c_str(), &t), "synth-trace");
    const emp_status s = emp_trace_write(t, (out / (id + ".emtr")).string().c_str());
    emp_trace_free(t);
    check(s, "synth-trace");
  }
}

struct ValidateArgs {
  std::vector<std::string> traces;
};

bool run_validate(const ValidateArgs& a, const fs::path& out, const Common&) {
  json all = json::array();
  bool ok = true;
  for (const auto& path : a.traces) {
    int trace_ok = 0;
    CStr report;
    check(emp_trace_validate(path.c_str(), &trace_ok, report.out()), path);
    json r = json::parse(report.str());
    r["trace"] = fs::path(path).filename().string();
    ok = ok && trace_ok;
    if (!trace_ok) std::cerr << path << ": " << r["violations"].size() << " violation(s)\n";
    all.push_back(std::move(r));
  }
  write_file(out / "validation.json", all.dump(2) + "\n");
  return ok;
}

struct FeatureArgs {
  std::vector<std::string> traces;
  int position = 4;
  std::size_t short_window = 1;
  std::size_t long_window = 5;
};

void run_features(const FeatureArgs& a, const fs::path& out, const Common&) {
  require_unique_stems(a.traces);
  for (const auto& path : a.traces) {
    Trace t(path);
    CStr csv;
    check(emp_features_csv(t.h, a.position, a.short_window, a.long_window, csv.out()), path);
    write_file(out / (stem_of(path) + "_pos" + std::to_string(a.position) + "_features.csv"), csv.str());
  }
}

void add_inputs(FeatureSet& set, const std::vector<std::string>& inputs, const FeatureArgs& a) {
  for (const auto& path : inputs) {
    if (is_csv(path)) {
      check(emp_feature_set_add_csv(set.h, read_file(path).c_str(), stem_of(path).c_str()), path);
    } else {
      Trace t(path);
      check(emp_feature_set_add_trace(set.h, t.h, a.position, a.short_window, a.long_window), path);
    }
  }
}

void run_report(const FeatureArgs& a, const fs::path& out, const Common&) {
  FeatureSet set;
  add_inputs(set, a.traces, a);
  CStr report, dist;
  check(emp_presence_report(set.h, a.position, report.out(), dist.out()), "report");
  write_file(out / "report.json", report.str());
  write_file(out / "distribution.csv", dist.str());
}

struct PanelArgs {
  std::string trace;
  std::vector<std::uint32_t> frames;
  std::vector<int> positions = {0, 1, 2, 3, 5};
  int cell_size = 64;
};

void run_panel(const PanelArgs& a, const fs::path& out, const Common&) {
  Trace t(a.trace);
  CStr info;
  check(emp_trace_info(t.h, info.out()), a.trace);
  const json meta = json::parse(info.str());
  const std::string vid = meta["video_id"];
  std::vector<std::uint32_t> frames = a.frames;
  if (frames.empty()) {
    std::size_t n = 0;
    check(emp_trace_frame_count(t.h, &n), a.trace);
    for (std::size_t i = 0; i < n; ++i) frames.push_back(static_cast<std::uint32_t>(i));
  }
  json all = json::array();
  for (std::uint32_t f : frames) {
    const std::string name = vid + "_" + std::to_string(f) + "_panel.png";
    CStr m;
    check(emp_panel_write(t.h, f, a.positions.data(), a.positions.size(), a.cell_size,
                          (out / name).string().c_str(), m.out()),
          "panel");
    json e = json::parse(m.str());
    e["file"] = name;
    all.push_back(std::move(e));
  }
  write_file(out / "panels.json", all.dump(2) + "\n");
}

struct PlotArgs {
  std::vector<std::string> groups;  // label=path[;path...]
  int position = 4;
  std::size_t short_window = 1;
  std::size_t long_window = 5;
  std::vector<std::uint32_t> interjection = {12, 16};
  bool no_render = false;
};

void run_plot(const PlotArgs& a, const fs::path& out, const Common&) {
  if (a.groups.empty()) throw UsageError("plot needs at least one --group");
  if (!a.interjection.empty() && a.interjection.size() != 2) {
    throw UsageError("--interjection takes begin,end");
  }
  FeatureArgs fa{{}, a.position, a.short_window, a.long_window};
  std::vector<FeatureSet> sets;
  std::vector<std::string> labels;
  for (const auto& g : a.groups) {
    const auto eq = g.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--group looks like LABEL=path;path");
    labels.push_back(g.substr(0, eq));
    sets.emplace_back();
    add_inputs(sets.back(), split(g.substr(eq + 1), ';'), fa);
  }
  std::vector<const emp_feature_set*> handles;
  std::vector<const char*> label_ptrs;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    handles.push_back(sets[i].h);
    label_ptrs.push_back(labels[i].c_str());
  }
  const std::uint32_t b0 = a.interjection.empty() ? 0 : a.interjection[0];
  const std::uint32_t b1 = a.interjection.empty() ? 0 : a.interjection[1];
  for (const char* feature : {"short_l2", "long_l2", "short_ratio"}) {
    const std::string base = std::string("pos") + std::to_string(a.position) + "_" + feature;
    const std::string png = (out / (base + ".png")).string();
    CStr csv;
    check(emp_plot_average(handles.data(), label_ptrs.data(), handles.size(), feature, b0, b1,
                           a.no_render ? nullptr : png.c_str(), csv.out()),
          "plot");
    write_file(out / (base + ".csv"), csv.str());
  }
}

struct PcaArgs {
  std::vector<std::string> traces;
};

void run_pca(const PcaArgs& a, const fs::path& out, const Common&) {
  std::vector<Trace> ts;
  std::vector<const emp_trace*> hs;
  for (const auto& p : a.traces) ts.emplace_back(p);
  for (const auto& t : ts) hs.push_back(t.h);
  CStr csv, summary;
  check(emp_pointer_pca(hs.data(), hs.size(), csv.out(), summary.out()), "pca");
  write_file(out / "pca.csv", csv.str());
  write_file(out / "pca_summary.json", summary.str());
}

struct CorrArgs {
  std::vector<std::string> reference;
  std::vector<std::string> obscured;
};

void run_corr(const CorrArgs& a, const fs::path& out, const Common&) {
  if (a.reference.size() != a.obscured.size()) {
    throw UsageError("--reference and --obscured must list the same number of traces");
  }
  std::vector<Trace> rs, os;
  std::vector<const emp_trace*> rh, oh;
  for (std::size_t i = 0; i < a.reference.size(); ++i) {
    rs.emplace_back(a.reference[i]);
    os.emplace_back(a.obscured[i]);
  }
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rh.push_back(rs[i].h);
    oh.push_back(os[i].h);
  }
  double r = 0.0;
  CStr csv;
  check(emp_obscuration_correlation(rh.data(), oh.data(), rh.size(), &r, csv.out()), "corr");
  write_file(out / "scatter.csv", csv.str());
  write_file(out / "correlation.json", json({{"pearson_r", r}, {"pairs", rh.size()}}).dump(2) + "\n");
}

struct TrainArgs {
  std::vector<std::string> traces;
  std::size_t synthetic = 0;
  double noise = 0.01;
  std::uint64_t data_seed = 0;
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

void run_train(const TrainArgs& a, const fs::path& out, const Common&) {
  if (a.traces.empty() == (a.synthetic == 0)) {
    throw UsageError("train-decoder needs either --trace or --synthetic N");
  }
  const json config = {{"learning_rate", a.learning_rate}, {"momentum", a.momentum},
                       {"epochs", a.epochs},               {"batch_size", a.batch_size},
                       {"seed", a.seed}};
  Decoder d;
  CStr loss;
  json summary = {{"config", config}};
  if (a.synthetic > 0) {
    double heldout = 0.0;
    check(emp_decoder_train_synthetic(a.synthetic, a.noise, a.data_seed, config.dump().c_str(),
                                      &d.h, loss.out(), &heldout),
          "train-decoder");
    summary["heldout_mean_iou"] = heldout;
  } else {
    std::vector<Trace> ts;
    std::vector<const emp_trace*> hs;
    for (const auto& p : a.traces) ts.emplace_back(p);
    for (const auto& t : ts) hs.push_back(t.h);
    check(emp_decoder_train(hs.data(), hs.size(), config.dump().c_str(), &d.h, loss.out()),
          "train-decoder");
  }
  check(emp_decoder_save(d.h, (out / "decoder.emdc").string().c_str()), "train-decoder");
  const std::string curve = loss.str();
  write_file(out / "loss.csv", curve);
  const auto lines = split(curve, '\n');
  if (lines.size() >= 2) {
    const std::string last = lines[lines.size() - 2];
    summary["final_loss"] = std::stod(last.substr(last.find(',') + 1));
  }
  write_file(out / "training.json", summary.dump(2) + "\n");
}

struct DecodeArgs {
  std::string decoder;
  std::vector<std::string> traces;
};

void run_decode(const DecodeArgs& a, const fs::path& out, const Common&) {
  require_unique_stems(a.traces);
  Decoder d;
  check(emp_decoder_load(a.decoder.c_str(), &d.h), a.decoder);
  for (const auto& p : a.traces) {
    Trace t(p);
    CStr csv;
    check(emp_decoder_decode_trace(d.h, t.h, csv.out()), p);
    write_file(out / (stem_of(p) + "_decoded.csv"), csv.str());
  }
}

// Every regular file under `out` except the manifest itself.
void write_outputs_manifest(const fs::path& out, const std::string& subcommand) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), out).generic_string();
    if (rel != "outputs.json") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json list = json::array();
  for (const auto& f : files) {
    const std::string bytes = read_file((out / f).string());
    list.push_back({{"path", f}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a(bytes))}});
  }
  write_file(out / "outputs.json", json({{"subcommand", subcommand}, {"files", list}}).dump(2) + "\n");
}

std::string prescan_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

int jobs_fallback() {
  if (const char* env = std::getenv("PROBE_FORGE_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring PROBE_FORGE_JOBS='" << env << "'\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-trace probing toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(emp_version()));

  Common common;
  std::map<std::string, Command> commands;
  bool validation_ok = true;

  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.app->add_option("--out", common.out, "output directory");
    c.app->add_option("--config", common.config, "JSON config; flags override its values");
    c.app->add_option("--jobs", common.jobs, "worker threads (default: PROBE_FORGE_JOBS or all cores)")
        ->check(CLI::PositiveNumber);
    c.reg = std::make_unique<Registry>(c.app);
    return c;
  };

  ForgeArgs forge;
  {
    auto& c = make("forge", "generate a transformed video dataset");
    auto& r = *c.reg;
    r.add("transform", forge.transform, "interjection|object_removal|context_removal|obscuration|overlay3");
    r.add("n", forge.n, "number of samples");
    r.add("seed", forge.seed, "base seed; sample i uses seed + i");
    r.add("pool-root", forge.pool_root, "source video directory (default: synthetic pool)");
    r.add("object-index", forge.object_index, "mask index of the object of interest");
    r.add("pool-size", forge.pool_size, "synthetic pool size");
    r.add("width", forge.width, "synthetic pool frame width");
    r.add("height", forge.height, "synthetic pool frame height");
    r.add("pool-seed", forge.pool_seed, "synthetic pool seed");
    r.add("fill", forge.fill, "context-removal fill: black|gray|noise");
    r.add("fill-seed", forge.fill_seed, "noise fill seed");
    c.run = [&](const fs::path& o, const Common& cm) { run_forge(forge, o, cm); };
  }
  SynthVideoArgs sv;
  {
    auto& c = make("synth-video", "render a synthetic annotated video");
    auto& r = *c.reg;
    r.add("video-id", sv.video_id, "folder name");
    r.add("frames", sv.frames, "frame count");
    r.add("width", sv.width, "frame width");
    r.add("height", sv.height, "frame height");
    r.add("shape", sv.shape, "disk|square");
    r.add("size", sv.size, "radius or half-side in pixels");
    r.add("start", sv.start, "object center at frame 0 (x,y)");
    r.add("velocity", sv.velocity, "pixels per frame (vx,vy)");
    r.add("seed", sv.seed, "texture seed");
    c.run = [&](const fs::path& o, const Common& cm) { run_synth_video(sv, o, cm); };
  }
  SynthTraceArgs st;
  {
    auto& c = make("synth-trace", "write synthetic embedding traces");
    auto& r = *c.reg;
    r.add("video-id", st.video_id, "trace id (suffixed _NNN when --count > 1)");
    r.add("frames", st.frames, "frame count");
    r.add("positions", st.positions, "position ids");
    r.add("shapes", st.shapes, "shape overrides ID:AxBxC");
    r.add("interjection", st.interjection, "shifted frame range begin,end (end exclusive)");
    r.add("shift", st.shift, "interjection shift in noise sigmas");
    r.add("seed", st.seed, "base seed; trace i uses seed + i");
    r.add("count", st.count, "number of traces");
    c.run = [&](const fs::path& o, const Common& cm) { run_synth_trace(st, o, cm); };
  }
  ValidateArgs va;
  {
    auto& c = make("validate", "check trace files; exit 1 on any violation");
    c.reg->add("trace", va.traces, "trace files");
    c.run = [&](const fs::path& o, const Common& cm) { validation_ok = run_validate(va, o, cm); };
  }
  FeatureArgs fe;
  {
    auto& c = make("features", "per-frame windowed distance features as CSV");
    auto& r = *c.reg;
    r.add("trace", fe.traces, "trace files");
    r.add("position", fe.position, "observation position 0-5");
    r.add("short-window", fe.short_window, "short reference window");
    r.add("long-window", fe.long_window, "long reference window");
    c.run = [&](const fs::path& o, const Common& cm) { run_features(fe, o, cm); };
  }
  FeatureArgs rep;
  {
    auto& c = make("report", "presence separability report");
    auto& r = *c.reg;
    r.add("trace", rep.traces, "trace files or feature CSVs");
    r.add("position", rep.position, "observation position 0-5");
    r.add("short-window", rep.short_window, "short reference window");
    r.add("long-window", rep.long_window, "long reference window");
    c.run = [&](const fs::path& o, const Common& cm) { run_report(rep, o, cm); };
  }
  PanelArgs pa;
  {
    auto& c = make("panel", "channel mean/variance panels");
    auto& r = *c.reg;
    r.add("trace", pa.trace, "trace file");
    r.add("frame", pa.frames, "frame indices (default: all)");
    r.add("positions", pa.positions, "panel columns");
    r.add("cell-size", pa.cell_size, "cell edge in pixels");
    c.run = [&](const fs::path& o, const Common& cm) { run_panel(pa, o, cm); };
  }
  PlotArgs pl;
  {
    auto& c = make("plot", "dataset-average feature curves");
    auto& r = *c.reg;
    r.add("group", pl.groups, "LABEL=path;path (trace files or feature CSVs)")->delimiter('\0');
    r.add("position", pl.position, "observation position 0-5");
    r.add("short-window", pl.short_window, "short reference window");
    r.add("long-window", pl.long_window, "long reference window");
    r.add("interjection", pl.interjection, "shaded frame range begin,end");
    r.flag("no-render", pl.no_render, "write CSV only");
    c.run = [&](const fs::path& o, const Common& cm) { run_plot(pl, o, cm); };
  }
  PcaArgs pc;
  {
    auto& c = make("pca", "2-D PCA of object pointers");
    c.reg->add("trace", pc.traces, "trace files");
    c.run = [&](const fs::path& o, const Common& cm) { run_pca(pc, o, cm); };
  }
  CorrArgs co;
  {
    auto& c = make("corr", "pointer distance vs obscuration correlation");
    c.reg->add("reference", co.reference, "unobscured traces");
    c.reg->add("obscured", co.obscured, "obscured traces, paired in order");
    c.run = [&](const fs::path& o, const Common& cm) { run_corr(co, o, cm); };
  }
  TrainArgs tr;
  {
    auto& c = make("train-decoder", "train the pointer to bbox decoder");
    auto& r = *c.reg;
    r.add("trace", tr.traces, "trace files with bboxes");
    r.add("synthetic", tr.synthetic, "train on N synthetic pairs (20% held out)");
    r.add("noise", tr.noise, "synthetic box noise sigma");
    r.add("data-seed", tr.data_seed, "synthetic data seed");
    r.add("learning-rate", tr.learning_rate, "SGD learning rate");
    r.add("momentum", tr.momentum, "SGD momentum");
    r.add("epochs", tr.epochs, "epochs");
    r.add("batch-size", tr.batch_size, "mini-batch size");
    r.add("seed", tr.seed, "initialization and shuffle seed");
    c.run = [&](const fs::path& o, const Common& cm) { run_train(tr, o, cm); };
  }
  DecodeArgs de;
  {
    auto& c = make("decode", "decode boxes from trace pointers");
    c.reg->add("decoder", de.decoder, "decoder file");
    c.reg->add("trace", de.traces, "trace files");
    c.run = [&](const fs::path& o, const Common& cm) { run_decode(de, o, cm); };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Command& cmd = commands.at(sub->get_name());
  try {
    if (const std::string cfg = prescan_config(argc, argv); !cfg.empty()) {
      json j;
      try {
        j = json::parse(read_file(cfg));
      } catch (const json::exception& e) {
        throw UsageError("config '" + cfg + "' is not valid JSON: " + e.what());
      }
      if (!j.is_object()) throw UsageError("config must be a JSON object");
      if (j.contains("subcommand") && j["subcommand"] != sub->get_name()) {
        throw UsageError("config is for '" + j["subcommand"].get<std::string>() + "'");
      }
      cmd.reg->apply(j);
    }
    if (common.out.empty()) throw UsageError("--out is required");
    if (common.jobs == 0) common.jobs = jobs_fallback();

    const fs::path out(common.out);
    fs::create_directories(out);
    json run_config = cmd.reg->dump();
    run_config["subcommand"] = sub->get_name();
    write_file(out / "run_config.json", run_config.dump(2) + "\n");
    cmd.run(out, common);
    write_outputs_manifest(out, sub->get_name());
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return validation_ok ? kExitOk : kExitFailure;
}
