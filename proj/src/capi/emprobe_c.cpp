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

#include "emprobe/emprobe.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <new>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "emprobe/error.hpp"
#include "emprobe/forge.hpp"
#include "emprobe/pointer_lab.hpp"
#include "emprobe/presence.hpp"
#include "emprobe/stream_metrics.hpp"
#include "emprobe/trace.hpp"
#include "emprobe/viz.hpp"
#include "util/csv.hpp"

struct emp_trace {
  emprobe::EmbeddingTrace trace;
};

struct emp_feature_set {
  std::vector<emprobe::FeatureSeries> series;
};

struct emp_decoder {
  emprobe::PointerDecoder decoder;
};

namespace {

using nlohmann::json;
using namespace emprobe;

thread_local std::string g_last_error;

emp_status code_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return EMP_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return EMP_ERR_IO;
    case ErrorCode::kFormat: return EMP_ERR_FORMAT;
    case ErrorCode::kNumeric: return EMP_ERR_NUMERIC;
    case ErrorCode::kDegenerate: return EMP_ERR_DEGENERATE;
    case ErrorCode::kSpec: return EMP_ERR_SPEC;
    case ErrorCode::kUnsupported: return EMP_ERR_UNSUPPORTED;
  }
  return EMP_ERR_INTERNAL;
}

template <typename F>
emp_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return EMP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("bad JSON: ") + e.what();
    return EMP_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return EMP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EMP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return EMP_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  require(j.is_object(), "options must be a JSON object");
  return j;
}

json shape_json(const Shape& s) { return json(s); }

json trace_info(const EmbeddingTrace& t) {
  json j;
  j["video_id"] = t.video_id;
  j["transform"] = std::string(to_string(t.transform));
  j["canonical"] = t.canonical;
  j["num_frames"] = t.frames.size();
  json ps = json::array();
  for (const auto& p : t.positions) ps.push_back({{"id", to_index(p.id)}, {"shape", shape_json(p.shape)}});
  j["positions"] = ps;
  return j;
}

DecoderConfig decoder_config(const json& j) {
  DecoderConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string loss_csv(const TrainResult& r) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) {
    out += std::to_string(e) + ',' + util::format_double(r.loss_curve[e]) + '\n';
  }
  return out;
}

std::vector<EmbeddingTrace> gather(const emp_trace* const* traces, std::size_t count) {
  require(traces || count == 0, "null trace list");
  std::vector<EmbeddingTrace> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    require(traces[i], "null trace in list");
    out.push_back(traces[i]->trace);
  }
  return out;
}

FillMode fill_mode(const std::string& s) {
  if (s == "black") return FillMode::kBlack;
  if (s == "gray") return FillMode::kGray;
  if (s == "noise") return FillMode::kNoise;
  throw Error(ErrorCode::kInvalidArgument, "unknown fill mode '" + s + "'");
}

unsigned worker_count(int jobs, std::size_t work) {
  unsigned n = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
  n = std::max(1u, n);
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(work, 1)));
}

}  // namespace

extern "C" {

const char* emp_version(void) { return "1.0.0"; }

const char* emp_last_error(void) { return g_last_error.c_str(); }

const char* emp_status_name(emp_status status) {
  switch (status) {
    case EMP_OK: return "ok";
    case EMP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case EMP_ERR_IO: return "i/o error";
    case EMP_ERR_FORMAT: return "format error";
    case EMP_ERR_NUMERIC: return "numeric error";
    case EMP_ERR_DEGENERATE: return "degenerate input";
    case EMP_ERR_SPEC: return "specification violated";
    case EMP_ERR_UNSUPPORTED: return "unsupported";
    case EMP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void emp_string_free(char* s) { std::free(s); }

emp_status emp_trace_read(const char* path, emp_trace** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    auto t = std::make_unique<emp_trace>();
    t->trace = read_trace_file(path);
    *out = t.release();
  });
}

emp_status emp_trace_write(const emp_trace* trace, const char* path) {
  return guarded([&] {
    require(trace && path, "null argument");
    write_trace_file(trace->trace, path);
  });
}

void emp_trace_free(emp_trace* trace) { delete trace; }

emp_status emp_trace_info(const emp_trace* trace, char** json_out) {
  return guarded([&] {
    require(trace && json_out, "null argument");
    emit(json_out, trace_info(trace->trace).dump(2) + "\n");
  });
}

emp_status emp_trace_frame_count(const emp_trace* trace, size_t* out) {
  return guarded([&] {
    require(trace && out, "null argument");
    *out = trace->trace.frames.size();
  });
}

emp_status emp_trace_synth(const char* spec_json, emp_trace** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = nullptr;
    const json j = parse_options(spec_json);
    SynthTraceSpec spec;
    spec.video_id = j.value("video_id", spec.video_id);
    spec.num_frames = j.value("num_frames", spec.num_frames);
    spec.interjection_begin = j.value("interjection_begin", spec.interjection_begin);
    spec.interjection_end = j.value("interjection_end", spec.interjection_end);
    spec.shift_magnitude = j.value("shift", spec.shift_magnitude);
    spec.base_seed = j.value("seed", spec.base_seed);
    spec.canonical = j.value("canonical", spec.canonical);
    if (j.contains("positions")) {
      for (const auto& p : j.at("positions")) {
        PositionDecl d;
        if (p.is_number_integer()) {
          d.id = position_from_index(p.get<int>());
          const auto shape = canonical_shape(d.id);
          if (!shape) throw Error(ErrorCode::kInvalidArgument, "position 0 needs an explicit shape");
          d.shape = *shape;
        } else {
          d.id = position_from_index(p.at("id").get<int>());
          d.shape = p.at("shape").get<Shape>();
        }
        spec.positions.push_back(std::move(d));
      }
    }
    auto t = std::make_unique<emp_trace>();
    t->trace = synth_trace(spec);
    *out = t.release();
  });
}

emp_status emp_trace_validate(const char* path, int* ok, char** report_json) {
  return guarded([&] {
    require(path, "null argument");
    const auto report = validate_trace_file(path);
    if (ok) *ok = report.ok() ? 1 : 0;
    json j;
    j["ok"] = report.ok();
    j["frames_read"] = report.frames_read;
    json vs = json::array();
    for (const auto& v : report.violations) {
      json e;
      e["kind"] = to_string(v.kind);
      e["frame"] = v.frame_index ? json(*v.frame_index) : json(nullptr);
      e["position"] = v.position ? json(to_index(*v.position)) : json(nullptr);
      e["message"] = v.message;
      vs.push_back(std::move(e));
    }
    j["violations"] = vs;
    emit(report_json, j.dump(2) + "\n");
  });
}

emp_status emp_features_csv(const emp_trace* trace, int position, size_t short_window,
                            size_t long_window, char** csv_out) {
  return guarded([&] {
    require(trace && csv_out, "null argument");
    FeatureOptions opt;
    opt.short_window = short_window;
    opt.long_window = long_window;
    emit(csv_out, features_csv(frame_features(trace->trace, position_from_index(position), opt)));
  });
}

emp_status emp_feature_set_new(emp_feature_set** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new emp_feature_set();
  });
}

void emp_feature_set_free(emp_feature_set* set) { delete set; }

emp_status emp_feature_set_add_trace(emp_feature_set* set, const emp_trace* trace, int position,
                                     size_t short_window, size_t long_window) {
  return guarded([&] {
    require(set && trace, "null argument");
    FeatureOptions opt;
    opt.short_window = short_window;
    opt.long_window = long_window;
    set->series.push_back(frame_features(trace->trace, position_from_index(position), opt));
  });
}

emp_status emp_feature_set_add_csv(emp_feature_set* set, const char* csv_text, const char* video_id) {
  return guarded([&] {
    require(set && csv_text, "null argument");
    set->series.push_back(parse_features_csv(csv_text, video_id ? video_id : ""));
  });
}

emp_status emp_feature_set_size(const emp_feature_set* set, size_t* out) {
  return guarded([&] {
    require(set && out, "null argument");
    *out = set->series.size();
  });
}

emp_status emp_presence_report(const emp_feature_set* set, int position, char** report_out,
                               char** distribution) {
  return guarded([&] {
    require(set, "null argument");
    const auto report = separability_report(set->series, position_from_index(position));
    std::string rj = report_json(report);
    std::string dc = distribution_csv(report);
    emit(report_out, rj);
    emit(distribution, dc);
  });
}

emp_status emp_panel_write(const emp_trace* trace, uint32_t frame_index, const int* positions,
                           size_t position_count, int cell_size, const char* png_path,
                           char** metadata_json) {
  return guarded([&] {
    require(trace, "null argument");
    std::vector<Position> ps;
    if (positions && position_count) {
      for (std::size_t i = 0; i < position_count; ++i) ps.push_back(position_from_index(positions[i]));
    } else {
      ps.assign(kPanelPositions.begin(), kPanelPositions.end());
    }
    const Panel panel = position_panel(trace->trace, frame_index, ps, cell_size);
    if (png_path) write_png(png_path, panel.image);
    json j;
    j["video_id"] = trace->trace.video_id;
    j["frame"] = frame_index;
    j["cell_size"] = panel.cell_size;
    j["rows"] = {"mean", "variance"};
    json cols = json::array();
    for (const auto& c : panel.columns) {
      json e;
      e["position"] = to_index(c.position);
      e["gap"] = c.gap;
      e["label"] = c.label;
      if (!c.gap) {
        e["mean_range"] = {c.mean_min, c.mean_max};
        e["variance_range"] = {c.var_min, c.var_max};
      }
      cols.push_back(std::move(e));
    }
    j["columns"] = cols;
    emit(metadata_json, j.dump(2) + "\n");
  });
}

emp_status emp_plot_average(const emp_feature_set* const* sets, const char* const* labels,
                            size_t count, const char* feature, uint32_t band_begin,
                            uint32_t band_end, const char* png_path, char** csv_out) {
  return guarded([&] {
    require(sets && labels && feature && count > 0, "null argument");
    const std::string f = feature;
    std::vector<AverageCurves> avgs;
    std::vector<std::uint32_t> frames;
    for (std::size_t i = 0; i < count; ++i) {
      require(sets[i] && labels[i], "null set or label");
      avgs.push_back(dataset_average(sets[i]->series));
      for (auto fi : avgs.back().frame_index) frames.push_back(fi);
    }
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    std::vector<Series> curves;
    for (std::size_t i = 0; i < count; ++i) {
      const auto& a = avgs[i];
      const std::vector<std::optional<double>>* src = nullptr;
      if (f == "short_l2") src = &a.short_l2;
      else if (f == "long_l2") src = &a.long_l2;
      else if (f == "short_ratio") src = &a.short_ratio;
      else throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + f + "'");
      Series s{labels[i], std::vector<std::optional<double>>(frames.size())};
      for (std::size_t k = 0; k < a.frame_index.size(); ++k) {
        const auto pos = std::lower_bound(frames.begin(), frames.end(), a.frame_index[k]) - frames.begin();
        s.values[static_cast<std::size_t>(pos)] = (*src)[k];
      }
      curves.push_back(std::move(s));
    }
    PlotOptions opt;
    if (band_begin < band_end) opt.band = std::make_pair(band_begin, band_end);
    opt.render = png_path != nullptr;
    const Plot plot = plot_series(frames, curves, opt);
    if (png_path) write_png(png_path, *plot.image);
    emit(csv_out, plot.csv);
  });
}

emp_status emp_pointer_pca(const emp_trace* const* traces, size_t count, char** csv_out,
                           char** summary_json) {
  return guarded([&] {
    const auto ts = gather(traces, count);
    const PointerSet set = collect_pointers(ts);
    const PcaProjection pca = pca2(set.pointers);
    emit(csv_out, pca_csv(pca, set));
    json j;
    j["points"] = set.pointers.rows;
    j["explained_variance"] = pca.explained_variance;
    j["total_variance"] = pca.total_variance;
    j["components"] = pca.components;
    emit(summary_json, j.dump(2) + "\n");
  });
}

emp_status emp_obscuration_correlation(const emp_trace* const* reference,
                                       const emp_trace* const* obscured, size_t count,
                                       double* pearson_r, char** scatter_csv) {
  return guarded([&] {
    require(reference && obscured && count > 0, "null argument");
    std::vector<double> distances, percents;
    for (std::size_t i = 0; i < count; ++i) {
      require(reference[i] && obscured[i], "null trace in list");
      const auto& ob = obscured[i]->trace;
      const auto d = pointer_distance_series(reference[i]->trace, ob);
      for (std::size_t t = 0; t < d.size(); ++t) {
        if (!ob.frames[t].obscuration_percent) continue;
        distances.push_back(d[t]);
        percents.push_back(*ob.frames[t].obscuration_percent);
      }
    }
    const Correlation c = obscuration_correlation(distances, percents);
    if (pearson_r) *pearson_r = c.pearson_r;
    emit(scatter_csv, c.scatter_csv);
  });
}

emp_status emp_decoder_train(const emp_trace* const* traces, size_t count, const char* config_json,
                             emp_decoder** out, char** loss) {
  return guarded([&] {
    require(out, "null argument");
    *out = nullptr;
    const auto ts = gather(traces, count);
    const TrainingData data = training_data_from_traces(ts);
    const TrainResult r = train_decoder(data, decoder_config(parse_options(config_json)));
    emit(loss, loss_csv(r));
    *out = new emp_decoder{r.decoder};
  });
}

emp_status emp_decoder_train_synthetic(size_t n, double noise_sigma, uint64_t data_seed,
                                       const char* config_json, emp_decoder** out, char** loss,
                                       double* heldout_iou) {
  return guarded([&] {
    require(out, "null argument");
    *out = nullptr;
    require(n >= 5, "synthetic decoder data needs at least 5 samples");
    const TrainingData all = synth_pointer_boxes(n, noise_sigma, data_seed);
    const std::size_t n_train = n - n / 5;
    TrainingData train{Matrix(n_train, kPointerDim), {}};
    std::copy_n(all.inputs.data.begin(), n_train * kPointerDim, train.inputs.data.begin());
    train.targets.assign(all.targets.begin(), all.targets.begin() + static_cast<std::ptrdiff_t>(n_train));
    const TrainResult r = train_decoder(train, decoder_config(parse_options(config_json)));
    if (heldout_iou) {
      double sum = 0.0;
      for (std::size_t i = n_train; i < n; ++i) {
        sum += iou(decode_bbox(r.decoder, all.inputs.row(i)).box, all.targets[i]);
      }
      *heldout_iou = sum / static_cast<double>(n - n_train);
    }
    emit(loss, loss_csv(r));
    *out = new emp_decoder{r.decoder};
  });
}

emp_status emp_decoder_save(const emp_decoder* decoder, const char* path) {
  return guarded([&] {
    require(decoder && path, "null argument");
    save_decoder(decoder->decoder, path);
  });
}

emp_status emp_decoder_load(const char* path, emp_decoder** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new emp_decoder{load_decoder(path)};
  });
}

void emp_decoder_free(emp_decoder* decoder) { delete decoder; }

emp_status emp_decoder_decode(const emp_decoder* decoder, const double* pointer, size_t length,
                              float box[4], int* repaired) {
  return guarded([&] {
    require(decoder && pointer && box, "null argument");
    const DecodedBox d = decode_bbox(decoder->decoder, std::span<const double>(pointer, length));
    box[0] = d.box.xmin;
    box[1] = d.box.ymin;
    box[2] = d.box.xmax;
    box[3] = d.box.ymax;
    if (repaired) *repaired = d.repaired ? 1 : 0;
  });
}

emp_status emp_decoder_decode_trace(const emp_decoder* decoder, const emp_trace* trace,
                                    char** csv_out) {
  return guarded([&] {
    require(decoder && trace && csv_out, "null argument");
    const EmbeddingTrace& t = trace->trace;
    require(t.declares(Position::kObjectPointer), "trace has no object pointer");
    std::string out = "frame,xmin,ymin,xmax,ymax,repaired,iou\n";
    std::vector<double> p;
    for (const auto& f : t.frames) {
      const auto v = f.at(Position::kObjectPointer).values();
      p.assign(v.begin(), v.end());
      const DecodedBox d = decode_bbox(decoder->decoder, p);
      out += std::to_string(f.frame_index) + ',' + util::format_float(d.box.xmin) + ',' +
             util::format_float(d.box.ymin) + ',' + util::format_float(d.box.xmax) + ',' +
             util::format_float(d.box.ymax) + ',' + (d.repaired ? "1" : "0") + ',' +
             (f.bbox ? util::format_double(iou(d.box, *f.bbox)) : std::string()) + '\n';
    }
    emit(csv_out, out);
  });
}

emp_status emp_forge_dataset(const char* options_json, const char* out_dir, int jobs,
                             char** index_json) {
  return guarded([&] {
    require(out_dir, "null argument");
    const json j = parse_options(options_json);
    const Transform transform = transform_from_string(j.value("transform", std::string("interjection")));
    const std::size_t n = j.value("n", std::size_t{1});
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});

    SampleOptions opt;
    if (j.contains("layout")) {
      const auto& l = j.at("layout");
      opt.layout.prefix = l.value("prefix", opt.layout.prefix);
      opt.layout.inter = l.value("inter", opt.layout.inter);
      opt.layout.suffix = l.value("suffix", opt.layout.suffix);
    }
    if (j.contains("fill")) {
      const auto& f = j.at("fill");
      opt.fill.mode = fill_mode(f.value("mode", std::string("black")));
      opt.fill.seed = f.value("seed", std::uint64_t{0});
    }

    std::unique_ptr<VideoPool> pool;
    const json p = j.value("pool", json::object());
    const std::string kind = p.value("kind", std::string("synthetic"));
    if (kind == "synthetic") {
      SyntheticPoolConfig c;
      c.count = p.value("count", c.count);
      c.num_frames = p.value("frames", opt.layout.total());
      c.width = p.value("width", c.width);
      c.height = p.value("height", c.height);
      c.seed = p.value("seed", c.seed);
      pool = std::make_unique<SyntheticPool>(c);
    } else if (kind == "directory") {
      pool = std::make_unique<DirectoryPool>(p.at("root").get<std::string>(),
                                             p.value("object_index", std::uint8_t{1}));
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown pool kind '" + kind + "'");
    }

    std::filesystem::create_directories(out_dir);
    std::vector<std::string> ids(n);
    std::atomic<std::size_t> next{0};
    std::mutex failure_lock;
    std::exception_ptr failure;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        {
          std::lock_guard<std::mutex> g(failure_lock);
          if (failure) return;
        }
        try {
          const TransformedVideo v = forge_sample(*pool, transform, seed, i, opt);
          save_transformed(v, (std::filesystem::path(out_dir) / v.id).string());
          ids[i] = v.id;
        } catch (...) {
          std::lock_guard<std::mutex> g(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const unsigned workers = worker_count(jobs, n);
    std::vector<std::thread> threads;
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);

    json index = json::array();
    for (const auto& id : ids) index.push_back({{"id", id}, {"manifest", id + "/manifest.json"}});
    emit(index_json, index.dump(2) + "\n");
  });
}

emp_status emp_synth_video(const char* spec_json, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "null argument");
    const json j = parse_options(spec_json);
    SynthVideoSpec s;
    s.video_id = j.value("video_id", s.video_id);
    s.num_frames = j.value("frames", s.num_frames);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    const std::string shape = j.value("shape", std::string("disk"));
    if (shape == "disk") s.shape = ObjectShape::kDisk;
    else if (shape == "square") s.shape = ObjectShape::kSquare;
    else throw Error(ErrorCode::kInvalidArgument, "unknown shape '" + shape + "'");
    s.size = j.value("size", s.size);
    if (j.contains("start") && !j.at("start").is_null()) s.start = j.at("start").get<std::array<double, 2>>();
    if (j.contains("velocity")) {
      const auto v = j.at("velocity").get<std::array<double, 2>>();
      s.velocity_x = v[0];
      s.velocity_y = v[1];
    }
    s.seed = j.value("seed", s.seed);
    const AnnotatedVideo video = synth_video(s);
    const std::filesystem::path root(out_dir);
    std::filesystem::create_directories(root / "frames");
    std::filesystem::create_directories(root / "masks");
    for (std::size_t t = 0; t < video.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.png", t);
      write_png((root / "frames" / name).string(), video.frames[t]);
      write_png((root / "masks" / name).string(), video.masks[t]);
    }
  });
}

}  // extern "C"
