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
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "emprobe/error.hpp"
#include "emprobe/pointer_lab.hpp"

namespace emprobe {

double iou(const Bbox& a, const Bbox& b) noexcept {
  const double iw = std::max(0.0, static_cast<double>(std::min(a.xmax, b.xmax)) -
                                      static_cast<double>(std::max(a.xmin, b.xmin)));
  const double ih = std::max(0.0, static_cast<double>(std::min(a.ymax, b.ymax)) -
                                      static_cast<double>(std::max(a.ymin, b.ymin)));
  const double inter = iw * ih;
  const double area_a = std::max(0.0, static_cast<double>(a.xmax) - a.xmin) *
                        std::max(0.0, static_cast<double>(a.ymax) - a.ymin);
  const double area_b = std::max(0.0, static_cast<double>(b.xmax) - b.xmin) *
                        std::max(0.0, static_cast<double>(b.ymax) - b.ymin);
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

std::vector<DenseLayer> make_layers(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2 || sizes.back() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "decoder needs >= 2 layer sizes ending in 4");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] == 0 || sizes[l + 1] == 0) {
      throw Error(ErrorCode::kInvalidArgument, "decoder layer of width 0");
    }
    DenseLayer d;
    d.inputs = sizes[l];
    d.outputs = sizes[l + 1];
    d.activation = l + 2 == sizes.size() ? Activation::kSigmoid : Activation::kRelu;
    d.weights.assign(d.inputs * d.outputs, 0.0);
    d.bias.assign(d.outputs, 0.0);
    layers.push_back(std::move(d));
  }
  return layers;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::array<double, 4> box_array(const Bbox& b) { return {b.xmin, b.ymin, b.xmax, b.ymax}; }

}  // namespace

PointerDecoder PointerDecoder::zeros(const std::vector<std::size_t>& sizes) {
  PointerDecoder d;
  d.layers_ = make_layers(sizes);
  return d;
}

PointerDecoder PointerDecoder::initialized(const DecoderConfig& config,
                                           const std::vector<std::size_t>& sizes) {
  PointerDecoder d = zeros(sizes);
  d.config_ = config;
  std::mt19937_64 rng(config.seed);
  for (auto& layer : d.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& w : layer.weights) w = u(rng);
  }
  return d;
}

std::array<double, 4> PointerDecoder::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "decoder input has " + std::to_string(x.size()) +
                                                 " values, expects " +
                                                 std::to_string(input_dim()));
  }
  std::vector<double> a(x.begin(), x.end()), next;
  for (const auto& layer : layers_) {
    next.assign(layer.outputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weights.data() + o * layer.inputs;
      double z = layer.bias[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * a[i];
      next[o] = layer.activation == Activation::kRelu ? (std::isnan(z) ? z : std::max(0.0, z)) : sigmoid(z);
    }
    a.swap(next);
  }
  return {a[0], a[1], a[2], a[3]};
}

std::size_t PointerDecoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> PointerDecoder::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void PointerDecoder::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw Error(ErrorCode::kInvalidArgument, "parameter vector has the wrong length");
  }
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& w : l.weights) w = params[k++];
    for (auto& b : l.bias) b = params[k++];
  }
}

bool PointerDecoder::operator==(const PointerDecoder& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.inputs != b.inputs || a.outputs != b.outputs || a.activation != b.activation ||
        a.weights != b.weights || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

double PointerDecoder::loss(const Matrix& inputs, std::span<const Bbox> targets,
                            std::span<const std::size_t> rows, std::vector<double>* gradient) const {
  if (inputs.cols != input_dim() || targets.size() != inputs.rows) {
    throw Error(ErrorCode::kInvalidArgument, "decoder data has inconsistent dimensions");
  }
  const std::size_t batch = rows.size();
  if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  const std::size_t depth = layers_.size();

  // acts[l] is batch x width of the input to layer l; acts[depth] is the output.
  std::vector<std::vector<double>> acts(depth + 1);
  acts[0].resize(batch * input_dim());
  for (std::size_t s = 0; s < batch; ++s) {
    const auto src = inputs.row(rows[s]);
    std::copy(src.begin(), src.end(), acts[0].begin() + s * input_dim());
  }
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = layers_[l];
    auto& out = acts[l + 1];
    out.assign(batch * layer.outputs, 0.0);
    for (std::size_t s = 0; s < batch; ++s) {
      const double* a = acts[l].data() + s * layer.inputs;
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* w = layer.weights.data() + o * layer.inputs;
        double z = layer.bias[o];
        for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * a[i];
        out[s * layer.outputs + o] =
            layer.activation == Activation::kRelu ? (std::isnan(z) ? z : std::max(0.0, z)) : sigmoid(z);
      }
    }
  }

  const auto& y = acts[depth];
  const double norm = 1.0 / static_cast<double>(batch * 4);
  double total = 0.0;
  std::vector<double> delta(batch * 4);
  for (std::size_t s = 0; s < batch; ++s) {
    const auto t = box_array(targets[rows[s]]);
    for (std::size_t k = 0; k < 4; ++k) {
      const double out = y[s * 4 + k];
      const double e = out - t[k];
      total += e * e;
      delta[s * 4 + k] = 2.0 * e * norm * out * (1.0 - out);
    }
  }
  total *= norm;
  if (!gradient) return total;

  gradient->assign(parameter_count(), 0.0);
  std::vector<std::size_t> offsets(depth);
  for (std::size_t l = 0, off = 0; l < depth; ++l) {
    offsets[l] = off;
    off += layers_[l].weights.size() + layers_[l].bias.size();
  }
  std::vector<double> prev;
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = layers_[l];
    double* gw = gradient->data() + offsets[l];
    double* gb = gw + layer.weights.size();
    for (std::size_t s = 0; s < batch; ++s) {
      const double* a = acts[l].data() + s * layer.inputs;
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = delta[s * layer.outputs + o];
        if (d == 0.0) continue;
        gb[o] += d;
        double* row = gw + o * layer.inputs;
        for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += d * a[i];
      }
    }
    if (l == 0) break;
    prev.assign(batch * layer.inputs, 0.0);
    for (std::size_t s = 0; s < batch; ++s) {
      double* p = prev.data() + s * layer.inputs;
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = delta[s * layer.outputs + o];
        if (d == 0.0) continue;
        const double* w = layer.weights.data() + o * layer.inputs;
        for (std::size_t i = 0; i < layer.inputs; ++i) p[i] += d * w[i];
      }
      // Hidden layers are rectified: pass gradient only where the unit fired.
      const double* a = acts[l].data() + s * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        if (!(a[i] > 0.0)) p[i] = 0.0;
      }
    }
    delta.swap(prev);
  }
  return total;
}

TrainResult train_decoder(const TrainingData& data, const DecoderConfig& config) {
  return train_decoder(data, PointerDecoder::initialized(config), config);
}

TrainResult train_decoder(const TrainingData& data, PointerDecoder initial,
                          const DecoderConfig& config) {
  const std::size_t n = data.inputs.rows;
  if (data.targets.size() != n) throw Error(ErrorCode::kInvalidArgument, "inputs/targets differ in count");
  if (config.batch_size == 0 || n < config.batch_size) {
    throw Error(ErrorCode::kInvalidArgument, "training needs at least one full batch (n=" +
                                                 std::to_string(n) + ", batch=" +
                                                 std::to_string(config.batch_size) + ")");
  }
  for (const auto& b : data.targets) {
    if (!b.ordered() || !b.in_unit_square()) {
      throw Error(ErrorCode::kInvalidArgument, "training target is not a valid normalized box");
    }
  }
  TrainResult result{std::move(initial), {}, 0.0};
  result.decoder.set_config(config);
  PointerDecoder& net = result.decoder;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  result.loss_curve.push_back(net.loss(data.inputs, data.targets, all, nullptr));

  std::mt19937_64 rng(config.seed ^ 0x5eedf00dull);
  std::vector<std::size_t> order = all;
  std::vector<double> params = net.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      const double batch_loss = net.loss(data.inputs, data.targets,
                                         std::span<const std::size_t>(order).subspan(start, len),
                                         &grad);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kNumeric, "training diverged at epoch " + std::to_string(epoch));
      }
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = config.momentum * velocity[k] - config.learning_rate * grad[k];
        params[k] += velocity[k];
        if (!std::isfinite(params[k])) {
          throw Error(ErrorCode::kNumeric, "training diverged at epoch " + std::to_string(epoch));
        }
      }
      net.set_parameters(params);
    }
    const double epoch_loss = net.loss(data.inputs, data.targets, all, nullptr);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::kNumeric, "training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_curve.push_back(epoch_loss);
  }
  result.final_loss = result.loss_curve.back();
  return result;
}

DecodedBox decode_bbox(const PointerDecoder& decoder, std::span<const double> pointer) {
  for (double v : pointer) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumeric, "non-finite pointer value");
  }
  const auto y = decoder.forward(pointer);
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumeric, "decoder produced a non-finite box");
  }
  DecodedBox out;
  out.box = Bbox{static_cast<float>(y[0]), static_cast<float>(y[1]), static_cast<float>(y[2]),
                 static_cast<float>(y[3])};
  if (out.box.xmin > out.box.xmax) {
    std::swap(out.box.xmin, out.box.xmax);
    out.repaired = true;
  }
  if (out.box.ymin > out.box.ymax) {
    std::swap(out.box.ymin, out.box.ymax);
    out.repaired = true;
  }
  return out;
}

double grad_check(const PointerDecoder& decoder, std::span<const double> pointer,
                  const Bbox& target, double h, std::size_t samples, std::uint64_t seed) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be positive");
  }
  Matrix x(1, pointer.size());
  std::copy(pointer.begin(), pointer.end(), x.data.begin());
  const std::vector<Bbox> t = {target};
  const std::size_t row[1] = {0};

  std::vector<double> analytic;
  decoder.loss(x, t, row, &analytic);

  const std::size_t count = decoder.parameter_count();
  std::vector<std::size_t> picks(count);
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(picks.begin(), picks.end(), rng);
  picks.resize(std::min(samples, count));

  PointerDecoder probe = decoder;
  std::vector<double> params = decoder.parameters();
  double worst = 0.0;
  for (std::size_t k : picks) {
    const double saved = params[k];
    params[k] = saved + h;
    probe.set_parameters(params);
    const double up = probe.loss(x, t, row, nullptr);
    params[k] = saved - h;
    probe.set_parameters(params);
    const double down = probe.loss(x, t, row, nullptr);
    params[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
  }
  return worst;
}

TrainingData training_data_from_traces(std::span<const EmbeddingTrace> traces) {
  std::size_t rows = 0;
  for (const auto& t : traces) {
    if (!t.declares(Position::kObjectPointer) ||
        element_count(t.shape_of(Position::kObjectPointer)) != kPointerDim) {
      throw Error(ErrorCode::kInvalidArgument, "trace '" + t.video_id + "' lacks a 256-d pointer");
    }
    for (const auto& f : t.frames) rows += f.bbox.has_value();
  }
  TrainingData data{Matrix(rows, kPointerDim), {}};
  std::size_t r = 0;
  for (const auto& t : traces) {
    for (const auto& f : t.frames) {
      if (!f.bbox) continue;
      const auto v = f.at(Position::kObjectPointer).values();
      for (std::size_t c = 0; c < kPointerDim; ++c) data.inputs(r, c) = v[c];
      data.targets.push_back(*f.bbox);
      ++r;
    }
  }
  return data;
}

TrainingData synth_pointer_boxes(std::size_t n, double noise_sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr std::size_t kLatent = 8;
  const double gain = std::sqrt(static_cast<double>(kPointerDim) / kLatent);

  // Orthonormal latent basis (Gram-Schmidt on Gaussian columns).
  std::array<std::vector<double>, kLatent> basis;
  for (std::size_t k = 0; k < kLatent; ++k) {
    auto& u = basis[k];
    u.resize(kPointerDim);
    for (auto& v : u) v = normal(rng);
    for (std::size_t j = 0; j < k; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < kPointerDim; ++c) d += u[c] * basis[j][c];
      for (std::size_t c = 0; c < kPointerDim; ++c) u[c] -= d * basis[j][c];
    }
    double norm = 0.0;
    for (double v : u) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : u) v /= norm;
  }

  // Box parameters (center x, center y, width, height) read off the first
  // four basis directions of the pointer.
  const double spread[4] = {0.1, 0.1, 0.03, 0.03};
  const double offset[4] = {0.5, 0.5, 0.3, 0.3};
  TrainingData data{Matrix(n, kPointerDim), {}};
  data.targets.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto p = data.inputs.row(r);
    for (auto& v : p) v = 0.1 * normal(rng);
    for (std::size_t k = 0; k < kLatent; ++k) {
      const double z = gain * normal(rng);
      for (std::size_t c = 0; c < kPointerDim; ++c) p[c] += z * basis[k][c];
    }
    double g[4];
    for (int k = 0; k < 4; ++k) {
      double proj = 0.0;
      for (std::size_t c = 0; c < kPointerDim; ++c) proj += basis[k][c] * p[c];
      g[k] = offset[k] + spread[k] * proj / gain;
    }
    auto coord = [&](double v) {
      return static_cast<float>(std::clamp(v + noise_sigma * normal(rng), 0.0, 1.0));
    };
    Bbox b{coord(g[0] - g[2] / 2), coord(g[1] - g[3] / 2), coord(g[0] + g[2] / 2),
           coord(g[1] + g[3] / 2)};
    if (b.xmin > b.xmax) std::swap(b.xmin, b.xmax);
    if (b.ymin > b.ymax) std::swap(b.ymin, b.ymax);
    data.targets.push_back(b);
  }
  return data;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

const char* activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "sigmoid"; }

}  // namespace

void write_decoder(const PointerDecoder& decoder, std::ostream& sink) {
  nlohmann::json h;
  std::vector<std::size_t> sizes = {decoder.layers().front().inputs};
  std::vector<std::string> acts;
  for (const auto& l : decoder.layers()) {
    sizes.push_back(l.outputs);
    acts.push_back(activation_name(l.activation));
  }
  const auto& c = decoder.config();
  h["layers"] = sizes;
  h["activations"] = acts;
  h["seed"] = c.seed;
  h["epochs"] = c.epochs;
  h["learning_rate"] = c.learning_rate;
  h["momentum"] = c.momentum;
  h["batch_size"] = c.batch_size;
  const std::string header = h.dump();

  std::string out(kDecoderMagic, 4);
  out.push_back(static_cast<char>(kDecoderVersion & 0xff));
  out.push_back(static_cast<char>(kDecoderVersion >> 8));
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const auto& l : decoder.layers()) {
    for (double w : l.weights) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(w)));
    for (double b : l.bias) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(b)));
  }
  sink.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!sink) throw Error(ErrorCode::kIo, "failed writing decoder");
}

PointerDecoder read_decoder(std::istream& source) {
  auto need = [&](std::size_t n, const char* what) {
    std::string buf(n, '\0');
    source.read(buf.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(source.gcount()) != n) {
      throw FormatError(FormatErrorKind::kTruncated, std::string("decoder truncated in ") + what);
    }
    return buf;
  };
  const std::string magic = need(4, "magic");
  if (magic != std::string(kDecoderMagic, 4)) {
    throw FormatError(FormatErrorKind::kBadMagic, "missing EMDC magic bytes");
  }
  const std::string fixed = need(6, "preamble");
  const auto* f = reinterpret_cast<const unsigned char*>(fixed.data());
  if ((f[0] | (f[1] << 8)) != kDecoderVersion) {
    throw FormatError(FormatErrorKind::kBadVersion, "unsupported decoder version");
  }
  const std::uint32_t len = get_u32(f + 2);
  if (len > (1u << 20)) throw FormatError(FormatErrorKind::kBadHeader, "decoder header too long");
  const std::string header = need(len, "header");
  std::vector<std::size_t> sizes;
  DecoderConfig config;
  try {
    const auto h = nlohmann::json::parse(header);
    sizes = h.at("layers").get<std::vector<std::size_t>>();
    const auto acts = h.at("activations").get<std::vector<std::string>>();
    if (acts.size() + 1 != sizes.size()) throw std::runtime_error("activation count");
    for (std::size_t i = 0; i < acts.size(); ++i) {
      const bool last = i + 1 == acts.size();
      if (acts[i] != (last ? "sigmoid" : "relu")) throw std::runtime_error("activation layout");
    }
    config.seed = h.at("seed").get<std::uint64_t>();
    config.epochs = h.at("epochs").get<std::size_t>();
    config.learning_rate = h.value("learning_rate", config.learning_rate);
    config.momentum = h.value("momentum", config.momentum);
    config.batch_size = h.value("batch_size", config.batch_size);
  } catch (const std::exception& e) {
    throw FormatError(FormatErrorKind::kBadHeader, std::string("bad decoder header: ") + e.what());
  }
  PointerDecoder d = PointerDecoder::zeros(sizes);
  d.set_config(config);
  for (auto& l : d.layers()) {
    const std::string wb = need(4 * (l.weights.size() + l.bias.size()), "weights");
    const auto* p = reinterpret_cast<const unsigned char*>(wb.data());
    for (auto& w : l.weights) {
      w = std::bit_cast<float>(get_u32(p));
      p += 4;
    }
    for (auto& b : l.bias) {
      b = std::bit_cast<float>(get_u32(p));
      p += 4;
    }
  }
  if (source.peek() != std::char_traits<char>::eof()) {
    throw FormatError(FormatErrorKind::kTrailingBytes, "bytes remain after decoder weights");
  }
  return d;
}

void save_decoder(const PointerDecoder& decoder, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  write_decoder(decoder, out);
}

PointerDecoder load_decoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open decoder '" + path + "'");
  return read_decoder(in);
}

}  // namespace emprobe
