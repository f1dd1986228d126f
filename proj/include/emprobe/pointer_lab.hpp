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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "emprobe/bbox.hpp"
#include "emprobe/trace.hpp"

namespace emprobe {

inline constexpr std::size_t kPointerDim = 256;

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

struct PointerSet {
  Matrix pointers;  // n x 256
  std::vector<std::uint32_t> frame_indices;
  std::vector<std::string> video_ids;
};

// Every frame's object pointer from each trace, in trace then frame order.
PointerSet collect_pointers(std::span<const EmbeddingTrace> traces);

// ---- PCA -----------------------------------------------------------------

struct PcaProjection {
  std::array<std::vector<double>, 2> components;  // orthonormal rows
  std::array<double, 2> explained_variance{};     // descending, sample covariance (n-1)
  double total_variance = 0.0;
  std::vector<double> mean;
  Matrix projections;  // n x 2
};

// Top-2 principal axes. Each component's largest-magnitude coordinate is made
// positive. Throws Error(kDegenerate) for n < 2 or zero spread.
PcaProjection pca2(const Matrix& points);

// Columns index,video_id,frame,pc1,pc2.
std::string pca_csv(const PcaProjection& pca, const PointerSet& set);

// ---- distances and correlation -------------------------------------------

// Per-frame Euclidean distance between the two traces' object pointers.
std::vector<double> pointer_distance_series(const EmbeddingTrace& a, const EmbeddingTrace& b);

// Throws Error(kDegenerate) when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
  double pearson_r = 0.0;
  std::string scatter_csv;  // distance,obscuration_percent
};

Correlation obscuration_correlation(std::span<const double> distances,
                                    std::span<const double> percents);

// ---- pointer -> bbox decoder ---------------------------------------------

enum class Activation { kRelu, kSigmoid };

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Activation activation = Activation::kRelu;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;
};

struct DecoderConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

inline const std::vector<std::size_t> kDecoderLayers = {kPointerDim, 128, 64, 4};

class PointerDecoder {
 public:
  // Uniform +/- sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static PointerDecoder initialized(const DecoderConfig& config,
                                    const std::vector<std::size_t>& sizes = kDecoderLayers);
  static PointerDecoder zeros(const std::vector<std::size_t>& sizes = kDecoderLayers);

  std::size_t input_dim() const { return layers_.front().inputs; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const DecoderConfig& config() const noexcept { return config_; }
  void set_config(const DecoderConfig& c) { config_ = c; }

  std::array<double, 4> forward(std::span<const double> x) const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  // Mean squared error over the 4 coordinates of every row in `rows`;
  // `gradient` (parameter order of parameters()) is filled when non-null.
  double loss(const Matrix& inputs, std::span<const Bbox> targets,
              std::span<const std::size_t> rows, std::vector<double>* gradient) const;

  bool operator==(const PointerDecoder&) const;

 private:
  std::vector<DenseLayer> layers_;
  DecoderConfig config_;
};

struct TrainingData {
  Matrix inputs;  // n x 256
  std::vector<Bbox> targets;
};

struct TrainResult {
  PointerDecoder decoder;
  std::vector<double> loss_curve;  // full-data MSE; entry 0 is before training
  double final_loss = 0.0;
};

// Mini-batch gradient descent with momentum; reshuffled each epoch from the
// config seed. Throws Error(kNumeric) naming the epoch on a non-finite loss.
TrainResult train_decoder(const TrainingData& data, const DecoderConfig& config);
TrainResult train_decoder(const TrainingData& data, PointerDecoder initial,
                          const DecoderConfig& config);

struct DecodedBox {
  Bbox box;
  bool repaired = false;
};

// Forward pass; swaps min/max coordinates that come out reversed.
DecodedBox decode_bbox(const PointerDecoder& decoder, std::span<const double> pointer);

// Max relative error between the analytic loss gradient and central
// differences over `samples` randomly chosen parameters.
double grad_check(const PointerDecoder& decoder, std::span<const double> pointer,
                  const Bbox& target, double h = 1e-4, std::size_t samples = 128,
                  std::uint64_t seed = 0);

// Pairs each frame's pointer with its bbox; frames without a bbox are skipped.
TrainingData training_data_from_traces(std::span<const EmbeddingTrace> traces);

// Pointers mix 8 Gaussian latent factors along a random orthonormal basis,
// plus isotropic noise of std 0.1. Box center and size are linear in the
// pointer's projection on the first four basis vectors; each coordinate
// then gets N(0, noise_sigma) noise and is clamped to [0,1].
TrainingData synth_pointer_boxes(std::size_t n, double noise_sigma, std::uint64_t seed);

inline constexpr char kDecoderMagic[4] = {'E', 'M', 'D', 'C'};
inline constexpr std::uint16_t kDecoderVersion = 1;

void write_decoder(const PointerDecoder& decoder, std::ostream& sink);
PointerDecoder read_decoder(std::istream& source);
void save_decoder(const PointerDecoder& decoder, const std::string& path);
PointerDecoder load_decoder(const std::string& path);

}  // namespace emprobe
