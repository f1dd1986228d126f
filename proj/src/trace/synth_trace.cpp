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
#include <random>

#include "emprobe/error.hpp"
#include "emprobe/trace.hpp"

namespace emprobe {

EmbeddingTrace synth_trace(const SynthTraceSpec& spec) {
  if (spec.positions.empty()) throw Error(ErrorCode::kSpec, "synth_trace needs at least one position");
  if (!(spec.shift_magnitude >= 0.0) || !std::isfinite(spec.shift_magnitude)) {
    throw Error(ErrorCode::kSpec, "shift_magnitude must be finite and >= 0");
  }
  if (spec.interjection_begin > spec.interjection_end ||
      spec.interjection_end > spec.num_frames) {
    throw Error(ErrorCode::kSpec, "interjection range [" + std::to_string(spec.interjection_begin) +
                                      "," + std::to_string(spec.interjection_end) +
                                      ") is not inside [0," + std::to_string(spec.num_frames) + ")");
  }

  EmbeddingTrace trace;
  trace.video_id = spec.video_id;
  trace.transform = Transform::kSynthetic;
  trace.canonical = spec.canonical;
  trace.positions = spec.positions;
  std::sort(trace.positions.begin(), trace.positions.end(),
            [](const PositionDecl& a, const PositionDecl& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < trace.positions.size(); ++i) {
    if (trace.positions[i - 1].id == trace.positions[i].id) {
      throw Error(ErrorCode::kSpec, "position declared twice in synth spec");
    }
  }

  std::mt19937_64 rng(spec.base_seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::bernoulli_distribution coin(0.5);

  // Per-video offset and a +/-1 shift direction per element.
  struct Layout {
    std::vector<float> offset;
    std::vector<float> direction;
  };
  std::vector<Layout> layouts;
  for (const auto& d : trace.positions) {
    const std::size_t n = element_count(d.shape);
    if (n == 0) throw Error(ErrorCode::kSpec, "zero-sized shape in synth spec");
    Layout l{std::vector<float>(n), std::vector<float>(n)};
    for (auto& v : l.offset) v = normal(rng);
    for (auto& v : l.direction) v = coin(rng) ? 1.0f : -1.0f;
    layouts.push_back(std::move(l));
  }

  const float shift = static_cast<float>(spec.shift_magnitude);
  trace.frames.reserve(spec.num_frames);
  for (std::uint32_t t = 0; t < spec.num_frames; ++t) {
    const bool inside = t >= spec.interjection_begin && t < spec.interjection_end;
    FrameRecord f;
    f.frame_index = t;
    f.object_present = !inside;
    for (std::size_t p = 0; p < trace.positions.size(); ++p) {
      const auto& layout = layouts[p];
      std::vector<float> values(layout.offset.size());
      for (std::size_t e = 0; e < values.size(); ++e) {
        values[e] = layout.offset[e] + normal(rng) + (inside ? shift * layout.direction[e] : 0.0f);
      }
      f.tensors.emplace(trace.positions[p].id, Tensor(trace.positions[p].shape, std::move(values)));
    }
    trace.frames.push_back(std::move(f));
  }
  return trace;
}

}  // namespace emprobe
