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

#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emprobe/trace.hpp"

namespace fixture {

// Random valid trace: up to `max_frames` frames, a random subset of
// positions with small random shapes, random flags and payloads.
inline emprobe::EmbeddingTrace random_trace(std::mt19937_64& rng, std::uint32_t max_frames = 8) {
  using namespace emprobe;
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<std::uint32_t> dim(1, 5);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::normal_distribution<float> normal(0.0f, 3.0f);

  EmbeddingTrace t;
  t.video_id = "rand" + std::to_string(rng() % 100000);
  t.transform = static_cast<Transform>(rng() % 7);
  for (int id = 0; id < kNumPositions; ++id) {
    if (!coin(rng)) continue;
    Shape s;
    const int rank = 1 + static_cast<int>(rng() % 3);
    for (int r = 0; r < rank; ++r) s.push_back(dim(rng));
    t.positions.push_back({position_from_index(id), s});
  }
  if (t.positions.empty()) t.positions.push_back({Position::kObjectPointer, {1, 4}});

  const std::uint32_t frames = static_cast<std::uint32_t>(rng() % (max_frames + 1));
  std::uint32_t index = 0;
  for (std::uint32_t f = 0; f < frames; ++f) {
    FrameRecord r;
    r.frame_index = index;
    index += 1 + static_cast<std::uint32_t>(rng() % 2);
    r.object_present = coin(rng);
    if (coin(rng)) r.obscuration_percent = unit(rng);
    if (coin(rng)) {
      float a = unit(rng), b = unit(rng), c = unit(rng), d = unit(rng);
      r.bbox = Bbox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    }
    for (const auto& p : t.positions) {
      std::vector<float> v(element_count(p.shape));
      for (auto& x : v) x = normal(rng);
      r.tensors.emplace(p.id, Tensor(p.shape, std::move(v)));
    }
    t.frames.push_back(std::move(r));
  }
  return t;
}

// Hand-rolled encoder for crafting files the library writer would refuse.
struct RawFrame {
  std::uint32_t index = 0;
  std::uint8_t flags = 1;
  float obscuration = 0.0f;
  float bbox[4] = {0, 0, 0, 0};
  std::vector<float> payload;  // all declared tensors, ascending position id
};

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& s, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(s, u);
}

inline std::string raw_trace(const std::string& header, const std::vector<RawFrame>& frames,
                             const std::string& magic = "EMTR", std::uint16_t version = 1) {
  std::string s = magic;
  put_u16(s, version);
  put_u32(s, static_cast<std::uint32_t>(header.size()));
  s += header;
  for (const auto& f : frames) {
    put_u32(s, f.index);
    s.push_back(static_cast<char>(f.flags));
    put_f32(s, f.obscuration);
    for (float b : f.bbox) put_f32(s, b);
    for (float v : f.payload) put_f32(s, v);
  }
  return s;
}

inline std::string encode(const emprobe::EmbeddingTrace& t) {
  std::ostringstream out;
  emprobe::write_trace(t, out);
  return out.str();
}

inline emprobe::EmbeddingTrace decode(const std::string& bytes) {
  std::istringstream in(bytes);
  return emprobe::read_trace(in);
}

inline emprobe::ValidationReport validate(const std::string& bytes) {
  std::istringstream in(bytes);
  return emprobe::validate_trace(in);
}

}  // namespace fixture
