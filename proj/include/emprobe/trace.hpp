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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emprobe/bbox.hpp"
#include "emprobe/error.hpp"
#include "emprobe/tensor.hpp"

namespace emprobe {

// Observation points along the segmentation pipeline. `kInput` is the
// model-input frame; its shape is declared by whoever captured the trace.
enum class Position : std::uint8_t {
  kInput = 0,
  kImageEmbedding = 1,
  kMemoryAttention = 2,
  kPromptAttention = 3,
  kObjectPointer = 4,
  kMemoryFeatures = 5,
};

inline constexpr int kNumPositions = 6;

int to_index(Position p) noexcept;
Position position_from_index(int id);
std::string_view position_name(Position p) noexcept;

// Shape the capture model emits at `p`; empty for kInput.
std::optional<Shape> canonical_shape(Position p);

enum class Transform {
  kClean,
  kInterjection,
  kObjectRemoval,
  kContextRemoval,
  kObscuration,
  kOverlay3,
  kSynthetic,
};

std::string_view to_string(Transform t) noexcept;
Transform transform_from_string(std::string_view name);

struct PositionDecl {
  Position id;
  Shape shape;
  bool operator==(const PositionDecl&) const = default;
};

struct FrameRecord {
  std::uint32_t frame_index = 0;
  bool object_present = true;
  std::optional<float> obscuration_percent;
  std::optional<Bbox> bbox;
  std::map<Position, Tensor> tensors;

  const Tensor& at(Position p) const;
  bool operator==(const FrameRecord&) const = default;
};

struct EmbeddingTrace {
  std::string video_id;
  Transform transform = Transform::kClean;
  bool canonical = false;
  std::vector<PositionDecl> positions;  // ascending id
  std::vector<FrameRecord> frames;
  // Header keys this library does not interpret, as compact JSON values.
  std::map<std::string, std::string> extra_header;

  bool declares(Position p) const noexcept;
  const Shape& shape_of(Position p) const;
  bool operator==(const EmbeddingTrace&) const = default;
};

// Bitwise comparison of every tensor plus all metadata.
bool bit_identical(const EmbeddingTrace& a, const EmbeddingTrace& b);

// ---- binary format -------------------------------------------------------

inline constexpr char kTraceMagic[4] = {'E', 'M', 'T', 'R'};
inline constexpr std::uint16_t kTraceVersion = 1;
// u32 frame_index + u8 flags + f32 obscuration + 4 x f32 bbox
inline constexpr std::size_t kFramePreambleBytes = 4 + 1 + 4 + 16;

namespace frame_flags {
inline constexpr std::uint8_t kObjectPresent = 1u << 0;
inline constexpr std::uint8_t kObscurationValid = 1u << 1;
inline constexpr std::uint8_t kBboxPresent = 1u << 2;
inline constexpr std::uint8_t kKnownMask = 0x07;
}  // namespace frame_flags

// Throws FormatError (kShapeMismatch/kOrdering/...) if `trace` breaks its
// invariants, Error(kIo) on stream failure. Returns bytes written.
std::uint64_t write_trace(const EmbeddingTrace& trace, std::ostream& sink);
std::uint64_t write_trace_file(const EmbeddingTrace& trace, const std::string& path);

// Strict reader: first problem throws a FormatError naming its kind.
EmbeddingTrace read_trace(std::istream& source);
EmbeddingTrace read_trace_file(const std::string& path);

// Header JSON exactly as written (useful to size-check files).
std::string header_json(const EmbeddingTrace& trace);

// ---- validation ----------------------------------------------------------

struct Violation {
  FormatErrorKind kind;
  std::optional<std::uint32_t> frame_index;
  std::optional<Position> position;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::uint32_t frames_read = 0;
  bool ok() const noexcept { return violations.empty(); }
};

// Lenient pass over a trace file that records every violation it can find.
// Only an unreadable source throws (Error(kIo)).
ValidationReport validate_trace(std::istream& source);
ValidationReport validate_trace_file(const std::string& path);

// ---- synthetic traces ----------------------------------------------------

struct SynthTraceSpec {
  std::string video_id = "synthetic";
  std::uint32_t num_frames = 28;
  std::vector<PositionDecl> positions;
  std::uint32_t interjection_begin = 12;
  std::uint32_t interjection_end = 16;  // exclusive
  double shift_magnitude = 0.0;         // in units of the per-element noise sigma
  std::uint64_t base_seed = 0;
  bool canonical = false;
};

EmbeddingTrace synth_trace(const SynthTraceSpec& spec);

// ---- channel statistics --------------------------------------------------

struct Grid2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct ChannelStats {
  Grid2D mean2d;
  Grid2D var2d;  // population variance over channels
};

// Reduces the first (channel) axis. Rank-2 input is treated as one channel.
// Throws Error(kUnsupported) for the object pointer.
ChannelStats channel_stats(const Tensor& tensor, Position position);

}  // namespace emprobe
