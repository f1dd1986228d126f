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
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "emprobe/error.hpp"
#include "emprobe/trace.hpp"
#include "trace/trace_parser.hpp"

namespace emprobe {

using nlohmann::json;

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kBadMagic: return "bad_magic";
    case FormatErrorKind::kBadVersion: return "bad_version";
    case FormatErrorKind::kBadHeader: return "bad_header";
    case FormatErrorKind::kTruncated: return "truncated";
    case FormatErrorKind::kShapeMismatch: return "shape_mismatch";
    case FormatErrorKind::kCanonicalShape: return "canonical_shape";
    case FormatErrorKind::kNonFinite: return "non_finite";
    case FormatErrorKind::kOrdering: return "ordering";
    case FormatErrorKind::kFlags: return "flags";
    case FormatErrorKind::kTrailingBytes: return "trailing_bytes";
  }
  return "unknown";
}

int to_index(Position p) noexcept { return static_cast<int>(p); }

Position position_from_index(int id) {
  if (id < 0 || id >= kNumPositions) {
    throw Error(ErrorCode::kInvalidArgument, "position id out of range: " + std::to_string(id));
  }
  return static_cast<Position>(id);
}

std::string_view position_name(Position p) noexcept {
  switch (p) {
    case Position::kInput: return "input";
    case Position::kImageEmbedding: return "image_embedding";
    case Position::kMemoryAttention: return "memory_attention";
    case Position::kPromptAttention: return "prompt_attention";
    case Position::kObjectPointer: return "object_pointer";
    case Position::kMemoryFeatures: return "memory_features";
  }
  return "unknown";
}

std::optional<Shape> canonical_shape(Position p) {
  switch (p) {
    case Position::kImageEmbedding: return Shape{32, 256, 256};
    case Position::kMemoryAttention: return Shape{256, 64, 64};
    case Position::kPromptAttention: return Shape{256, 64, 64};
    case Position::kObjectPointer: return Shape{1, 256};
    case Position::kMemoryFeatures: return Shape{64, 64, 64};
    case Position::kInput: break;
  }
  return std::nullopt;
}

std::string_view to_string(Transform t) noexcept {
  switch (t) {
    case Transform::kClean: return "clean";
    case Transform::kInterjection: return "interjection";
    case Transform::kObjectRemoval: return "object_removal";
    case Transform::kContextRemoval: return "context_removal";
    case Transform::kObscuration: return "obscuration";
    case Transform::kOverlay3: return "overlay3";
    case Transform::kSynthetic: return "synthetic";
  }
  return "unknown";
}

Transform transform_from_string(std::string_view name) {
  for (auto t : {Transform::kClean, Transform::kInterjection, Transform::kObjectRemoval,
                 Transform::kContextRemoval, Transform::kObscuration, Transform::kOverlay3,
                 Transform::kSynthetic}) {
    if (to_string(t) == name) return t;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown transform '" + std::string(name) + "'");
}

const Tensor& FrameRecord::at(Position p) const {
  auto it = tensors.find(p);
  if (it == tensors.end()) {
    throw Error(ErrorCode::kInvalidArgument, "frame " + std::to_string(frame_index) +
                                                 " has no tensor at position " +
                                                 std::to_string(to_index(p)));
  }
  return it->second;
}

bool EmbeddingTrace::declares(Position p) const noexcept {
  return std::any_of(positions.begin(), positions.end(),
                     [p](const PositionDecl& d) { return d.id == p; });
}

const Shape& EmbeddingTrace::shape_of(Position p) const {
  for (const auto& d : positions) {
    if (d.id == p) return d.shape;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "trace '" + video_id + "' does not declare position " + std::to_string(to_index(p)));
}

bool bit_identical(const EmbeddingTrace& a, const EmbeddingTrace& b) {
  if (a.video_id != b.video_id || a.transform != b.transform || a.canonical != b.canonical ||
      a.positions != b.positions || a.extra_header != b.extra_header ||
      a.frames.size() != b.frames.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    const auto& fa = a.frames[i];
    const auto& fb = b.frames[i];
    if (fa.frame_index != fb.frame_index || fa.object_present != fb.object_present ||
        fa.obscuration_percent != fb.obscuration_percent || fa.bbox != fb.bbox ||
        fa.tensors.size() != fb.tensors.size()) {
      return false;
    }
    for (const auto& [pos, ta] : fa.tensors) {
      auto it = fb.tensors.find(pos);
      if (it == fb.tensors.end() || !ta.bit_equal(it->second)) return false;
    }
  }
  return true;
}

namespace {

const std::set<std::string> kReservedKeys = {"video_id", "transform", "num_frames", "canonical",
                                             "positions", "dtype", "endian"};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

void write_tensor_payload(std::ostream& sink, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    sink.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    std::string buf;
    buf.reserve(values.size() * 4);
    for (float v : values) put_f32(buf, v);
    sink.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

void check_bbox(const Bbox& b, std::uint32_t frame) {
  if (!b.ordered() || !b.in_unit_square()) {
    throw FormatError(FormatErrorKind::kFlags,
                      "frame " + std::to_string(frame) + ": bbox not a normalized ordered box",
                      frame);
  }
}

void check_for_write(const EmbeddingTrace& trace, const std::vector<PositionDecl>& decls) {
  std::set<Position> seen;
  for (const auto& d : decls) {
    if (!seen.insert(d.id).second) {
      throw FormatError(FormatErrorKind::kBadHeader,
                        "position " + std::to_string(to_index(d.id)) + " declared twice");
    }
    if (d.shape.empty() || std::find(d.shape.begin(), d.shape.end(), 0u) != d.shape.end()) {
      throw FormatError(FormatErrorKind::kBadHeader, "empty shape for position " +
                                                         std::to_string(to_index(d.id)));
    }
    if (trace.canonical) {
      auto canon = canonical_shape(d.id);
      if (canon && *canon != d.shape) {
        throw FormatError(FormatErrorKind::kCanonicalShape,
                          "position " + std::to_string(to_index(d.id)) + " shape " +
                              shape_to_string(d.shape) + " is not canonical " +
                              shape_to_string(*canon));
      }
    }
  }
  for (const auto& key : trace.extra_header) {
    if (kReservedKeys.count(key.first)) {
      throw FormatError(FormatErrorKind::kBadHeader, "extra header key '" + key.first +
                                                         "' collides with a reserved key");
    }
  }
  std::optional<std::uint32_t> prev;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const auto& f = trace.frames[i];
    if ((!prev && f.frame_index != 0) || (prev && f.frame_index <= *prev)) {
      throw FormatError(FormatErrorKind::kOrdering,
                        "frame indices must increase strictly from 0 (got " +
                            std::to_string(f.frame_index) + " at record " + std::to_string(i) + ")",
                        f.frame_index);
    }
    prev = f.frame_index;
    if (f.tensors.size() != decls.size()) {
      throw FormatError(FormatErrorKind::kShapeMismatch,
                        "frame " + std::to_string(f.frame_index) + " carries " +
                            std::to_string(f.tensors.size()) + " tensors, header declares " +
                            std::to_string(decls.size()),
                        f.frame_index);
    }
    for (const auto& d : decls) {
      auto it = f.tensors.find(d.id);
      if (it == f.tensors.end() || it->second.shape() != d.shape) {
        throw FormatError(FormatErrorKind::kShapeMismatch,
                          "frame " + std::to_string(f.frame_index) + " position " +
                              std::to_string(to_index(d.id)) + " does not match declared shape " +
                              shape_to_string(d.shape),
                          f.frame_index);
      }
      for (float v : it->second.values()) {
        if (!std::isfinite(v)) {
          throw FormatError(FormatErrorKind::kNonFinite,
                            "frame " + std::to_string(f.frame_index) + " position " +
                                std::to_string(to_index(d.id)) + " holds a non-finite value",
                            f.frame_index);
        }
      }
    }
    if (f.obscuration_percent) {
      float o = *f.obscuration_percent;
      if (!(o >= 0.0f && o <= 1.0f)) {
        throw FormatError(FormatErrorKind::kFlags,
                          "frame " + std::to_string(f.frame_index) +
                              ": obscuration_percent outside [0,1]",
                          f.frame_index);
      }
    }
    if (f.bbox) check_bbox(*f.bbox, f.frame_index);
  }
}

std::vector<PositionDecl> sorted_decls(const EmbeddingTrace& trace) {
  auto decls = trace.positions;
  std::stable_sort(decls.begin(), decls.end(),
                   [](const PositionDecl& a, const PositionDecl& b) { return a.id < b.id; });
  return decls;
}

std::string make_header(const EmbeddingTrace& trace, const std::vector<PositionDecl>& decls) {
  json h = json::object();
  h["video_id"] = trace.video_id;
  h["transform"] = std::string(to_string(trace.transform));
  h["num_frames"] = static_cast<std::uint32_t>(trace.frames.size());
  h["canonical"] = trace.canonical;
  json positions = json::array();
  for (const auto& d : decls) {
    positions.push_back({{"id", to_index(d.id)}, {"shape", d.shape}});
  }
  h["positions"] = std::move(positions);
  h["dtype"] = "f32";
  h["endian"] = "little";
  for (const auto& [key, value] : trace.extra_header) {
    h[key] = json::parse(value);
  }
  return h.dump();
}

}  // namespace

std::string header_json(const EmbeddingTrace& trace) {
  return make_header(trace, sorted_decls(trace));
}

std::uint64_t write_trace(const EmbeddingTrace& trace, std::ostream& sink) {
  const auto decls = sorted_decls(trace);
  check_for_write(trace, decls);
  const std::string header = make_header(trace, decls);

  std::string prefix(kTraceMagic, 4);
  put_u16(prefix, kTraceVersion);
  put_u32(prefix, static_cast<std::uint32_t>(header.size()));
  prefix += header;
  sink.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  std::uint64_t written = prefix.size();

  std::string preamble;
  for (const auto& f : trace.frames) {
    preamble.clear();
    put_u32(preamble, f.frame_index);
    std::uint8_t flags = 0;
    if (f.object_present) flags |= frame_flags::kObjectPresent;
    if (f.obscuration_percent) flags |= frame_flags::kObscurationValid;
    if (f.bbox) flags |= frame_flags::kBboxPresent;
    preamble.push_back(static_cast<char>(flags));
    put_f32(preamble, f.obscuration_percent.value_or(0.0f));
    const Bbox box = f.bbox.value_or(Bbox{});
    put_f32(preamble, box.xmin);
    put_f32(preamble, box.ymin);
    put_f32(preamble, box.xmax);
    put_f32(preamble, box.ymax);
    sink.write(preamble.data(), static_cast<std::streamsize>(preamble.size()));
    written += preamble.size();
    for (const auto& d : decls) {
      const auto values = f.tensors.at(d.id).values();
      write_tensor_payload(sink, values);
      written += values.size() * sizeof(float);
    }
  }
  if (!sink) throw Error(ErrorCode::kIo, "failed writing trace stream");
  return written;
}

std::uint64_t write_trace_file(const EmbeddingTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  auto n = write_trace(trace, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
  return n;
}

namespace detail {

namespace {

bool read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

constexpr std::size_t kMaxHeaderBytes = 16u << 20;
constexpr std::size_t kMaxTensorElements = std::size_t{1} << 30;

}  // namespace

void parse_trace(std::istream& in, IssueSink& sink, EmbeddingTrace* out) {
  char magic[4];
  if (!read_exact(in, magic, 4) || std::memcmp(magic, kTraceMagic, 4) != 0) {
    sink.fatal(FormatError(FormatErrorKind::kBadMagic, "missing EMTR magic bytes"));
    return;
  }
  unsigned char fixed[6];
  if (!read_exact(in, fixed, 6)) {
    sink.fatal(FormatError(FormatErrorKind::kTruncated, "truncated before header"));
    return;
  }
  const std::uint16_t version =
      static_cast<std::uint16_t>(fixed[0] | (static_cast<std::uint16_t>(fixed[1]) << 8));
  if (version != kTraceVersion) {
    sink.fatal(FormatError(FormatErrorKind::kBadVersion,
                           "unsupported trace version " + std::to_string(version)));
    return;
  }
  const std::uint32_t header_len = get_u32(fixed + 2);
  if (header_len > kMaxHeaderBytes) {
    sink.fatal(FormatError(FormatErrorKind::kBadHeader,
                           "header length " + std::to_string(header_len) + " exceeds limit"));
    return;
  }
  std::string header(header_len, '\0');
  if (!read_exact(in, header.data(), header_len)) {
    sink.fatal(FormatError(FormatErrorKind::kTruncated, "truncated inside header"));
    return;
  }

  EmbeddingTrace trace;
  std::uint32_t num_frames = 0;
  try {
    const json h = json::parse(header);
    trace.video_id = h.at("video_id").get<std::string>();
    trace.transform = transform_from_string(h.at("transform").get<std::string>());
    num_frames = h.at("num_frames").get<std::uint32_t>();
    trace.canonical = h.at("canonical").get<bool>();
    if (h.at("dtype").get<std::string>() != "f32" || h.at("endian").get<std::string>() != "little") {
      sink.fatal(FormatError(FormatErrorKind::kBadHeader, "only little-endian f32 is supported"));
      return;
    }
    for (const auto& p : h.at("positions")) {
      PositionDecl d{position_from_index(p.at("id").get<int>()), p.at("shape").get<Shape>()};
      trace.positions.push_back(std::move(d));
    }
    for (const auto& [key, value] : h.items()) {
      if (!kReservedKeys.count(key)) trace.extra_header[key] = value.dump();
    }
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    sink.fatal(FormatError(FormatErrorKind::kBadHeader, std::string("bad header: ") + e.what()));
    return;
  }

  for (std::size_t i = 0; i < trace.positions.size(); ++i) {
    const auto& d = trace.positions[i];
    if (i > 0 && trace.positions[i - 1].id >= d.id) {
      sink.fatal(FormatError(FormatErrorKind::kBadHeader,
                             "positions must be listed once each in ascending id order"));
      return;
    }
    if (d.shape.empty() || std::find(d.shape.begin(), d.shape.end(), 0u) != d.shape.end() ||
        element_count(d.shape) > kMaxTensorElements) {
      sink.fatal(FormatError(FormatErrorKind::kBadHeader,
                             "invalid shape " + shape_to_string(d.shape) + " for position " +
                                 std::to_string(to_index(d.id))));
      return;
    }
    if (trace.canonical) {
      auto canon = canonical_shape(d.id);
      if (canon && *canon != d.shape) {
        // Shapes are still self-consistent, so the frames remain parseable.
        sink.report(FormatError(FormatErrorKind::kCanonicalShape,
                                "position " + std::to_string(to_index(d.id)) + " declared " +
                                    shape_to_string(d.shape) + ", canonical is " +
                                    shape_to_string(*canon)),
                    d.id);
      }
    }
  }

  std::optional<std::uint32_t> prev_index;
  unsigned char pre[kFramePreambleBytes];
  for (std::uint32_t i = 0; i < num_frames; ++i) {
    const std::uint32_t expected = prev_index ? *prev_index + 1 : 0;
    if (!read_exact(in, pre, kFramePreambleBytes)) {
      sink.fatal(FormatError(FormatErrorKind::kTruncated,
                             "truncated in preamble of record " + std::to_string(i) +
                                 " (frame_index " + std::to_string(expected) + ")",
                             expected));
      return;
    }
    FrameRecord f;
    f.frame_index = get_u32(pre);
    const std::uint8_t flags = pre[4];
    const float obsc = get_f32(pre + 5);
    const Bbox box{get_f32(pre + 9), get_f32(pre + 13), get_f32(pre + 17), get_f32(pre + 21)};

    if ((!prev_index && f.frame_index != 0) || (prev_index && f.frame_index <= *prev_index)) {
      sink.report(FormatError(FormatErrorKind::kOrdering,
                              "frame_index " + std::to_string(f.frame_index) + " at record " +
                                  std::to_string(i) + " breaks strict increase from 0",
                              f.frame_index));
    }
    prev_index = f.frame_index;

    f.object_present = flags & frame_flags::kObjectPresent;
    auto flag_issue = [&](const std::string& what) {
      sink.report(FormatError(FormatErrorKind::kFlags,
                              "frame " + std::to_string(f.frame_index) + ": " + what,
                              f.frame_index));
    };
    if (flags & ~frame_flags::kKnownMask) flag_issue("reserved flag bits set");
    if (flags & frame_flags::kObscurationValid) {
      if (!(obsc >= 0.0f && obsc <= 1.0f)) flag_issue("obscuration_percent outside [0,1]");
      f.obscuration_percent = obsc;
    } else if (std::bit_cast<std::uint32_t>(obsc) != 0) {
      flag_issue("obscuration_percent set without its valid flag");
    }
    if (flags & frame_flags::kBboxPresent) {
      if (!box.ordered() || !box.in_unit_square()) flag_issue("bbox not a normalized ordered box");
      f.bbox = box;
    } else if (box != Bbox{} || std::signbit(box.xmin) || std::signbit(box.ymin) ||
               std::signbit(box.xmax) || std::signbit(box.ymax)) {
      flag_issue("bbox bytes set without its present flag");
    }

    for (const auto& d : trace.positions) {
      const std::size_t count = element_count(d.shape);
      std::vector<float> values(count);
      if (!read_exact(in, values.data(), count * sizeof(float))) {
        sink.fatal(FormatError(FormatErrorKind::kTruncated,
                               "truncated inside tensor for position " +
                                   std::to_string(to_index(d.id)) + " of frame_index " +
                                   std::to_string(f.frame_index),
                               f.frame_index));
        return;
      }
      if constexpr (std::endian::native != std::endian::little) {
        for (auto& v : values) {
          const auto u = std::bit_cast<std::uint32_t>(v);
          v = std::bit_cast<float>((u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) |
                                   (u << 24));
        }
      }
      if (!std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); })) {
        sink.report(FormatError(FormatErrorKind::kNonFinite,
                                "frame_index " + std::to_string(f.frame_index) + " position " +
                                    std::to_string(to_index(d.id)) + " holds NaN/Inf",
                                f.frame_index),
                    d.id);
      }
      if (out) f.tensors.emplace(d.id, Tensor(d.shape, std::move(values)));
    }
    sink.frame_done();
    if (out) trace.frames.push_back(std::move(f));
  }

  if (in.peek() != std::char_traits<char>::eof()) {
    sink.report(FormatError(FormatErrorKind::kTrailingBytes,
                            "bytes remain after the declared " + std::to_string(num_frames) +
                                " frames"));
  }
  if (out) *out = std::move(trace);
}

}  // namespace detail

namespace {

class ThrowingSink final : public detail::IssueSink {
 public:
  void report(const FormatError& e, std::optional<Position>) override { throw e; }
};

}  // namespace

EmbeddingTrace read_trace(std::istream& source) {
  ThrowingSink sink;
  EmbeddingTrace trace;
  detail::parse_trace(source, sink, &trace);
  return trace;
}

EmbeddingTrace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace '" + path + "'");
  return read_trace(in);
}

}  // namespace emprobe
