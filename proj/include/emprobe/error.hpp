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
#include <optional>
#include <stdexcept>
#include <string>

namespace emprobe {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kFormat,
  kNumeric,
  kDegenerate,
  kSpec,
  kUnsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class FormatErrorKind {
  kBadMagic,
  kBadVersion,
  kBadHeader,
  kTruncated,
  kShapeMismatch,
  kCanonicalShape,
  kNonFinite,
  kOrdering,
  kFlags,
  kTrailingBytes,
};

const char* to_string(FormatErrorKind kind);

// Parse failure in a binary trace or decoder file. `frame_index` is set when
// the failure is attributable to one frame record.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what,
              std::optional<std::uint32_t> frame_index = std::nullopt)
      : Error(ErrorCode::kFormat, what), kind_(kind), frame_index_(frame_index) {}

  FormatErrorKind kind() const noexcept { return kind_; }
  std::optional<std::uint32_t> frame_index() const noexcept { return frame_index_; }

 private:
  FormatErrorKind kind_;
  std::optional<std::uint32_t> frame_index_;
};

}  // namespace emprobe
