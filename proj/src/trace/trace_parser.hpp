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

#include <iosfwd>
#include <optional>

#include "emprobe/error.hpp"
#include "emprobe/trace.hpp"

namespace emprobe::detail {

// Receives problems found while parsing. `fatal` problems end the parse.
class IssueSink {
 public:
  virtual ~IssueSink() = default;
  virtual void report(const FormatError& e, std::optional<Position> position = std::nullopt) = 0;
  virtual void fatal(const FormatError& e) { report(e); }
  virtual void frame_done() {}
};

// Shared by the strict reader and the validator. `out` may be null when only
// the issues are wanted; tensors are then not retained.
void parse_trace(std::istream& in, IssueSink& sink, EmbeddingTrace* out);

}  // namespace emprobe::detail
