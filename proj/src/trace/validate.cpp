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

#include <fstream>

#include "emprobe/error.hpp"
#include "emprobe/trace.hpp"
#include "trace/trace_parser.hpp"

namespace emprobe {

namespace {

class CollectingSink final : public detail::IssueSink {
 public:
  explicit CollectingSink(ValidationReport& report) : report_(report) {}

  void report(const FormatError& e, std::optional<Position> position) override {
    report_.violations.push_back(Violation{e.kind(), e.frame_index(), position, e.what()});
  }
  void frame_done() override { ++report_.frames_read; }

 private:
  ValidationReport& report_;
};

}  // namespace

ValidationReport validate_trace(std::istream& source) {
  if (!source) throw Error(ErrorCode::kIo, "trace source is not readable");
  ValidationReport report;
  CollectingSink sink(report);
  detail::parse_trace(source, sink, nullptr);
  if (source.bad()) throw Error(ErrorCode::kIo, "I/O error while validating trace");
  return report;
}

ValidationReport validate_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace '" + path + "'");
  return validate_trace(in);
}

}  // namespace emprobe
