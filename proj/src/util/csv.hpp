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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emprobe::util {

// Shortest decimal text that round-trips the value.
std::string format_double(double v);
std::string format_float(float v);
std::string format_optional(const std::optional<double>& v);

double parse_double(std::string_view text);
std::optional<double> parse_optional(std::string_view text);

std::vector<std::string_view> split_line(std::string_view line, char sep = ',');
std::vector<std::string_view> split_lines(std::string_view text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace emprobe::util
