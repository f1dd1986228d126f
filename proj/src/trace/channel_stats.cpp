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

#include "emprobe/error.hpp"
#include "emprobe/trace.hpp"

namespace emprobe {

ChannelStats channel_stats(const Tensor& tensor, Position position) {
  if (position == Position::kObjectPointer) {
    throw Error(ErrorCode::kUnsupported, "object pointer has no spatial dims for channel stats");
  }
  const Shape& shape = tensor.shape();
  std::size_t channels = 1, rows = 0, cols = 0;
  if (shape.size() == 3) {
    channels = shape[0];
    rows = shape[1];
    cols = shape[2];
  } else if (shape.size() == 2) {
    rows = shape[0];
    cols = shape[1];
  } else {
    throw Error(ErrorCode::kUnsupported,
                "channel stats need a [C,H,W] or [H,W] tensor, got " + shape_to_string(shape));
  }
  if (channels == 0 || rows == 0 || cols == 0) {
    throw Error(ErrorCode::kInvalidArgument, "channel stats on empty tensor");
  }

  const std::size_t plane = rows * cols;
  ChannelStats out;
  out.mean2d = Grid2D{rows, cols, std::vector<double>(plane, 0.0)};
  out.var2d = Grid2D{rows, cols, std::vector<double>(plane, 0.0)};
  auto values = tensor.values();
  for (std::size_t c = 0; c < channels; ++c) {
    const float* src = values.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) out.mean2d.values[i] += src[i];
  }
  const double inv = 1.0 / static_cast<double>(channels);
  for (auto& m : out.mean2d.values) m *= inv;
  // Two-pass population variance.
  for (std::size_t c = 0; c < channels; ++c) {
    const float* src = values.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = src[i] - out.mean2d.values[i];
      out.var2d.values[i] += d * d;
    }
  }
  for (auto& v : out.var2d.values) v *= inv;
  return out;
}

}  // namespace emprobe
