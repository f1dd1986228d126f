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

namespace emprobe {

// Normalized [xmin, ymin, xmax, ymax] box.
struct Bbox {
  float xmin = 0.0f;
  float ymin = 0.0f;
  float xmax = 0.0f;
  float ymax = 0.0f;

  bool ordered() const noexcept { return xmin <= xmax && ymin <= ymax; }
  bool in_unit_square() const noexcept {
    return xmin >= 0.0f && ymin >= 0.0f && xmax <= 1.0f && ymax <= 1.0f;
  }
  bool operator==(const Bbox&) const = default;
};

// Intersection over union. Disjoint boxes and the all-degenerate case give 0.
double iou(const Bbox& a, const Bbox& b) noexcept;

}  // namespace emprobe
