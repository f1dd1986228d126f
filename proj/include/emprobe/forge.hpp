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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emprobe/bbox.hpp"
#include "emprobe/image.hpp"
#include "emprobe/trace.hpp"

namespace emprobe {

struct AnnotatedVideo {
  std::string video_id;
  std::vector<RgbImage> frames;
  std::vector<Mask> masks;  // object of interest, one per frame

  std::size_t size() const noexcept { return frames.size(); }
  int width() const noexcept { return frames.empty() ? 0 : frames.front().width; }
  int height() const noexcept { return frames.empty() ? 0 : frames.front().height; }
};

// Reads lexicographically ordered frames (PNG/JPEG) and index masks (PNG);
// the object mask is every pixel whose index equals `object_index`.
AnnotatedVideo load_video(const std::string& frame_dir, const std::string& mask_dir,
                          std::uint8_t object_index, std::string video_id = {});

enum class ObjectShape { kDisk, kSquare };

struct SynthVideoSpec {
  std::string video_id = "synth";
  std::uint32_t num_frames = 28;
  int width = 128;
  int height = 128;
  ObjectShape shape = ObjectShape::kDisk;
  int size = 8;  // disk radius or square half-side, in pixels
  // Object center at frame 0; defaults to a trajectory centered in the frame.
  std::optional<std::array<double, 2>> start;
  double velocity_x = 0.0;
  double velocity_y = 0.0;
  std::uint64_t seed = 0;
};

// Moving disk or square on a textured background with exact masks.
AnnotatedVideo synth_video(const SynthVideoSpec& spec);

// ---- compositing ---------------------------------------------------------

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

// Per-frame top-left placement of a cutout.
using Path = std::vector<Point>;

Path linear_path(Point start, double velocity_x, double velocity_y, std::size_t frames);

// An object cut from a frame by its mask and cropped to the mask bounds.
struct Cutout {
  RgbImage pixels;
  Mask mask;
  int width() const noexcept { return mask.width; }
  int height() const noexcept { return mask.height; }
};

inline constexpr double kDonorMaxWidthFraction = 0.4;

// Crops the masked object; nearest-neighbor downscales it so its width is at
// most `max_width` (aspect preserved). Throws Error(kDegenerate) on an empty mask.
Cutout cut_object(const RgbImage& frame, const Mask& mask, int max_width);

// Cut from the first frame whose mask is non-empty, sized for a target frame.
Cutout donor_cutout(const AnnotatedVideo& donor, int target_frame_width);

// Hard-mask paste. Returns the covered pixels in `dst` coordinates. Throws
// Error(kInvalidArgument) when the cutout does not fit at `at`.
Mask paste(RgbImage& dst, const Cutout& cutout, Point at);

// |object AND obscuring| / |object|. Throws Error(kDegenerate) when the object
// mask is empty.
double obscuration_percent(const Mask& object_mask, const Mask& obscuring_mask);

// Normalized [xmin,ymin,xmax,ymax] of the mask's pixel extent (pixel edges).
std::optional<Bbox> normalized_bbox(const Mask& mask);

// ---- transformed videos --------------------------------------------------

struct ManifestFrame {
  std::uint32_t index = 0;
  bool object_present = true;
  std::optional<double> obscuration_percent;
  std::optional<Bbox> bbox;
  std::string frame_path;
  std::string mask_path;
  bool operator==(const ManifestFrame&) const = default;
};

struct Manifest {
  std::string id;
  Transform transform = Transform::kClean;
  std::vector<std::string> sources;
  std::vector<ManifestFrame> frames;
  bool operator==(const Manifest&) const = default;
};

std::string manifest_json(const Manifest& manifest);  // pretty-printed, stable key order
Manifest parse_manifest(const std::string& json_text);

struct TransformedVideo {
  std::string id;
  Transform transform = Transform::kClean;
  std::vector<RgbImage> frames;
  std::vector<Mask> gt_masks;
  Manifest manifest;
};

// Writes frames/NNNNN.png, masks/NNNNN.png and manifest.json under `dir`.
// Fills the path fields of the returned manifest (relative to `dir`).
Manifest save_transformed(const TransformedVideo& video, const std::string& dir);

struct SegmentLayout {
  std::uint32_t prefix = 12;
  std::uint32_t inter = 4;
  std::uint32_t suffix = 12;
  std::uint32_t total() const noexcept { return prefix + inter + suffix; }
};

// A[0,prefix) ++ B[b_offset, b_offset+inter) ++ A[prefix, prefix+suffix).
TransformedVideo forge_interjection(const AnnotatedVideo& a, const AnnotatedVideo& b,
                                    std::uint32_t b_offset, const SegmentLayout& layout = {});

// Pastes `donor` over base prefix and suffix frames along `path`; the
// interjection frames are the untouched base frames. An empty path selects
// the default: frame center, drifting (1,0) px per frame.
TransformedVideo forge_object_removal(const AnnotatedVideo& base, const Cutout& donor,
                                      const Path& path, const SegmentLayout& layout = {});

Path default_removal_path(int frame_width, int frame_height, const Cutout& donor,
                          std::size_t frames);

enum class FillMode { kBlack, kGray, kNoise };

struct Fill {
  FillMode mode = FillMode::kBlack;
  std::uint64_t seed = 0;  // kNoise only
};

// During the interjection window every pixel outside the object mask is
// replaced by `fill`.
TransformedVideo forge_context_removal(const AnnotatedVideo& base, const Fill& fill,
                                       const SegmentLayout& layout = {});

// Donor drawn on top of every base frame along `path` (|path| == |base|).
TransformedVideo forge_obscuration(const AnnotatedVideo& base, const Cutout& donor,
                                   const Path& path);

// Three donors drawn per frame in order (index 2 on top).
TransformedVideo forge_overlay3(const AnnotatedVideo& base, const std::array<Cutout, 3>& donors,
                                const std::array<Path, 3>& paths);

// ---- dataset sampling ----------------------------------------------------

class VideoPool {
 public:
  virtual ~VideoPool() = default;
  virtual std::size_t size() const = 0;
  virtual std::string id(std::size_t i) const = 0;
  virtual AnnotatedVideo load(std::size_t i) const = 0;
};

struct SyntheticPoolConfig {
  std::size_t count = 16;
  std::uint32_t num_frames = 28;
  int width = 128;
  int height = 128;
  std::uint64_t seed = 0;
};

// Procedural videos generated on demand from (seed, index).
class SyntheticPool final : public VideoPool {
 public:
  explicit SyntheticPool(SyntheticPoolConfig config);
  std::size_t size() const override { return config_.count; }
  std::string id(std::size_t i) const override;
  AnnotatedVideo load(std::size_t i) const override;
  SynthVideoSpec spec_for(std::size_t i) const;

 private:
  SyntheticPoolConfig config_;
};

// DAVIS layout: <root>/JPEGImages[/<res>]/<video>/ + <root>/Annotations[/<res>]/<video>/.
// Videos are loaded lazily.
class DirectoryPool final : public VideoPool {
 public:
  explicit DirectoryPool(const std::string& root, std::uint8_t object_index = 1);
  std::size_t size() const override { return videos_.size(); }
  std::string id(std::size_t i) const override { return videos_.at(i); }
  AnnotatedVideo load(std::size_t i) const override;

 private:
  std::string root_;
  std::string frame_root_;  // empty for the <root>/<video>/{frames,masks} layout
  std::string mask_root_;
  std::vector<std::string> videos_;
  std::uint8_t object_index_;
};

struct SampleOptions {
  SegmentLayout layout;
  Fill fill;
};

// Sample `index` of a dataset: seed = base_seed + index.
TransformedVideo forge_sample(const VideoPool& pool, Transform transform, std::uint64_t base_seed,
                              std::size_t index, const SampleOptions& options = {});

std::vector<Manifest> sample_dataset(const VideoPool& pool, Transform transform, std::size_t n,
                                     std::uint64_t base_seed, const SampleOptions& options = {});

}  // namespace emprobe
