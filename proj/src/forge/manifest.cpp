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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "emprobe/error.hpp"
#include "emprobe/forge.hpp"

namespace fs = std::filesystem;

namespace emprobe {

using nlohmann::ordered_json;

std::string manifest_json(const Manifest& manifest) {
  ordered_json j;
  j["id"] = manifest.id;
  j["transform"] = std::string(to_string(manifest.transform));
  j["sources"] = manifest.sources;
  ordered_json frames = ordered_json::array();
  for (const auto& f : manifest.frames) {
    ordered_json e;
    e["index"] = f.index;
    e["object_present"] = f.object_present;
    e["obscuration_percent"] =
        f.obscuration_percent ? ordered_json(*f.obscuration_percent) : ordered_json(nullptr);
    e["bbox"] = f.bbox ? ordered_json::array({f.bbox->xmin, f.bbox->ymin, f.bbox->xmax, f.bbox->ymax})
                       : ordered_json(nullptr);
    e["frame_path"] = f.frame_path;
    e["mask_path"] = f.mask_path;
    frames.push_back(std::move(e));
  }
  j["frames"] = std::move(frames);
  return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& json_text) {
  try {
    const auto j = ordered_json::parse(json_text);
    Manifest m;
    m.id = j.at("id").get<std::string>();
    m.transform = transform_from_string(j.at("transform").get<std::string>());
    m.sources = j.at("sources").get<std::vector<std::string>>();
    for (const auto& e : j.at("frames")) {
      ManifestFrame f;
      f.index = e.at("index").get<std::uint32_t>();
      f.object_present = e.at("object_present").get<bool>();
      if (!e.at("obscuration_percent").is_null()) {
        f.obscuration_percent = e.at("obscuration_percent").get<double>();
      }
      if (!e.at("bbox").is_null()) {
        const auto b = e.at("bbox").get<std::vector<float>>();
        if (b.size() != 4) throw Error(ErrorCode::kFormat, "bbox must have 4 entries");
        f.bbox = Bbox{b[0], b[1], b[2], b[3]};
      }
      f.frame_path = e.at("frame_path").get<std::string>();
      f.mask_path = e.at("mask_path").get<std::string>();
      m.frames.push_back(std::move(f));
    }
    return m;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad manifest: ") + e.what());
  }
}

Manifest save_transformed(const TransformedVideo& video, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "masks");
  Manifest manifest = video.manifest;
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    manifest.frames[i].frame_path = std::string("frames/") + name;
    manifest.frames[i].mask_path = std::string("masks/") + name;
    write_png((fs::path(dir) / manifest.frames[i].frame_path).string(), video.frames[i]);
    write_png((fs::path(dir) / manifest.frames[i].mask_path).string(), video.gt_masks[i]);
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary | std::ios::trunc);
  out << manifest_json(manifest);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest under '" + dir + "'");
  return manifest;
}

}  // namespace emprobe
