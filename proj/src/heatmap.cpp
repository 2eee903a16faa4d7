/*
 * Copyright 2026 The NIB Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "bundle.hpp"
#include "error.hpp"
#include "json.hpp"

namespace nib {

std::vector<std::uint8_t> EncodePgm(const SaliencyImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : image.normalized) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

std::string EncodeCsv(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  Check(rows * cols == values.size(), ErrorCode::kDimension, "csv extents do not match values");
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[r * cols + c]);
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string HeatmapMetadataJson(const std::string& sample_id, const AttributionMap& map,
                                std::size_t height, std::size_t width) {
  nlohmann::ordered_json doc;
  doc["id"] = sample_id;
  doc["method"] = map.method;
  doc["modality"] = ModalityName(map.modality);
  doc["layer"] = map.layer;
  doc["num_steps"] = map.num_steps;
  doc["completeness_gap"] = map.completeness_gap;
  doc["score_open"] = map.score_open;
  doc["score_closed"] = map.score_closed;
  doc["degenerate_closed"] = map.degenerate_closed;
  doc["grid"] = {map.grid_rows, map.grid_cols};
  doc["height"] = height;
  doc["width"] = width;
  if (map.seed) doc["seed"] = *map.seed;
  return doc.dump(2) + "\n";
}

HeatmapFiles WriteHeatmap(const std::filesystem::path& dir, const std::string& stem,
                          const AttributionMap& map, const ModelConfig& config) {
  std::filesystem::create_directories(dir);
  HeatmapFiles files;
  files.csv = dir / (stem + ".csv");
  files.json = dir / (stem + ".json");
  if (map.modality == Modality::kImage) {
    const SaliencyImage image = UpsampleBilinear(map, config.image_size, config.image_size);
    files.pgm = dir / (stem + ".pgm");
    WriteFileBytes(files.pgm, EncodePgm(image));
    WriteTextFile(files.csv, EncodeCsv(image.raw, image.height, image.width));
    WriteTextFile(files.json, HeatmapMetadataJson(stem, map, image.height, image.width));
  } else {
    WriteTextFile(files.csv, EncodeCsv(map.scores, 1, map.scores.size()));
    WriteTextFile(files.json, HeatmapMetadataJson(stem, map, 1, map.scores.size()));
  }
  return files;
}

}  // namespace nib
