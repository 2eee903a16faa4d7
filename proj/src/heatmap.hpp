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

#ifndef NIB_SRC_HEATMAP_HPP_
#define NIB_SRC_HEATMAP_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dual_encoder.hpp"
#include "nib_core.hpp"

namespace nib {

// Binary 8-bit graymap of a [0, 1] map, values rounded to 0..255.
std::vector<std::uint8_t> EncodePgm(const SaliencyImage& image);
// Row-major CSV of raw values, one line per row, %.17g formatting.
std::string EncodeCsv(const std::vector<double>& values, std::size_t rows, std::size_t cols);
std::string HeatmapMetadataJson(const std::string& sample_id, const AttributionMap& map,
                                std::size_t height, std::size_t width);

struct HeatmapFiles {
  std::filesystem::path pgm;  // empty for text maps
  std::filesystem::path csv;
  std::filesystem::path json;
};

// Image maps are upsampled to the model's input resolution and written as
// <stem>.pgm + <stem>.csv + <stem>.json; text maps skip the PGM and write the
// per-token scores as a single CSV row.
HeatmapFiles WriteHeatmap(const std::filesystem::path& dir, const std::string& stem,
                          const AttributionMap& map, const ModelConfig& config);

}  // namespace nib

#endif  // NIB_SRC_HEATMAP_HPP_
