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

#ifndef NIB_SRC_MANIFEST_HPP_
#define NIB_SRC_MANIFEST_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dual_encoder.hpp"
#include "eval_harness.hpp"

namespace nib {

inline constexpr const char* kModelFamily = "dual-encoder-v1";
inline constexpr int kWeightSchemaVersion = 1;

// Writes <dir>/<stem>.nibt and the manifest <dir>/<stem>.json; returns the
// manifest path.
std::filesystem::path SaveModel(const DualEncoderModel& model, const std::filesystem::path& dir,
                                const std::string& stem = "model");

// Resolves the bundle relative to the manifest, checks every schema entry
// for presence and shape (kMissingWeight / kShapeMismatch name the entry).
DualEncoderModel LoadModel(const std::filesystem::path& manifest_path);

std::string ModelManifestJson(const ModelConfig& config, const std::string& bundle_name);
ModelConfig ParseModelManifest(const std::string& json_text, std::string* bundle_name);

// Dataset manifest: {"bundle": ..., "samples": [{"id", "image", "tokens"}]},
// images stored as float32 [C, H, W] entries in the bundle.
std::filesystem::path SaveDataset(std::span<const Sample> samples,
                                  const std::filesystem::path& dir, const std::string& stem);
std::vector<Sample> LoadDataset(const std::filesystem::path& manifest_path,
                                const ModelConfig& config);

// Seeded image-caption pairs: images are textured concept patches over a
// faint background; each caption is the best-scoring of several random
// token sequences, so most pairs have positive similarity.
std::vector<Sample> MakeToyDataset(const DualEncoderModel& model, std::uint64_t seed,
                                   std::size_t count);

// Left half of the image shows one concept texture, right half another.
Sample TwoConceptFixture(const DualEncoderModel& model, std::uint64_t seed = 7);

struct ToyArtifacts {
  std::filesystem::path model_manifest;
  std::filesystem::path dataset_manifest;
  std::filesystem::path fixture_manifest;
};

// init-toy: model (seed), 64-pair dataset and the two-concept fixture.
ToyArtifacts WriteToyArtifacts(std::uint64_t seed, const std::filesystem::path& dir,
                               const ModelConfig& config = ModelConfig{},
                               std::size_t pairs = 64);

}  // namespace nib

#endif  // NIB_SRC_MANIFEST_HPP_
