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

#include "manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "bundle.hpp"
#include "error.hpp"
#include "json.hpp"

namespace nib {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string ModelManifestJson(const ModelConfig& c, const std::string& bundle_name) {
  ordered_json doc;
  doc["family"] = kModelFamily;
  doc["schema_version"] = kWeightSchemaVersion;
  doc["image_size"] = c.image_size;
  doc["channels"] = c.channels;
  doc["patch"] = c.patch;
  doc["d_model"] = c.d_model;
  doc["heads"] = c.heads;
  doc["layers"] = c.layers;
  doc["proj_dim"] = c.proj_dim;
  doc["vocab"] = c.vocab;
  doc["max_len"] = c.max_len;
  doc["ln_eps"] = c.ln_eps;
  doc["bottleneck_layer"] = c.bottleneck_layer;
  doc["bundle"] = bundle_name;
  return doc.dump(2) + "\n";
}

ModelConfig ParseModelManifest(const std::string& json_text, std::string* bundle_name) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    Check(doc.at("family").get<std::string>() == kModelFamily, ErrorCode::kManifest,
          "unsupported model family '" + doc.at("family").get<std::string>() + "'");
    Check(doc.at("schema_version").get<int>() == kWeightSchemaVersion, ErrorCode::kManifest,
          "unsupported weight schema version");
    ModelConfig c;
    c.image_size = doc.at("image_size").get<std::size_t>();
    c.channels = doc.at("channels").get<std::size_t>();
    c.patch = doc.at("patch").get<std::size_t>();
    c.d_model = doc.at("d_model").get<std::size_t>();
    c.heads = doc.at("heads").get<std::size_t>();
    c.layers = doc.at("layers").get<std::size_t>();
    c.proj_dim = doc.at("proj_dim").get<std::size_t>();
    c.vocab = doc.at("vocab").get<std::size_t>();
    c.max_len = doc.at("max_len").get<std::size_t>();
    c.ln_eps = doc.at("ln_eps").get<double>();
    c.bottleneck_layer = doc.value("bottleneck_layer", std::size_t{c.layers * 3 / 4});
    if (bundle_name) *bundle_name = doc.at("bundle").get<std::string>();
    c.Validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kManifest, std::string("malformed model manifest: ") + e.what());
  }
}

fs::path SaveModel(const DualEncoderModel& model, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  std::vector<BundleEntry> entries;
  ForEachWeight(model, [&](const std::string& name, const Tensor& t) {
    entries.push_back(ToEntry(name, t));
  });
  const std::string bundle_name = stem + ".nibt";
  WriteFileBytes(dir / bundle_name, WriteBundle(entries));
  const fs::path manifest = dir / (stem + ".json");
  WriteTextFile(manifest, ModelManifestJson(model.config, bundle_name));
  return manifest;
}

DualEncoderModel LoadModel(const fs::path& manifest_path) {
  std::string bundle_name;
  const ModelConfig config = ParseModelManifest(ReadTextFile(manifest_path), &bundle_name);
  const auto entries = ReadBundle(ReadFileBytes(manifest_path.parent_path() / bundle_name));
  std::map<std::string, const BundleEntry*> by_name;
  for (const BundleEntry& e : entries) by_name[e.name] = &e;

  DualEncoderModel model;
  model.config = config;
  model.image.blocks.resize(config.layers);
  model.text.blocks.resize(config.layers);
  const auto schema = WeightSchema(config);
  std::size_t next = 0;
  ForEachWeight(model, [&](const std::string& name, Tensor& slot) {
    const WeightSpec& spec = schema[next++];
    auto it = by_name.find(name);
    Check(it != by_name.end(), ErrorCode::kMissingWeight,
          "bundle lacks weight '" + name + "'");
    Check(it->second->shape == spec.shape, ErrorCode::kShapeMismatch,
          "weight '" + name + "' has shape " + ShapeString(it->second->shape) +
              ", config expects " + ShapeString(spec.shape));
    slot = ToTensor(*it->second);
  });
  return model;
}

fs::path SaveDataset(std::span<const Sample> samples, const fs::path& dir,
                     const std::string& stem) {
  fs::create_directories(dir);
  std::vector<BundleEntry> entries;
  ordered_json list = ordered_json::array();
  for (const Sample& s : samples) {
    const std::string entry = s.id + ".image";
    entries.push_back(ToEntry(entry, s.image));
    ordered_json item;
    item["id"] = s.id;
    item["image"] = entry;
    item["tokens"] = s.tokens;
    list.push_back(std::move(item));
  }
  const std::string bundle_name = stem + ".nibt";
  WriteFileBytes(dir / bundle_name, WriteBundle(entries));
  ordered_json doc;
  doc["bundle"] = bundle_name;
  doc["samples"] = std::move(list);
  const fs::path manifest = dir / (stem + ".json");
  WriteTextFile(manifest, doc.dump(2) + "\n");
  return manifest;
}

std::vector<Sample> LoadDataset(const fs::path& manifest_path, const ModelConfig& config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ReadTextFile(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kManifest, std::string("malformed dataset manifest: ") + e.what());
  }
  std::vector<Sample> samples;
  try {
    const auto entries =
        ReadBundle(ReadFileBytes(manifest_path.parent_path() / doc.at("bundle").get<std::string>()));
    std::map<std::string, const BundleEntry*> by_name;
    for (const BundleEntry& e : entries) by_name[e.name] = &e;
    const Shape image_shape{config.channels, config.image_size, config.image_size};
    for (const auto& item : doc.at("samples")) {
      Sample s;
      s.id = item.at("id").get<std::string>();
      const std::string entry = item.at("image").get<std::string>();
      auto it = by_name.find(entry);
      Check(it != by_name.end(), ErrorCode::kMissingWeight,
            "dataset bundle lacks image '" + entry + "'");
      Check(it->second->shape == image_shape, ErrorCode::kShapeMismatch,
            "image '" + entry + "' has shape " + ShapeString(it->second->shape) +
                ", model expects " + ShapeString(image_shape));
      s.image = ToTensor(*it->second);
      s.tokens = item.at("tokens").get<std::vector<std::size_t>>();
      ValidateTokens(config, s.tokens);
      samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kManifest, std::string("malformed dataset manifest: ") + e.what());
  }
  Check(!samples.empty(), ErrorCode::kEmptyInput, "dataset manifest lists no samples");
  return samples;
}

namespace {

constexpr std::size_t kConcepts = 6;
constexpr std::size_t kCaptionCandidates = 32;

double F32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::vector<std::vector<double>> ConceptTextures(const ModelConfig& c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> textures(kConcepts);
  for (auto& t : textures) {
    t.resize(c.channels * c.patch * c.patch);
    for (double& v : t) v = normal(rng);
  }
  return textures;
}

// Background noise plus textures painted on whole patch cells.
Tensor PaintImage(const ModelConfig& c, std::mt19937_64& rng,
                  const std::vector<std::pair<std::size_t, const std::vector<double>*>>& cells) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t s = c.image_size, p = c.patch, g = c.grid();
  std::vector<double> pixels(c.channels * s * s);
  for (double& v : pixels) v = 0.1 * normal(rng);
  for (const auto& [cell, texture] : cells) {
    const std::size_t gy = cell / g, gx = cell % g;
    for (std::size_t ch = 0; ch < c.channels; ++ch)
      for (std::size_t y = 0; y < p; ++y)
        for (std::size_t x = 0; x < p; ++x)
          pixels[(ch * s + gy * p + y) * s + gx * p + x] = (*texture)[(ch * p + y) * p + x];
  }
  for (double& v : pixels) v = F32(v);
  return Tensor({c.channels, s, s}, std::move(pixels));
}

std::vector<std::size_t> BestCaption(const DualEncoderModel& model, const Tensor& image,
                                     std::mt19937_64& rng) {
  const ModelConfig& c = model.config;
  const std::size_t max_content = c.max_len >= 3 ? c.max_len - 2 : 1;
  std::uniform_int_distribution<std::size_t> length(1, max_content);
  std::uniform_int_distribution<std::size_t> word(0, c.vocab - 3);
  const Tensor image_embedding = EncodeImage(model, image);
  std::vector<std::size_t> best;
  double best_score = -2.0;
  for (std::size_t k = 0; k < kCaptionCandidates; ++k) {
    std::vector<std::size_t> ids{c.start_token()};
    const std::size_t n = length(rng);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(word(rng));
    ids.push_back(c.end_token());
    const double score = Cosine(image_embedding, EncodeText(model, ids));
    if (score > best_score) {
      best_score = score;
      best = std::move(ids);
    }
  }
  return best;
}

}  // namespace

std::vector<Sample> MakeToyDataset(const DualEncoderModel& model, std::uint64_t seed,
                                   std::size_t count) {
  const ModelConfig& c = model.config;
  Check(c.max_len >= 3, ErrorCode::kConfig, "toy captions need max_len >= 3");
  std::mt19937_64 rng(seed);
  const auto textures = ConceptTextures(c, rng);
  std::vector<std::size_t> cells(c.num_patches());
  std::iota(cells.begin(), cells.end(), 0);
  std::uniform_int_distribution<std::size_t> concept_pick(0, kConcepts - 1);

  std::vector<Sample> samples;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t a = concept_pick(rng);
    std::size_t b = concept_pick(rng);
    if (b == a) b = (a + 1) % kConcepts;
    std::shuffle(cells.begin(), cells.end(), rng);
    const std::size_t per_concept = std::max<std::size_t>(1, cells.size() / 8);
    std::vector<std::pair<std::size_t, const std::vector<double>*>> painted;
    for (std::size_t k = 0; k < 2 * per_concept && k < cells.size(); ++k) {
      painted.emplace_back(cells[k], &textures[k < per_concept ? a : b]);
    }
    Sample s;
    char id[32];
    std::snprintf(id, sizeof(id), "pair-%03zu", i);
    s.id = id;
    s.image = PaintImage(c, rng, painted);
    s.tokens = BestCaption(model, s.image, rng);
    samples.push_back(std::move(s));
  }
  return samples;
}

Sample TwoConceptFixture(const DualEncoderModel& model, std::uint64_t seed) {
  const ModelConfig& c = model.config;
  std::mt19937_64 rng(seed);
  const auto textures = ConceptTextures(c, rng);
  std::vector<std::pair<std::size_t, const std::vector<double>*>> painted;
  const std::size_t g = c.grid();
  for (std::size_t cell = 0; cell < c.num_patches(); ++cell) {
    painted.emplace_back(cell, &textures[(cell % g) < g / 2 ? 0 : 1]);
  }
  Sample s;
  s.id = "two-concept";
  s.image = PaintImage(c, rng, painted);
  s.tokens = BestCaption(model, s.image, rng);
  return s;
}

ToyArtifacts WriteToyArtifacts(std::uint64_t seed, const fs::path& dir,
                               const ModelConfig& config, std::size_t pairs) {
  const DualEncoderModel model = InitToy(seed, config);
  ToyArtifacts out;
  out.model_manifest = SaveModel(model, dir, "model");
  const auto dataset = MakeToyDataset(model, seed + 1, pairs);
  out.dataset_manifest = SaveDataset(dataset, dir, "dataset");
  const Sample fixture = TwoConceptFixture(model);
  out.fixture_manifest = SaveDataset(std::span(&fixture, 1), dir, "two_concept");
  return out;
}

}  // namespace nib
