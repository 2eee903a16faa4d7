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

#ifndef NIB_TESTS_TEST_UTIL_HPP_
#define NIB_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dual_encoder.hpp"
#include "error.hpp"
#include "json.hpp"
#include "eval_harness.hpp"
#include "manifest.hpp"

namespace nib::testing {

// Code of the nib::Error thrown by `fn`, or 0 when nothing is thrown.
inline int CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return static_cast<int>(e.code());
  }
  return 0;
}

inline int Code(ErrorCode c) { return static_cast<int>(c); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("nib-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// The artifacts `nib-cli init-toy --seed 0` writes, loaded back from disk.
struct ToyWorld {
  DualEncoderModel model;
  std::vector<Sample> dataset;
  Sample fixture;
};

inline const ToyWorld& SeedZeroWorld() {
  static const ToyWorld world = [] {
    TempDir dir("world");
    const ToyArtifacts art = WriteToyArtifacts(0, dir.path());
    ToyWorld w;
    w.model = LoadModel(art.model_manifest);
    w.dataset = LoadDataset(art.dataset_manifest, w.model.config);
    w.fixture = LoadDataset(art.fixture_manifest, w.model.config).front();
    return w;
  }();
  return world;
}

// Values computed by tests/golden/reference_oracle.py (float64 PyTorch) for
// the seed-0 toy artifacts: the two-concept fixture, then pair-000 and
// pair-001.
inline const nlohmann::json& Golden() {
  static const nlohmann::json doc = [] {
    std::ifstream in(NIB_GOLDEN_FILE);
    return nlohmann::json::parse(in);
  }();
  return doc;
}

inline const Sample& GoldenSample(std::size_t k) {
  const ToyWorld& w = SeedZeroWorld();
  return k == 0 ? w.fixture : w.dataset.at(k - 1);
}

inline std::vector<double> ToVector(const nlohmann::json& j) {
  return j.get<std::vector<double>>();
}

}  // namespace nib::testing

#endif  // NIB_TESTS_TEST_UTIL_HPP_
