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

#include <exception>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "dual_encoder.hpp"
#include "error.hpp"
#include "eval_harness.hpp"
#include "heatmap.hpp"
#include "manifest.hpp"
#include "nib/nib.h"
#include "nib_core.hpp"
#include "verify.hpp"
#include "bundle.hpp"

struct nib_model {
  nib::DualEncoderModel model;
};

struct nib_dataset {
  std::vector<nib::Sample> samples;
};

struct nib_map {
  nib::AttributionMap map;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
nib_status Guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return NIB_OK;
  } catch (const nib::Error& e) {
    last_error = e.what();
    return static_cast<nib_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return NIB_ERR_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return NIB_ERR_INTERNAL;
}

void Require(const void* p, const char* what) {
  nib::Check(p != nullptr, nib::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

nib::AttributionOptions ToOptions(const nib_attribute_options& o, const nib::ModelConfig& c) {
  nib::AttributionOptions out;
  out.layer = o.layer == 0 ? c.bottleneck_layer : o.layer;
  out.num_steps = o.num_steps;
  out.m2ib.beta = o.beta;
  out.m2ib.iters = o.m2ib_iters;
  out.m2ib.noise_samples = o.noise_samples;
  out.seed = o.seed;
  return out;
}

nib::MethodId ToMethod(nib_method m) {
  const auto all = nib::AllMethods();
  nib::Check(static_cast<int>(m) >= 0 && static_cast<std::size_t>(m) < all.size(),
             nib::ErrorCode::kUnknownMethod, "unknown method id " + std::to_string(m));
  return all[static_cast<std::size_t>(m)];
}

const nib::Sample& SampleAt(const nib_dataset* d, std::size_t index) {
  nib::Check(index < d->samples.size(), nib::ErrorCode::kInvalidArgument,
             "sample index " + std::to_string(index) + " out of range");
  return d->samples[index];
}

}  // namespace

extern "C" {

void nib_attribute_options_init(nib_attribute_options* options) {
  if (!options) return;
  const nib::M2ibConfig m2ib;
  options->method = NIB_METHOD_NIB;
  options->modality = NIB_MODALITY_IMAGE;
  options->layer = 0;
  options->num_steps = 10;
  options->beta = m2ib.beta;
  options->m2ib_iters = static_cast<uint32_t>(m2ib.iters);
  options->noise_samples = static_cast<uint32_t>(m2ib.noise_samples);
  options->seed = 0;
}

const char* nib_status_name(nib_status status) {
  if (status == NIB_OK) return "ok";
  if (status == NIB_ERR_INTERNAL) return "internal";
  return nib::ErrorCodeName(static_cast<nib::ErrorCode>(status));
}

const char* nib_last_error(void) { return last_error.c_str(); }

nib_status nib_method_from_name(const char* name, nib_method* out) {
  return Guard([&] {
    Require(name, "name");
    Require(out, "out");
    const nib::MethodId id = nib::ParseMethod(name);
    const auto all = nib::AllMethods();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i] == id) *out = static_cast<nib_method>(i);
    }
  });
}

const char* nib_method_name(nib_method method) {
  try {
    return nib::MethodName(ToMethod(method));
  } catch (...) {
    return "unknown";
  }
}

nib_status nib_modality_from_name(const char* name, nib_modality* out) {
  return Guard([&] {
    Require(name, "name");
    Require(out, "out");
    *out = nib::ParseModality(name) == nib::Modality::kImage ? NIB_MODALITY_IMAGE
                                                             : NIB_MODALITY_TEXT;
  });
}

nib_status nib_init_toy(uint64_t seed, const char* out_dir) {
  return Guard([&] {
    Require(out_dir, "out_dir");
    nib::WriteToyArtifacts(seed, out_dir);
  });
}

nib_status nib_model_load(const char* manifest_path, nib_model** out) {
  return Guard([&] {
    Require(manifest_path, "manifest_path");
    Require(out, "out");
    *out = new nib_model{nib::LoadModel(manifest_path)};
  });
}

nib_status nib_model_init_toy(uint64_t seed, nib_model** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new nib_model{nib::InitToy(seed, nib::ModelConfig{})};
  });
}

void nib_model_free(nib_model* model) { delete model; }

uint32_t nib_model_layers(const nib_model* model) {
  return model ? static_cast<uint32_t>(model->model.config.layers) : 0;
}

uint32_t nib_model_bottleneck_layer(const nib_model* model) {
  return model ? static_cast<uint32_t>(model->model.config.bottleneck_layer) : 0;
}

uint32_t nib_model_image_size(const nib_model* model) {
  return model ? static_cast<uint32_t>(model->model.config.image_size) : 0;
}

nib_status nib_dataset_load(const char* manifest_path, const nib_model* model,
                            nib_dataset** out) {
  return Guard([&] {
    Require(manifest_path, "manifest_path");
    Require(model, "model");
    Require(out, "out");
    *out = new nib_dataset{nib::LoadDataset(manifest_path, model->model.config)};
  });
}

void nib_dataset_free(nib_dataset* dataset) { delete dataset; }

size_t nib_dataset_size(const nib_dataset* dataset) {
  return dataset ? dataset->samples.size() : 0;
}

const char* nib_dataset_sample_id(const nib_dataset* dataset, size_t index) {
  if (!dataset || index >= dataset->samples.size()) return nullptr;
  return dataset->samples[index].id.c_str();
}

nib_status nib_similarity(const nib_model* model, const nib_dataset* dataset, size_t index,
                          double* out) {
  return Guard([&] {
    Require(model, "model");
    Require(dataset, "dataset");
    Require(out, "out");
    const nib::Sample& s = SampleAt(dataset, index);
    *out = nib::Similarity(model->model, s.image, s.tokens);
  });
}

nib_status nib_attribute(const nib_model* model, const nib_dataset* dataset, size_t index,
                         const nib_attribute_options* options, nib_map** out,
                         nib_pass_counts* counts) {
  return Guard([&] {
    Require(model, "model");
    Require(dataset, "dataset");
    Require(options, "options");
    Require(out, "out");
    const nib::Sample& s = SampleAt(dataset, index);
    nib::Check(options->modality == NIB_MODALITY_IMAGE || options->modality == NIB_MODALITY_TEXT,
               nib::ErrorCode::kInvalidArgument, "unknown modality");
    const nib::Modality modality = options->modality == NIB_MODALITY_IMAGE
                                       ? nib::Modality::kImage
                                       : nib::Modality::kText;
    nib::PassCounter counter;
    auto map = nib::Attribute(model->model, s.image, s.tokens, modality, ToMethod(options->method),
                              ToOptions(*options, model->model.config), &counter);
    if (counts) {
      counts->forward = counter.forward;
      counts->backward = counter.backward;
      counts->input_independent = counter.input_independent;
    }
    *out = new nib_map{std::move(map)};
  });
}

void nib_map_free(nib_map* map) { delete map; }

size_t nib_map_score_count(const nib_map* map) { return map ? map->map.scores.size() : 0; }

nib_status nib_map_scores(const nib_map* map, double* out, size_t capacity) {
  return Guard([&] {
    Require(map, "map");
    Require(out, "out");
    const std::size_t n = std::min(capacity, map->map.scores.size());
    for (std::size_t i = 0; i < n; ++i) out[i] = map->map.scores[i];
  });
}

void nib_map_grid(const nib_map* map, size_t* rows, size_t* cols) {
  if (rows) *rows = map ? map->map.grid_rows : 0;
  if (cols) *cols = map ? map->map.grid_cols : 0;
}

double nib_map_completeness_gap(const nib_map* map) {
  return map ? map->map.completeness_gap : 0.0;
}

nib_status nib_map_write_heatmap(const nib_map* map, const nib_model* model, const char* dir,
                                 const char* stem) {
  return Guard([&] {
    Require(map, "map");
    Require(model, "model");
    Require(dir, "dir");
    Require(stem, "stem");
    nib::WriteHeatmap(dir, stem, map->map, model->model.config);
  });
}

nib_status nib_evaluate(const nib_model* model, const nib_dataset* dataset,
                        const nib_method* methods, size_t method_count,
                        const nib_attribute_options* options, int measure_fps,
                        const char* out_json_path) {
  return Guard([&] {
    Require(model, "model");
    Require(dataset, "dataset");
    Require(methods, "methods");
    Require(options, "options");
    Require(out_json_path, "out_json_path");
    nib::Check(method_count > 0, nib::ErrorCode::kEmptyInput, "no methods to evaluate");
    nib::EvaluateOptions eval;
    eval.attribution = ToOptions(*options, model->model.config);
    eval.measure_fps = measure_fps != 0;
    std::vector<nib::MetricReport> reports;
    for (std::size_t i = 0; i < method_count; ++i) {
      reports.push_back(
          nib::EvaluateMethod(model->model, dataset->samples, ToMethod(methods[i]), eval));
    }
    nib::WriteTextFile(out_json_path, nib::MetricReportsToJson(reports, false));
  });
}

nib_status nib_sweep_beta(const nib_model* model, const nib_dataset* dataset,
                          const double* betas, size_t beta_count,
                          const nib_attribute_options* options, int measure_fps,
                          const char* out_json_path, double* relative_spread) {
  return Guard([&] {
    Require(model, "model");
    Require(dataset, "dataset");
    Require(options, "options");
    Require(out_json_path, "out_json_path");
    nib::Check(betas != nullptr || beta_count == 0, nib::ErrorCode::kInvalidArgument,
               "betas is NULL");
    nib::EvaluateOptions eval;
    eval.attribution = ToOptions(*options, model->model.config);
    eval.measure_fps = measure_fps != 0;
    const auto result = nib::BetaSweep(model->model, dataset->samples,
                                       std::span<const double>(betas, beta_count), eval);
    nib::WriteTextFile(out_json_path, nib::MetricReportsToJson(result.rows, true));
    if (relative_spread) *relative_spread = result.drop_relative_spread;
  });
}

nib_status nib_verify(uint64_t seed, nib_line_callback callback, void* user) {
  return Guard([&] {
    nib::VerifyOptions o;
    o.seed = seed;
    const bool ok = nib::RunVerification(o, [&](const std::string& line) {
      if (callback) callback(line.c_str(), user);
    });
    nib::Check(ok, nib::ErrorCode::kVerificationFailed, "property suite reported failures");
  });
}

}  // extern "C"
