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

#ifndef NIB_SRC_EVAL_HARNESS_HPP_
#define NIB_SRC_EVAL_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "dual_encoder.hpp"
#include "nib_core.hpp"

namespace nib {

struct Sample {
  std::string id;
  Tensor image;  // [C, H, W]
  std::vector<std::size_t> tokens;
};

// Original scores at or below this are excluded from Confidence Drop.
inline constexpr double kMinOriginalScore = 1e-6;

// x * M, M the normalized saliency broadcast over channels.
Tensor ApplyImageMask(const Tensor& image, const SaliencyImage& saliency);

// Token embeddings scaled by the normalized content-token saliency; special
// tokens keep weight 1. Throws kEmptyInput when there is no content token.
Tensor ApplyTextMask(const DualEncoderModel& model, std::span<const std::size_t> tokens,
                     const AttributionMap& map);

// Score of the sample after masking its `map.modality` input with `map`.
double MaskedScore(const DualEncoderModel& model, const Sample& sample,
                   const AttributionMap& map);

struct ConfidenceResult {
  double drop = 0.0;      // mean of max(0, Y - O) / Y * 100 over scored samples
  double increase = 0.0;  // 100 * fraction of scored samples with O > Y
  std::size_t scored = 0;
  std::size_t excluded = 0;
};

ConfidenceResult EvaluateConfidence(const DualEncoderModel& model,
                                    std::span<const Sample> dataset, MethodId method,
                                    Modality modality, const AttributionOptions& options);
double ConfidenceDrop(const DualEncoderModel& model, std::span<const Sample> dataset,
                      MethodId method, Modality modality, const AttributionOptions& options);
double ConfidenceIncrease(const DualEncoderModel& model, std::span<const Sample> dataset,
                          MethodId method, Modality modality, const AttributionOptions& options);

struct MetricReport {
  std::string method;
  double img_conf_drop = 0.0;
  double img_conf_incr = 0.0;
  double text_conf_drop = 0.0;
  double text_conf_incr = 0.0;
  double fps = 0.0;
  std::size_t samples = 0;
  std::size_t excluded = 0;
  double beta = 0.0;  // only meaningful in a beta sweep
};

struct EvaluateOptions {
  AttributionOptions attribution;
  bool measure_fps = true;
};

MetricReport EvaluateMethod(const DualEncoderModel& model, std::span<const Sample> dataset,
                            MethodId method, const EvaluateOptions& options);

struct BetaSweepResult {
  std::vector<MetricReport> rows;
  // (max - min) / max of the image Confidence Drop column.
  double drop_relative_spread = 0.0;
};

BetaSweepResult BetaSweep(const DualEncoderModel& model, std::span<const Sample> dataset,
                          std::span<const double> betas, const EvaluateOptions& options);

// (max - min) / max(|max|, |min|); 0 for an all-zero column.
double RelativeSpread(std::span<const double> values);

struct SeedVarianceSummary {
  double max_std = 0.0;
  double mean_std = 0.0;
};

// Elementwise population stddev of the maps produced with each seed, pooled
// over every sample and token.
SeedVarianceSummary SeedVariance(const DualEncoderModel& model, std::span<const Sample> dataset,
                                 MethodId method, Modality modality,
                                 std::span<const std::uint64_t> seeds,
                                 const AttributionOptions& options);

// Single-threaded attributions per second over the dataset (image modality);
// the first attribution is a warmup and is not timed.
double Throughput(const DualEncoderModel& model, std::span<const Sample> dataset,
                  MethodId method, const AttributionOptions& options);

std::string MetricReportsToJson(std::span<const MetricReport> reports, bool include_beta);

}  // namespace nib

#endif  // NIB_SRC_EVAL_HARNESS_HPP_
