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

#include "eval_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "error.hpp"
#include "json.hpp"

namespace nib {

Tensor ApplyImageMask(const Tensor& image, const SaliencyImage& saliency) {
  Check(image.rank() == 3 && image.dim(1) == saliency.height && image.dim(2) == saliency.width,
        ErrorCode::kDimension,
        "saliency " + std::to_string(saliency.height) + "x" + std::to_string(saliency.width) +
            " does not cover image " + ShapeString(image.shape()));
  const std::size_t plane = saliency.height * saliency.width;
  std::vector<double> out(image.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image[i] * saliency.normalized[i % plane];
  return Tensor(image.shape(), std::move(out));
}

Tensor ApplyTextMask(const DualEncoderModel& model, std::span<const std::size_t> tokens,
                     const AttributionMap& map) {
  const Tensor embeddings = LookupTokens(model, tokens);
  const std::vector<TokenRole> roles = TextRoles(model.config, tokens);
  const std::vector<std::size_t> content = ReportedPositions(roles);
  Check(!content.empty(), ErrorCode::kEmptyInput, "text mask: no content tokens");
  Check(map.scores.size() == content.size(), ErrorCode::kDimension,
        "text mask: map has " + std::to_string(map.scores.size()) + " scores for " +
            std::to_string(content.size()) + " content tokens");
  const std::vector<double> weights = MinMaxNormalize(map.scores);
  std::vector<double> row_weight(tokens.size(), 1.0);
  for (std::size_t k = 0; k < content.size(); ++k) row_weight[content[k]] = weights[k];
  const std::size_t d = embeddings.cols();
  std::vector<double> out(embeddings.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = embeddings[i] * row_weight[i / d];
  return Tensor(embeddings.shape(), std::move(out));
}

double MaskedScore(const DualEncoderModel& model, const Sample& sample,
                   const AttributionMap& map) {
  const ModelConfig& c = model.config;
  if (map.modality == Modality::kImage) {
    const SaliencyImage s = UpsampleBilinear(map, c.image_size, c.image_size);
    return Cosine(EncodeImage(model, ApplyImageMask(sample.image, s)),
                  EncodeText(model, sample.tokens));
  }
  return Cosine(EncodeImage(model, sample.image),
                EncodeTextEmbeddings(model, ApplyTextMask(model, sample.tokens, map)));
}

namespace {

AttributionOptions ForSample(const AttributionOptions& options, std::size_t index) {
  AttributionOptions o = options;
  o.seed = options.seed + index;
  return o;
}

struct ModalityPass {
  ConfidenceResult result;
  double seconds = 0.0;
  std::size_t timed = 0;
};

ModalityPass RunModality(const DualEncoderModel& model, std::span<const Sample> dataset,
                         MethodId method, Modality modality, const AttributionOptions& options,
                         bool skip_first_timing) {
  Check(!dataset.empty(), ErrorCode::kEmptyInput, "empty dataset");
  ModalityPass pass;
  double drop_total = 0.0;
  std::size_t increased = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Sample& sample = dataset[i];
    const double original = Similarity(model, sample.image, sample.tokens);
    if (original <= kMinOriginalScore) {
      ++pass.result.excluded;
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    const AttributionMap map =
        Attribute(model, sample.image, sample.tokens, modality, method, ForSample(options, i));
    const auto stop = std::chrono::steady_clock::now();
    if (!(skip_first_timing && pass.result.scored == 0)) {
      pass.seconds += std::chrono::duration<double>(stop - start).count();
      ++pass.timed;
    }
    const double masked = MaskedScore(model, sample, map);
    drop_total += std::max(0.0, original - masked) / original * 100.0;
    if (masked > original) ++increased;
    ++pass.result.scored;
  }
  Check(pass.result.scored > 0, ErrorCode::kAllExcluded,
        "every sample has an original score <= " + std::to_string(kMinOriginalScore));
  pass.result.drop = drop_total / static_cast<double>(pass.result.scored);
  pass.result.increase =
      100.0 * static_cast<double>(increased) / static_cast<double>(pass.result.scored);
  return pass;
}

}  // namespace

ConfidenceResult EvaluateConfidence(const DualEncoderModel& model,
                                    std::span<const Sample> dataset, MethodId method,
                                    Modality modality, const AttributionOptions& options) {
  return RunModality(model, dataset, method, modality, options, false).result;
}

double ConfidenceDrop(const DualEncoderModel& model, std::span<const Sample> dataset,
                      MethodId method, Modality modality, const AttributionOptions& options) {
  return EvaluateConfidence(model, dataset, method, modality, options).drop;
}

double ConfidenceIncrease(const DualEncoderModel& model, std::span<const Sample> dataset,
                          MethodId method, Modality modality, const AttributionOptions& options) {
  return EvaluateConfidence(model, dataset, method, modality, options).increase;
}

MetricReport EvaluateMethod(const DualEncoderModel& model, std::span<const Sample> dataset,
                            MethodId method, const EvaluateOptions& options) {
  const ModalityPass image =
      RunModality(model, dataset, method, Modality::kImage, options.attribution, true);
  const ModalityPass text =
      RunModality(model, dataset, method, Modality::kText, options.attribution, false);
  MetricReport report;
  report.method = MethodName(method);
  report.img_conf_drop = image.result.drop;
  report.img_conf_incr = image.result.increase;
  report.text_conf_drop = text.result.drop;
  report.text_conf_incr = text.result.increase;
  report.samples = dataset.size();
  report.excluded = image.result.excluded;
  report.beta = options.attribution.m2ib.beta;
  if (options.measure_fps) {
    const double seconds = image.seconds + text.seconds;
    const std::size_t timed = image.timed + text.timed;
    report.fps = seconds > 0.0 ? static_cast<double>(timed) / seconds : 0.0;
  }
  return report;
}

double RelativeSpread(std::span<const double> values) {
  Check(!values.empty(), ErrorCode::kEmptyInput, "relative spread of an empty column");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double scale = std::max(std::abs(*lo), std::abs(*hi));
  if (scale == 0.0) return 0.0;
  return (*hi - *lo) / scale;
}

BetaSweepResult BetaSweep(const DualEncoderModel& model, std::span<const Sample> dataset,
                          std::span<const double> betas, const EvaluateOptions& options) {
  Check(!betas.empty(), ErrorCode::kEmptyInput, "beta sweep needs at least one beta");
  BetaSweepResult result;
  std::vector<double> drops;
  for (double beta : betas) {
    EvaluateOptions o = options;
    o.attribution.m2ib.beta = beta;
    MetricReport row = EvaluateMethod(model, dataset, MethodId::kM2ib, o);
    drops.push_back(row.img_conf_drop);
    result.rows.push_back(std::move(row));
  }
  result.drop_relative_spread = RelativeSpread(drops);
  return result;
}

SeedVarianceSummary SeedVariance(const DualEncoderModel& model, std::span<const Sample> dataset,
                                 MethodId method, Modality modality,
                                 std::span<const std::uint64_t> seeds,
                                 const AttributionOptions& options) {
  Check(!dataset.empty(), ErrorCode::kEmptyInput, "empty dataset");
  Check(seeds.size() >= 2, ErrorCode::kInvalidArgument, "seed variance needs two or more seeds");
  SeedVarianceSummary summary;
  double std_total = 0.0;
  std::size_t count = 0;
  for (const Sample& sample : dataset) {
    std::vector<std::vector<double>> maps;
    for (std::uint64_t seed : seeds) {
      AttributionOptions o = options;
      o.seed = seed;
      maps.push_back(Attribute(model, sample.image, sample.tokens, modality, method, o).scores);
    }
    for (std::size_t t = 0; t < maps.front().size(); ++t) {
      double mean = 0.0;
      for (const auto& m : maps) mean += m[t];
      mean /= static_cast<double>(maps.size());
      double var = 0.0;
      for (const auto& m : maps) var += (m[t] - mean) * (m[t] - mean);
      const double sd = std::sqrt(var / static_cast<double>(maps.size()));
      summary.max_std = std::max(summary.max_std, sd);
      std_total += sd;
      ++count;
    }
  }
  summary.mean_std = std_total / static_cast<double>(count);
  return summary;
}

double Throughput(const DualEncoderModel& model, std::span<const Sample> dataset,
                  MethodId method, const AttributionOptions& options) {
  Check(!dataset.empty(), ErrorCode::kEmptyInput, "empty dataset");
  // Warmup.
  Attribute(model, dataset[0].image, dataset[0].tokens, Modality::kImage, method,
            ForSample(options, 0));
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    Attribute(model, dataset[i].image, dataset[i].tokens, Modality::kImage, method,
              ForSample(options, i));
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return static_cast<double>(dataset.size()) / std::max(seconds, 1e-9);
}

std::string MetricReportsToJson(std::span<const MetricReport> reports, bool include_beta) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const MetricReport& r : reports) {
    nlohmann::ordered_json row;
    row["method"] = r.method;
    if (include_beta) row["beta"] = r.beta;
    row["img_conf_drop"] = r.img_conf_drop;
    row["img_conf_incr"] = r.img_conf_incr;
    row["text_conf_drop"] = r.text_conf_drop;
    row["text_conf_incr"] = r.text_conf_incr;
    row["fps"] = r.fps;
    row["samples"] = r.samples;
    row["excluded"] = r.excluded;
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json doc;
  doc["reports"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace nib
