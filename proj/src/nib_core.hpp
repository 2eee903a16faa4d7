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

#ifndef NIB_SRC_NIB_CORE_HPP_
#define NIB_SRC_NIB_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dual_encoder.hpp"
#include "tensor.hpp"

namespace nib {

// Counts encoder passes spent on one attribution. A forward pass is one tape
// evaluating (part of) an encoder for the current sample, whatever the batch
// size; a backward pass is one reverse sweep over such a tape. Evaluations
// that do not depend on the sample at all (the closed-bottleneck embedding)
// are tallied separately.
struct PassCounter {
  std::size_t forward = 0;
  std::size_t backward = 0;
  std::size_t input_independent = 0;
};

// lambda_k = k / num_steps for k = 1..num_steps (right-endpoint Riemann sum).
struct PathSpec {
  std::size_t num_steps = 10;
  std::size_t layer = 3;
  Modality modality = Modality::kImage;

  void Validate(const ModelConfig& config) const;
};

// Signed per-token scores. `scores` covers the reported tokens (patches or
// content text tokens); `token_contributions` covers every position of the
// attributed sequence, including CLS/special tokens, so completeness can be
// checked on the full sum.
struct AttributionMap {
  std::string method;
  Modality modality = Modality::kImage;
  std::size_t layer = 0;
  std::size_t num_steps = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<double> scores;
  std::vector<std::size_t> reported_positions;
  std::vector<double> token_contributions;
  double score_open = 0.0;
  double score_closed = 0.0;
  double completeness_gap = 0.0;
  // Set when the closed-bottleneck embedding had (near-)zero norm and its
  // score was taken as 0.
  bool degenerate_closed = false;
  std::optional<std::uint64_t> seed;
};

// Signed raw values at input resolution plus a [0, 1] display view.
struct SaliencyImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> raw;
  std::vector<double> normalized;
};

// Min-max rescaling to [0, 1]; a constant input maps to all ones.
std::vector<double> MinMaxNormalize(std::span<const double> values);

// The hidden state to attribute and the fixed embedding of the other modality.
struct Bottleneck {
  HiddenState z;
  Tensor other;
};

Bottleneck PrepareBottleneck(const DualEncoderModel& model, const Tensor& image,
                             std::span<const std::size_t> ids, Modality modality,
                             std::size_t layer, PassCounter* counter = nullptr);

// Positions of `roles` that are reported in a map (patches, content tokens).
std::vector<std::size_t> ReportedPositions(std::span<const TokenRole> roles);

// Norm threshold below which a suffix embedding is treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

// cos(suffix(lambda * z), other). Throws kDegenerateInput when the suffix
// output has norm below kDegenerateNorm.
double NarrowedScore(const DualEncoderModel& model, const HiddenState& z, double lambda,
                     const Tensor& other);

AttributionMap NibAttribute(const DualEncoderModel& model, const Tensor& image,
                            std::span<const std::size_t> ids, const PathSpec& path,
                            PassCounter* counter = nullptr);

// Bilinear resampling of an image map's patch grid to height x width
// (half-pixel centers, edge clamped).
SaliencyImage UpsampleBilinear(const AttributionMap& map, std::size_t height,
                               std::size_t width);

// Copies of `model` that compute the same function with different parameters.
// Identity block: attention output and second MLP layer zeroed, inserted
// after `after_layer` in both towers.
DualEncoderModel WithIdentityBlock(const DualEncoderModel& model, std::size_t after_layer);
// Multiplies the value projection of `block` (0-based) by `factor` and divides
// the attention output projection by it.
DualEncoderModel WithRescaledValues(const DualEncoderModel& model, Modality modality,
                                    std::size_t block, double factor);

// Attributes with `model` and with an identity-augmented copy and reports
// whether the maps agree within `tolerance`.
bool ImplementationInvarianceProbe(const DualEncoderModel& model, const Tensor& image,
                                   std::span<const std::size_t> ids, const PathSpec& path,
                                   double tolerance = 1e-9);

double MaxScoreDiff(const AttributionMap& a, const AttributionMap& b);

}  // namespace nib

#endif  // NIB_SRC_NIB_CORE_HPP_
