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

#ifndef NIB_SRC_BASELINES_HPP_
#define NIB_SRC_BASELINES_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dual_encoder.hpp"
#include "nib_core.hpp"

namespace nib {

enum class MethodId { kNib, kM2ib, kSaliency, kFastIg, kIntegratedGradients, kGradCam, kRandom };

// Stable CLI names: nib|m2ib|sm|fastig|ig|gradcam|random.
const char* MethodName(MethodId method);
// Throws kUnknownMethod.
MethodId ParseMethod(const std::string& name);
std::vector<MethodId> AllMethods();
// Whether repeated runs with different seeds can produce different maps.
bool IsStochastic(MethodId method);

// Per-dimension information bottleneck optimized by gradient ascent on
// E[cos] - beta * capacity, with z~ = lambda * z + (1 - lambda) * eps.
// Steps are Adam-normalized (first/second moment estimates with bias
// correction), the usual optimizer for per-dimension bottlenecks.
struct M2ibConfig {
  double beta = 0.1;
  double lr = 1.0;
  std::size_t iters = 10;
  double sigma2 = 1.0;
  std::size_t noise_samples = 10;
  // Noise draws evaluated per tape; each tape is one forward + one backward.
  std::size_t noise_batch = 5;
  double logit_init = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Input-space gradient magnitude |dS/dx| summed over each token's features.
AttributionMap SaliencyMap(const DualEncoderModel& model, const Tensor& image,
                           std::span<const std::size_t> ids, Modality modality,
                           PassCounter* counter = nullptr);

// x * dS/dx with a zero baseline, one gradient.
AttributionMap FastIg(const DualEncoderModel& model, const Tensor& image,
                      std::span<const std::size_t> ids, Modality modality,
                      PassCounter* counter = nullptr);

// (x - x0) * mean_k dS/dx at x0 + (k/m)(x - x0), k = 1..m. `baseline` is in
// input layout ([C, H, W] image or [T, d] token embeddings); zeros when
// absent.
AttributionMap IntegratedGradients(const DualEncoderModel& model, const Tensor& image,
                                   std::span<const std::size_t> ids, Modality modality,
                                   std::size_t num_steps,
                                   const std::optional<Tensor>& baseline = std::nullopt,
                                   PassCounter* counter = nullptr);

// ReLU(sum_c w_c z_ic), w_c the mean over reported tokens of dS/dz_ic.
AttributionMap GradCamLayer(const DualEncoderModel& model, const Tensor& image,
                            std::span<const std::size_t> ids, Modality modality,
                            std::size_t layer, PassCounter* counter = nullptr);

// Final per-token saliency sum_c KL(N(lambda z, (1-lambda)^2 s2) || N(0, s2)).
// Also returns the optimized keep-rates when `lambdas` is non-null.
AttributionMap M2ibAttribute(const DualEncoderModel& model, const Tensor& image,
                             std::span<const std::size_t> ids, Modality modality,
                             std::size_t layer, const M2ibConfig& config,
                             PassCounter* counter = nullptr,
                             std::vector<double>* lambdas = nullptr);

// Capacity is the mean of KL_ic over all tokens and channels; this is its
// gradient w.r.t. one logit.
double M2ibCapacityGradient(double logit, double z, double sigma2, std::size_t elements);
double M2ibCapacity(std::span<const double> logits, const Tensor& z, double sigma2);

// Uniform [0, 1) scores on a rows x cols grid.
AttributionMap RandomAttribution(std::size_t rows, std::size_t cols, Modality modality,
                                 std::uint64_t seed);

struct AttributionOptions {
  std::size_t layer = 3;
  std::size_t num_steps = 10;
  M2ibConfig m2ib;
  std::uint64_t seed = 0;  // random and m2ib
};

AttributionMap Attribute(const DualEncoderModel& model, const Tensor& image,
                         std::span<const std::size_t> ids, Modality modality,
                         MethodId method, const AttributionOptions& options,
                         PassCounter* counter = nullptr);

}  // namespace nib

#endif  // NIB_SRC_BASELINES_HPP_
