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

#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "autodiff.hpp"
#include "error.hpp"
#include "info_theory.hpp"

namespace nib {

const char* MethodName(MethodId method) {
  switch (method) {
    case MethodId::kNib: return "nib";
    case MethodId::kM2ib: return "m2ib";
    case MethodId::kSaliency: return "sm";
    case MethodId::kFastIg: return "fastig";
    case MethodId::kIntegratedGradients: return "ig";
    case MethodId::kGradCam: return "gradcam";
    case MethodId::kRandom: return "random";
  }
  return "unknown";
}

MethodId ParseMethod(const std::string& name) {
  for (MethodId m : AllMethods()) {
    if (name == MethodName(m)) return m;
  }
  Fail(ErrorCode::kUnknownMethod,
       "unknown method '" + name + "' (expected nib|m2ib|sm|fastig|ig|gradcam|random)");
}

std::vector<MethodId> AllMethods() {
  return {MethodId::kNib,     MethodId::kM2ib,   MethodId::kSaliency, MethodId::kFastIg,
          MethodId::kIntegratedGradients, MethodId::kGradCam, MethodId::kRandom};
}

bool IsStochastic(MethodId method) {
  return method == MethodId::kM2ib || method == MethodId::kRandom;
}

void M2ibConfig::Validate() const {
  Check(beta > 0.0 && std::isfinite(beta), ErrorCode::kInvalidArgument, "m2ib: beta must be > 0");
  Check(lr > 0.0 && std::isfinite(lr), ErrorCode::kInvalidArgument, "m2ib: lr must be > 0");
  Check(iters >= 1, ErrorCode::kInvalidArgument, "m2ib: iters must be >= 1");
  Check(noise_samples >= 1, ErrorCode::kInvalidArgument, "m2ib: noise_samples must be >= 1");
  Check(noise_batch >= 1, ErrorCode::kInvalidArgument, "m2ib: noise_batch must be >= 1");
  Check(sigma2 > 0.0 && std::isfinite(sigma2), ErrorCode::kInvalidArgument,
        "m2ib: sigma2 must be > 0");
  Check(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
        ErrorCode::kInvalidArgument, "m2ib: Adam decay rates must lie in [0, 1)");
  Check(adam_eps > 0.0, ErrorCode::kInvalidArgument, "m2ib: adam_eps must be > 0");
}

namespace {

// The differentiable input of a modality: patch rows for images, token
// embeddings (before positions) for text.
struct InputSpace {
  Tensor x;
  std::vector<TokenRole> roles;
  std::size_t pool_row = 0;
  Tensor other;
};

InputSpace PrepareInput(const DualEncoderModel& model, const Tensor& image,
                        std::span<const std::size_t> ids, Modality modality,
                        PassCounter* counter) {
  InputSpace in;
  if (modality == Modality::kImage) {
    in.x = Patchify(model.config, image);
    in.roles.assign(model.config.num_patches(), TokenRole::kPatch);
    in.other = EncodeText(model, ids);
  } else {
    in.x = LookupTokens(model, ids);
    in.roles = TextRoles(model.config, ids);
    in.pool_row = ids.size() - 1;
    in.other = EncodeImage(model, image);
  }
  if (counter) ++counter->forward;
  return in;
}

// Full-depth score at input `x`; fills `grad` when non-null.
double InputScore(const DualEncoderModel& model, Modality modality, const InputSpace& in,
                  const Tensor& x, Tensor* grad, PassCounter* counter) {
  Graph g;
  Var leaf = grad ? g.Input(x) : g.Constant(x);
  const std::size_t depth = model.config.layers;
  Var hidden = modality == Modality::kImage ? ImagePrefix(model, leaf, depth)
                                            : TextPrefix(model, leaf, depth);
  Var score = CosineSimilarity(Suffix(model, modality, hidden, depth, in.pool_row),
                               g.Constant(in.other));
  if (counter) ++counter->forward;
  if (grad) {
    g.Backward(score);
    if (counter) ++counter->backward;
    *grad = g.Grad(leaf);
  }
  return score.value().item();
}

AttributionMap MapShell(const DualEncoderModel& model, const char* method, Modality modality,
                        std::span<const TokenRole> roles, std::vector<double> per_token) {
  AttributionMap map;
  map.method = method;
  map.modality = modality;
  map.token_contributions = std::move(per_token);
  map.reported_positions = ReportedPositions(roles);
  for (std::size_t pos : map.reported_positions) map.scores.push_back(map.token_contributions[pos]);
  if (modality == Modality::kImage) {
    map.grid_rows = model.config.grid();
    map.grid_cols = model.config.grid();
  } else {
    map.grid_rows = 1;
    map.grid_cols = map.scores.size();
  }
  return map;
}

template <typename Fn>
std::vector<double> RowReduce(const Tensor& t, Fn fn) {
  const std::size_t rows = t.rows(), cols = t.cols();
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) out[i] += fn(i * cols + c);
  return out;
}

}  // namespace

AttributionMap SaliencyMap(const DualEncoderModel& model, const Tensor& image,
                           std::span<const std::size_t> ids, Modality modality,
                           PassCounter* counter) {
  const InputSpace in = PrepareInput(model, image, ids, modality, counter);
  Tensor grad;
  const double score = InputScore(model, modality, in, in.x, &grad, counter);
  auto map = MapShell(model, "sm", modality, in.roles,
                      RowReduce(grad, [&](std::size_t i) { return std::abs(grad[i]); }));
  map.score_open = score;
  map.layer = 0;
  return map;
}

AttributionMap FastIg(const DualEncoderModel& model, const Tensor& image,
                      std::span<const std::size_t> ids, Modality modality,
                      PassCounter* counter) {
  const InputSpace in = PrepareInput(model, image, ids, modality, counter);
  Tensor grad;
  const double score = InputScore(model, modality, in, in.x, &grad, counter);
  auto map = MapShell(model, "fastig", modality, in.roles,
                      RowReduce(grad, [&](std::size_t i) { return in.x[i] * grad[i]; }));
  map.score_open = score;
  map.num_steps = 1;
  return map;
}

AttributionMap IntegratedGradients(const DualEncoderModel& model, const Tensor& image,
                                   std::span<const std::size_t> ids, Modality modality,
                                   std::size_t num_steps, const std::optional<Tensor>& baseline,
                                   PassCounter* counter) {
  Check(num_steps >= 1, ErrorCode::kInvalidArgument, "integrated gradients: num_steps >= 1");
  const InputSpace in = PrepareInput(model, image, ids, modality, counter);
  Tensor origin = Tensor::Zeros(in.x.shape());
  if (baseline) {
    origin = modality == Modality::kImage ? Patchify(model.config, *baseline) : *baseline;
    Check(origin.shape() == in.x.shape(), ErrorCode::kDimension,
          "integrated gradients: baseline shape " + ShapeString(baseline->shape()));
  }
  std::vector<double> delta(in.x.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = in.x[i] - origin[i];

  std::vector<double> grad_sum(in.x.size(), 0.0);
  double score_open = 0.0;
  for (std::size_t k = 1; k <= num_steps; ++k) {
    Tensor point = in.x;
    if (k < num_steps) {
      const double alpha = static_cast<double>(k) / static_cast<double>(num_steps);
      std::vector<double> p(in.x.size());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = origin[i] + alpha * delta[i];
      point = Tensor(in.x.shape(), std::move(p));
    }
    Tensor grad;
    const double s = InputScore(model, modality, in, point, &grad, counter);
    for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += grad[i];
    if (k == num_steps) score_open = s;
  }
  const double inv = 1.0 / static_cast<double>(num_steps);
  auto map = MapShell(model, "ig", modality, in.roles, RowReduce(in.x, [&](std::size_t i) {
                        return delta[i] * (grad_sum[i] * inv);
                      }));
  map.num_steps = num_steps;
  map.score_open = score_open;
  map.score_closed = InputScore(model, modality, in, origin, nullptr, counter);
  double total = 0.0;
  for (double v : map.token_contributions) total += v;
  map.completeness_gap = std::abs(total - (map.score_open - map.score_closed));
  return map;
}

AttributionMap GradCamLayer(const DualEncoderModel& model, const Tensor& image,
                            std::span<const std::size_t> ids, Modality modality,
                            std::size_t layer, PassCounter* counter) {
  const Bottleneck b = PrepareBottleneck(model, image, ids, modality, layer, counter);
  Graph g;
  Var z = g.Input(b.z.tokens);
  Var score = CosineSimilarity(Suffix(model, modality, z, layer, b.z.pool_row),
                               g.Constant(b.other));
  if (counter) ++counter->forward;
  g.Backward(score);
  if (counter) ++counter->backward;
  const Tensor grad = g.Grad(z);

  const std::size_t width = b.z.tokens.cols();
  const std::vector<std::size_t> reported = ReportedPositions(b.z.roles);
  std::vector<double> channel_weight(width, 0.0);
  for (std::size_t pos : reported)
    for (std::size_t c = 0; c < width; ++c) channel_weight[c] += grad[pos * width + c];
  for (double& w : channel_weight) w /= static_cast<double>(reported.size());

  std::vector<double> per_token = RowReduce(b.z.tokens, [&](std::size_t i) {
    return channel_weight[i % width] * b.z.tokens[i];
  });
  for (double& v : per_token) v = std::max(0.0, v);
  auto map = MapShell(model, "gradcam", modality, b.z.roles, std::move(per_token));
  map.layer = layer;
  map.score_open = score.value().item();
  return map;
}

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double CapacityOfDim(double lambda, double z, double sigma2) {
  const double keep_noise = 1.0 - lambda;
  return info::KlNormal(lambda * z, keep_noise * keep_noise * sigma2, 0.0, sigma2);
}

}  // namespace

double M2ibCapacityGradient(double logit, double z, double sigma2, std::size_t elements) {
  const double lambda = Sigmoid(logit);
  const double open = 1.0 - lambda;
  // d KL / d lambda = lambda z^2 / s2 - (1 - lambda) + 1 / (1 - lambda), chained
  // with d lambda / d logit = lambda (1 - lambda).
  const double d_logit = lambda * open * (lambda * z * z / sigma2 - open) + lambda;
  return d_logit / static_cast<double>(elements);
}

double M2ibCapacity(std::span<const double> logits, const Tensor& z, double sigma2) {
  Check(logits.size() == z.size(), ErrorCode::kDimension, "m2ib: logits/hidden size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    total += CapacityOfDim(Sigmoid(logits[i]), z[i], sigma2);
  }
  return total / static_cast<double>(z.size());
}

AttributionMap M2ibAttribute(const DualEncoderModel& model, const Tensor& image,
                             std::span<const std::size_t> ids, Modality modality,
                             std::size_t layer, const M2ibConfig& config,
                             PassCounter* counter, std::vector<double>* lambdas) {
  config.Validate();
  const Bottleneck b = PrepareBottleneck(model, image, ids, modality, layer, counter);
  const Tensor& z = b.z.tokens;
  const std::size_t n = z.size();
  const std::size_t tokens = z.rows();
  const std::size_t width = z.cols();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(config.sigma2));
  std::vector<double> logits(n, config.logit_init);
  std::vector<double> lambda(n);
  std::vector<double> moment1(n, 0.0), moment2(n, 0.0);
  double decay1 = 1.0, decay2 = 1.0;

  for (std::size_t iter = 0; iter < config.iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) lambda[i] = Sigmoid(logits[i]);
    std::vector<double> d_score_d_lambda(n, 0.0);
    const double inv_k = 1.0 / static_cast<double>(config.noise_samples);
    for (std::size_t first = 0; first < config.noise_samples; first += config.noise_batch) {
      const std::size_t last = std::min(config.noise_samples, first + config.noise_batch);
      Graph g;
      Var other = g.Constant(b.other);
      std::vector<Var> leaves;
      std::vector<std::vector<double>> draws;
      Var objective;
      for (std::size_t k = first; k < last; ++k) {
        std::vector<double> eps(n), noisy(n);
        for (std::size_t i = 0; i < n; ++i) {
          eps[i] = noise(rng);
          noisy[i] = lambda[i] * z[i] + (1.0 - lambda[i]) * eps[i];
        }
        Var leaf = g.Input(Tensor(z.shape(), std::move(noisy)));
        Var s = CosineSimilarity(Suffix(model, modality, leaf, layer, b.z.pool_row), other);
        objective = objective.valid() ? Add(objective, s) : s;
        leaves.push_back(leaf);
        draws.push_back(std::move(eps));
      }
      objective = Scale(objective, inv_k);
      if (counter) ++counter->forward;
      g.Backward(objective);
      if (counter) ++counter->backward;
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        const Tensor grad = g.Grad(leaves[k]);
        for (std::size_t i = 0; i < n; ++i) d_score_d_lambda[i] += grad[i] * (z[i] - draws[k][i]);
      }
    }
    decay1 *= config.adam_beta1;
    decay2 *= config.adam_beta2;
    for (std::size_t i = 0; i < n; ++i) {
      const double d_score = d_score_d_lambda[i] * lambda[i] * (1.0 - lambda[i]);
      const double d_capacity = M2ibCapacityGradient(logits[i], z[i], config.sigma2, n);
      const double ascent = d_score - config.beta * d_capacity;
      moment1[i] = config.adam_beta1 * moment1[i] + (1.0 - config.adam_beta1) * ascent;
      moment2[i] = config.adam_beta2 * moment2[i] + (1.0 - config.adam_beta2) * ascent * ascent;
      const double m_hat = moment1[i] / (1.0 - decay1);
      const double v_hat = moment2[i] / (1.0 - decay2);
      logits[i] += config.lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
      if (!std::isfinite(logits[i])) {
        Fail(ErrorCode::kOptimization,
             "m2ib: non-finite bottleneck parameter at iteration " + std::to_string(iter + 1));
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) lambda[i] = Sigmoid(logits[i]);
  std::vector<double> per_token(tokens, 0.0);
  for (std::size_t t = 0; t < tokens; ++t) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t i = t * width + c;
      if (!(lambda[i] < 1.0)) {
        Fail(ErrorCode::kOptimization, "m2ib: bottleneck saturated fully open");
      }
      per_token[t] += CapacityOfDim(lambda[i], z[i], config.sigma2);
    }
  }
  auto map = MapShell(model, "m2ib", modality, b.z.roles, std::move(per_token));
  map.layer = layer;
  map.num_steps = config.iters;
  map.seed = config.seed;
  if (lambdas) *lambdas = std::move(lambda);
  return map;
}

AttributionMap RandomAttribution(std::size_t rows, std::size_t cols, Modality modality,
                                 std::uint64_t seed) {
  Check(rows * cols > 0, ErrorCode::kInvalidArgument, "random attribution of an empty grid");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  AttributionMap map;
  map.method = "random";
  map.modality = modality;
  map.grid_rows = rows;
  map.grid_cols = cols;
  map.seed = seed;
  for (std::size_t i = 0; i < rows * cols; ++i) {
    map.scores.push_back(uniform(rng));
    map.reported_positions.push_back(i);
  }
  map.token_contributions = map.scores;
  return map;
}

AttributionMap Attribute(const DualEncoderModel& model, const Tensor& image,
                         std::span<const std::size_t> ids, Modality modality,
                         MethodId method, const AttributionOptions& options,
                         PassCounter* counter) {
  switch (method) {
    case MethodId::kNib:
      return NibAttribute(model, image, ids, PathSpec{options.num_steps, options.layer, modality},
                          counter);
    case MethodId::kM2ib: {
      M2ibConfig cfg = options.m2ib;
      cfg.seed = options.seed;
      return M2ibAttribute(model, image, ids, modality, options.layer, cfg, counter);
    }
    case MethodId::kSaliency:
      return SaliencyMap(model, image, ids, modality, counter);
    case MethodId::kFastIg:
      return FastIg(model, image, ids, modality, counter);
    case MethodId::kIntegratedGradients:
      return IntegratedGradients(model, image, ids, modality, options.num_steps, std::nullopt,
                                 counter);
    case MethodId::kGradCam:
      return GradCamLayer(model, image, ids, modality, options.layer, counter);
    case MethodId::kRandom: {
      if (modality == Modality::kImage) {
        return RandomAttribution(model.config.grid(), model.config.grid(), modality,
                                 options.seed);
      }
      ValidateTokens(model.config, ids);
      const auto roles = TextRoles(model.config, ids);
      const std::size_t content = ReportedPositions(roles).size();
      return RandomAttribution(1, content, modality, options.seed);
    }
  }
  Fail(ErrorCode::kUnknownMethod, "unhandled method");
}

}  // namespace nib
