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

#include "nib_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "autodiff.hpp"
#include "error.hpp"

namespace nib {

void PathSpec::Validate(const ModelConfig& config) const {
  Check(num_steps >= 1, ErrorCode::kInvalidArgument, "num_steps must be >= 1");
  Check(layer >= 1 && layer <= config.layers, ErrorCode::kInvalidArgument,
        "bottleneck layer " + std::to_string(layer) + " outside [1, " +
            std::to_string(config.layers) + "]");
}

std::vector<double> MinMaxNormalize(std::span<const double> values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 1.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  }
  return out;
}

std::vector<std::size_t> ReportedPositions(std::span<const TokenRole> roles) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == TokenRole::kPatch || roles[i] == TokenRole::kText) positions.push_back(i);
  }
  return positions;
}

Bottleneck PrepareBottleneck(const DualEncoderModel& model, const Tensor& image,
                             std::span<const std::size_t> ids, Modality modality,
                             std::size_t layer, PassCounter* counter) {
  Bottleneck b;
  if (modality == Modality::kImage) {
    b.z = EncodeImagePrefix(model, image, layer);
    b.other = EncodeText(model, ids);
  } else {
    b.z = EncodeTextPrefix(model, ids, layer);
    b.other = EncodeImage(model, image);
  }
  if (counter) counter->forward += 2;
  return b;
}

namespace {

double Norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return std::sqrt(s);
}

Tensor ScaledTokens(const Tensor& tokens, double lambda) {
  std::vector<double> out(tokens.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda * tokens[i];
  return Tensor(tokens.shape(), std::move(out));
}

}  // namespace

double NarrowedScore(const DualEncoderModel& model, const HiddenState& z, double lambda,
                     const Tensor& other) {
  Check(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kInvalidArgument,
        "lambda must lie in [0, 1]");
  Graph g;
  Var e = Suffix(model, z.modality, g.Constant(ScaledTokens(z.tokens, lambda)), z.layer,
                 z.pool_row);
  Check(Norm(e.value()) >= kDegenerateNorm, ErrorCode::kDegenerateInput,
        "suffix embedding has zero norm at lambda = " + std::to_string(lambda));
  return CosineSimilarity(e, g.Constant(other)).value().item();
}

AttributionMap NibAttribute(const DualEncoderModel& model, const Tensor& image,
                            std::span<const std::size_t> ids, const PathSpec& path,
                            PassCounter* counter) {
  path.Validate(model.config);
  const Bottleneck b =
      PrepareBottleneck(model, image, ids, path.modality, path.layer, counter);
  const HiddenState& z = b.z;
  const std::size_t tokens = z.tokens.rows();
  const std::size_t width = z.tokens.cols();

  std::vector<double> grad_sum(z.tokens.size(), 0.0);
  double score_open = 0.0;
  for (std::size_t k = 1; k <= path.num_steps; ++k) {
    const double lambda = static_cast<double>(k) / static_cast<double>(path.num_steps);
    Graph g;
    Var narrowed = g.Input(ScaledTokens(z.tokens, lambda));
    Var e = Suffix(model, z.modality, narrowed, z.layer, z.pool_row);
    Check(Norm(e.value()) >= kDegenerateNorm, ErrorCode::kDegenerateInput,
          "suffix embedding has zero norm at lambda = " + std::to_string(lambda));
    Var score = CosineSimilarity(e, g.Constant(b.other));
    if (counter) ++counter->forward;
    g.Backward(score);
    if (counter) ++counter->backward;
    const Tensor grad = g.Grad(narrowed);
    for (std::size_t i = 0; i < grad_sum.size(); ++i) grad_sum[i] += grad[i];
    if (k == path.num_steps) score_open = score.value().item();
  }

  AttributionMap map;
  map.method = "nib";
  map.modality = path.modality;
  map.layer = path.layer;
  map.num_steps = path.num_steps;
  map.token_contributions.assign(tokens, 0.0);
  const double inv_steps = 1.0 / static_cast<double>(path.num_steps);
  double total = 0.0;
  for (std::size_t i = 0; i < tokens; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t idx = i * width + c;
      const double contribution = z.tokens[idx] * grad_sum[idx] * inv_steps;
      acc += contribution;
      total += contribution;
    }
    map.token_contributions[i] = acc;
  }

  // The closed bottleneck feeds zeros to the suffix regardless of the sample.
  {
    Graph g;
    Var e = Suffix(model, z.modality, g.Constant(Tensor::Zeros(z.tokens.shape())), z.layer,
                   z.pool_row);
    if (counter) ++counter->input_independent;
    if (Norm(e.value()) < kDegenerateNorm) {
      map.score_closed = 0.0;
      map.degenerate_closed = true;
    } else {
      map.score_closed = CosineSimilarity(e, g.Constant(b.other)).value().item();
    }
  }
  map.score_open = score_open;
  map.completeness_gap = std::abs(total - (map.score_open - map.score_closed));

  map.reported_positions = ReportedPositions(z.roles);
  for (std::size_t pos : map.reported_positions) {
    map.scores.push_back(map.token_contributions[pos]);
  }
  if (path.modality == Modality::kImage) {
    map.grid_rows = model.config.grid();
    map.grid_cols = model.config.grid();
  } else {
    map.grid_rows = 1;
    map.grid_cols = map.scores.size();
  }
  return map;
}

SaliencyImage UpsampleBilinear(const AttributionMap& map, std::size_t height,
                               std::size_t width) {
  Check(map.modality == Modality::kImage, ErrorCode::kInvalidArgument,
        "spatial upsampling needs an image attribution map");
  Check(height > 0 && width > 0, ErrorCode::kInvalidArgument, "empty output size");
  const std::size_t gh = map.grid_rows, gw = map.grid_cols;
  Check(gh * gw == map.scores.size() && gh > 0, ErrorCode::kDimension,
        "map grid does not match its score count");

  auto source = [](std::size_t dst, std::size_t in, std::size_t out, std::size_t& lo,
                   std::size_t& hi, double& frac) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) /
                   static_cast<double>(out) - 0.5;
    if (s < 0.0) s = 0.0;
    lo = std::min(static_cast<std::size_t>(s), in - 1);
    hi = std::min(lo + 1, in - 1);
    frac = s - static_cast<double>(lo);
  };

  SaliencyImage out;
  out.height = height;
  out.width = width;
  out.raw.resize(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    double fy;
    source(y, gh, height, y0, y1, fy);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      double fx;
      source(x, gw, width, x0, x1, fx);
      const auto at = [&](std::size_t r, std::size_t c) { return map.scores[r * gw + c]; };
      const double top = (1.0 - fx) * at(y0, x0) + fx * at(y0, x1);
      const double bottom = (1.0 - fx) * at(y1, x0) + fx * at(y1, x1);
      out.raw[y * width + x] = (1.0 - fy) * top + fy * bottom;
    }
  }
  out.normalized = MinMaxNormalize(out.raw);
  return out;
}

DualEncoderModel WithIdentityBlock(const DualEncoderModel& model, std::size_t after_layer) {
  const ModelConfig& c = model.config;
  Check(after_layer >= 1 && after_layer <= c.layers, ErrorCode::kInvalidArgument,
        "identity block position outside [1, layers]");
  DualEncoderModel out = model;
  out.config.layers = c.layers + 1;
  for (TowerWeights* tower : {&out.image, &out.text}) {
    // Reuse an existing block's shapes; zero the two residual branches.
    BlockWeights identity = tower->blocks[after_layer - 1];
    identity.wo = Tensor::Zeros(identity.wo.shape());
    identity.bo = Tensor::Zeros(identity.bo.shape());
    identity.w2 = Tensor::Zeros(identity.w2.shape());
    identity.b2 = Tensor::Zeros(identity.b2.shape());
    tower->blocks.insert(tower->blocks.begin() + static_cast<std::ptrdiff_t>(after_layer),
                         std::move(identity));
  }
  return out;
}

DualEncoderModel WithRescaledValues(const DualEncoderModel& model, Modality modality,
                                    std::size_t block, double factor) {
  Check(factor != 0.0 && std::isfinite(factor), ErrorCode::kInvalidArgument,
        "rescale factor must be finite and nonzero");
  DualEncoderModel out = model;
  TowerWeights& tower = out.tower(modality);
  Check(block < tower.blocks.size(), ErrorCode::kInvalidArgument, "block index out of range");
  BlockWeights& w = tower.blocks[block];
  auto scaled = [](const Tensor& t, double s) {
    std::vector<double> v(t.values().begin(), t.values().end());
    for (double& x : v) x *= s;
    return Tensor(t.shape(), std::move(v));
  };
  w.wv = scaled(w.wv, factor);
  w.bv = scaled(w.bv, factor);
  w.wo = scaled(w.wo, 1.0 / factor);
  return out;
}

double MaxScoreDiff(const AttributionMap& a, const AttributionMap& b) {
  if (a.scores.size() != b.scores.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    worst = std::max(worst, std::abs(a.scores[i] - b.scores[i]));
  }
  return worst;
}

bool ImplementationInvarianceProbe(const DualEncoderModel& model, const Tensor& image,
                                   std::span<const std::size_t> ids, const PathSpec& path,
                                   double tolerance) {
  const AttributionMap reference = NibAttribute(model, image, ids, path);
  const DualEncoderModel augmented = WithIdentityBlock(model, path.layer);
  const AttributionMap probe = NibAttribute(augmented, image, ids, path);
  return MaxScoreDiff(reference, probe) <= tolerance;
}

}  // namespace nib
