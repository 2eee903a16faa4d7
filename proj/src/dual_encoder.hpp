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

#ifndef NIB_SRC_DUAL_ENCODER_HPP_
#define NIB_SRC_DUAL_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "tensor.hpp"

namespace nib {

enum class Modality { kImage, kText };

const char* ModalityName(Modality modality);
Modality ParseModality(const std::string& name);

enum class TokenRole : std::uint8_t { kCls, kPatch, kText, kSpecial };

struct ModelConfig {
  std::size_t image_size = 32;
  std::size_t channels = 3;
  std::size_t patch = 8;
  std::size_t d_model = 32;
  std::size_t heads = 4;
  std::size_t layers = 4;
  std::size_t proj_dim = 16;
  std::size_t vocab = 64;
  std::size_t max_len = 8;
  // Large relative to token variance so suffix(lambda * z) stays smooth as
  // lambda approaches 0, where pre-LN blocks are otherwise scale invariant.
  double ln_eps = 3.0;
  // Default bottleneck insertion point: after block 3 of 4.
  std::size_t bottleneck_layer = 3;

  // Throws kConfig describing the first violated constraint.
  void Validate() const;

  std::size_t grid() const { return image_size / patch; }
  std::size_t num_patches() const { return grid() * grid(); }
  std::size_t image_tokens() const { return 1 + num_patches(); }
  std::size_t patch_dim() const { return channels * patch * patch; }
  std::size_t head_dim() const { return d_model / heads; }
  std::size_t mlp_dim() const { return 4 * d_model; }
  // Start/end-of-text ids occupy the top of the vocabulary.
  std::size_t start_token() const { return vocab - 2; }
  std::size_t end_token() const { return vocab - 1; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Pre-LN transformer block: x + Attn(LN1(x)), then h + MLP(LN2(h)).
struct BlockWeights {
  Tensor ln1_gain, ln1_bias;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gain, ln2_bias;
  Tensor w1, b1, w2, b2;
};

struct TowerWeights {
  std::vector<BlockWeights> blocks;
  Tensor final_gain, final_bias;
  Tensor projection;  // d_model x proj_dim
};

struct DualEncoderModel {
  ModelConfig config;
  // Image tower: patch embedding, CLS token and positions.
  Tensor patch_weight;  // patch_dim x d_model
  Tensor patch_bias;    // d_model
  Tensor cls;           // d_model
  Tensor image_pos;     // image_tokens x d_model
  TowerWeights image;
  // Text tower.
  Tensor token_embedding;  // vocab x d_model
  Tensor text_pos;         // max_len x d_model
  TowerWeights text;

  const TowerWeights& tower(Modality m) const { return m == Modality::kImage ? image : text; }
  TowerWeights& tower(Modality m) { return m == Modality::kImage ? image : text; }
};

// Expected name and shape of every weight, in canonical order.
struct WeightSpec {
  std::string name;
  Shape shape;
};
std::vector<WeightSpec> WeightSchema(const ModelConfig& config);

// Visits every weight tensor in schema order.
void ForEachWeight(const DualEncoderModel& model,
                   const std::function<void(const std::string&, const Tensor&)>& visit);
void ForEachWeight(DualEncoderModel& model,
                   const std::function<void(const std::string&, Tensor&)>& visit);

// Deterministic seeded model. Weights are N(0, 1/d_model) rounded to float32
// so that a bundle roundtrip reproduces them exactly; layer-norm gains start
// at one and their biases at zero.
DualEncoderModel InitToy(std::uint64_t seed, const ModelConfig& config);

struct HiddenState {
  Tensor tokens;  // tokens x d_model
  std::size_t layer = 0;
  Modality modality = Modality::kImage;
  std::vector<TokenRole> roles;
  // Row whose final-LN output is projected (CLS or last text position).
  std::size_t pool_row = 0;
};

// [C, H, W] image -> [patches, C * patch * patch], patches row-major over the
// grid, each row ordered (channel, y, x).
Tensor Patchify(const ModelConfig& config, const Tensor& image);
// Inverse of Patchify.
Tensor Unpatchify(const ModelConfig& config, const Tensor& patches);

std::vector<TokenRole> ImageRoles(const ModelConfig& config);
std::vector<TokenRole> TextRoles(const ModelConfig& config, std::span<const std::size_t> ids);
void ValidateTokens(const ModelConfig& config, std::span<const std::size_t> ids);

// Tape-level building blocks, used wherever gradients are needed.
//
// Image prefix from patch rows: embed, prepend CLS, add positions, then
// blocks 1..layer.
Var ImagePrefix(const DualEncoderModel& model, Var patches, std::size_t layer);
// Text prefix from token embeddings (before positions): add positions, then
// blocks 1..layer.
Var TextPrefix(const DualEncoderModel& model, Var embeddings, std::size_t layer);
// Blocks layer+1..L, final LN on the pooled row, projection. Result is
// [1 x proj_dim].
Var Suffix(const DualEncoderModel& model, Modality modality, Var hidden, std::size_t layer,
           std::size_t pool_row);

// Value-level wrappers.
HiddenState EncodeImagePrefix(const DualEncoderModel& model, const Tensor& image,
                              std::size_t layer);
HiddenState EncodeTextPrefix(const DualEncoderModel& model, std::span<const std::size_t> ids,
                             std::size_t layer);
Tensor EncodeSuffix(const DualEncoderModel& model, const HiddenState& z);
Tensor EncodeImage(const DualEncoderModel& model, const Tensor& image);
Tensor EncodeText(const DualEncoderModel& model, std::span<const std::size_t> ids);
// Text embedding from an explicit (possibly masked) embedding sequence.
Tensor EncodeTextEmbeddings(const DualEncoderModel& model, const Tensor& embeddings);
Tensor LookupTokens(const DualEncoderModel& model, std::span<const std::size_t> ids);

// Cosine of two projected embeddings.
double Cosine(const Tensor& u, const Tensor& v);
double Similarity(const DualEncoderModel& model, const Tensor& image,
                  std::span<const std::size_t> ids);

}  // namespace nib

#endif  // NIB_SRC_DUAL_ENCODER_HPP_
