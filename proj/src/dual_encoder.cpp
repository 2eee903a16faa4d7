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

#include "dual_encoder.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "error.hpp"

namespace nib {

const char* ModalityName(Modality modality) {
  return modality == Modality::kImage ? "image" : "text";
}

Modality ParseModality(const std::string& name) {
  if (name == "image") return Modality::kImage;
  if (name == "text") return Modality::kText;
  Fail(ErrorCode::kInvalidArgument, "unknown modality '" + name + "'");
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    Check(ok, ErrorCode::kConfig, "invalid model config: " + what);
  };
  require(image_size > 0 && channels > 0 && patch > 0, "image_size, channels, patch > 0");
  require(image_size % patch == 0, "image_size divisible by patch");
  require(d_model > 0 && heads > 0, "d_model, heads > 0");
  require(d_model % heads == 0, "d_model divisible by heads");
  require(layers >= 2, "layers >= 2");
  require(proj_dim > 0, "proj_dim > 0");
  require(vocab >= 3, "vocab >= 3 (two ids are reserved for start/end of text)");
  require(max_len >= 1, "max_len >= 1");
  require(ln_eps > 0.0 && std::isfinite(ln_eps), "ln_eps > 0");
  require(bottleneck_layer >= 1 && bottleneck_layer <= layers, "1 <= bottleneck_layer <= layers");
}

std::vector<WeightSpec> WeightSchema(const ModelConfig& c) {
  std::vector<WeightSpec> schema;
  const std::size_t d = c.d_model;
  auto tower = [&](const std::string& prefix) {
    for (std::size_t b = 0; b < c.layers; ++b) {
      const std::string p = prefix + ".blocks." + std::to_string(b) + ".";
      schema.push_back({p + "ln1.gain", {d}});
      schema.push_back({p + "ln1.bias", {d}});
      schema.push_back({p + "attn.wq", {d, d}});
      schema.push_back({p + "attn.bq", {d}});
      schema.push_back({p + "attn.wk", {d, d}});
      schema.push_back({p + "attn.bk", {d}});
      schema.push_back({p + "attn.wv", {d, d}});
      schema.push_back({p + "attn.bv", {d}});
      schema.push_back({p + "attn.wo", {d, d}});
      schema.push_back({p + "attn.bo", {d}});
      schema.push_back({p + "ln2.gain", {d}});
      schema.push_back({p + "ln2.bias", {d}});
      schema.push_back({p + "mlp.w1", {d, c.mlp_dim()}});
      schema.push_back({p + "mlp.b1", {c.mlp_dim()}});
      schema.push_back({p + "mlp.w2", {c.mlp_dim(), d}});
      schema.push_back({p + "mlp.b2", {d}});
    }
    schema.push_back({prefix + ".ln_final.gain", {d}});
    schema.push_back({prefix + ".ln_final.bias", {d}});
    schema.push_back({prefix + ".proj", {d, c.proj_dim}});
  };
  schema.push_back({"image.patch_embed.weight", {c.patch_dim(), d}});
  schema.push_back({"image.patch_embed.bias", {d}});
  schema.push_back({"image.cls", {d}});
  schema.push_back({"image.pos", {c.image_tokens(), d}});
  tower("image");
  schema.push_back({"text.token_embed", {c.vocab, d}});
  schema.push_back({"text.pos", {c.max_len, d}});
  tower("text");
  return schema;
}

namespace {

template <typename Model, typename Visit>
void VisitWeights(Model& m, const Visit& visit) {
  auto tower = [&](const std::string& prefix, auto& t) {
    for (std::size_t b = 0; b < t.blocks.size(); ++b) {
      auto& w = t.blocks[b];
      const std::string p = prefix + ".blocks." + std::to_string(b) + ".";
      visit(p + "ln1.gain", w.ln1_gain);
      visit(p + "ln1.bias", w.ln1_bias);
      visit(p + "attn.wq", w.wq);
      visit(p + "attn.bq", w.bq);
      visit(p + "attn.wk", w.wk);
      visit(p + "attn.bk", w.bk);
      visit(p + "attn.wv", w.wv);
      visit(p + "attn.bv", w.bv);
      visit(p + "attn.wo", w.wo);
      visit(p + "attn.bo", w.bo);
      visit(p + "ln2.gain", w.ln2_gain);
      visit(p + "ln2.bias", w.ln2_bias);
      visit(p + "mlp.w1", w.w1);
      visit(p + "mlp.b1", w.b1);
      visit(p + "mlp.w2", w.w2);
      visit(p + "mlp.b2", w.b2);
    }
    visit(prefix + ".ln_final.gain", t.final_gain);
    visit(prefix + ".ln_final.bias", t.final_bias);
    visit(prefix + ".proj", t.projection);
  };
  visit("image.patch_embed.weight", m.patch_weight);
  visit("image.patch_embed.bias", m.patch_bias);
  visit("image.cls", m.cls);
  visit("image.pos", m.image_pos);
  tower("image", m.image);
  visit("text.token_embed", m.token_embedding);
  visit("text.pos", m.text_pos);
  tower("text", m.text);
}

}  // namespace

void ForEachWeight(const DualEncoderModel& model,
                   const std::function<void(const std::string&, const Tensor&)>& visit) {
  VisitWeights(model, visit);
}

void ForEachWeight(DualEncoderModel& model,
                   const std::function<void(const std::string&, Tensor&)>& visit) {
  VisitWeights(model, visit);
}

DualEncoderModel InitToy(std::uint64_t seed, const ModelConfig& config) {
  config.Validate();
  DualEncoderModel model;
  model.config = config;
  model.image.blocks.resize(config.layers);
  model.text.blocks.resize(config.layers);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.d_model)));
  const auto schema = WeightSchema(config);
  std::size_t next = 0;
  ForEachWeight(model, [&](const std::string& name, Tensor& slot) {
    const WeightSpec& spec = schema[next++];
    const std::size_t n = NumElements(spec.shape);
    const bool is_gain = name.ends_with(".gain");
    const bool is_ln_bias = name.ends_with("ln1.bias") || name.ends_with("ln2.bias") ||
                            name.ends_with("ln_final.bias");
    std::vector<double> values(n);
    for (double& v : values) {
      if (is_gain) v = 1.0;
      else if (is_ln_bias) v = 0.0;
      else v = static_cast<double>(static_cast<float>(normal(rng)));
    }
    slot = Tensor(spec.shape, std::move(values));
  });
  return model;
}

Tensor Patchify(const ModelConfig& c, const Tensor& image) {
  Check(image.shape() == Shape{c.channels, c.image_size, c.image_size}, ErrorCode::kDimension,
        "image shape " + ShapeString(image.shape()) + " does not match config " +
            ShapeString({c.channels, c.image_size, c.image_size}));
  const std::size_t g = c.grid(), p = c.patch, s = c.image_size;
  std::vector<double> out;
  out.reserve(image.size());
  for (std::size_t gy = 0; gy < g; ++gy)
    for (std::size_t gx = 0; gx < g; ++gx)
      for (std::size_t ch = 0; ch < c.channels; ++ch)
        for (std::size_t y = 0; y < p; ++y)
          for (std::size_t x = 0; x < p; ++x)
            out.push_back(image[(ch * s + gy * p + y) * s + gx * p + x]);
  return Tensor({c.num_patches(), c.patch_dim()}, std::move(out));
}

Tensor Unpatchify(const ModelConfig& c, const Tensor& patches) {
  Check(patches.shape() == Shape{c.num_patches(), c.patch_dim()}, ErrorCode::kDimension,
        "patch matrix shape " + ShapeString(patches.shape()));
  const std::size_t g = c.grid(), p = c.patch, s = c.image_size;
  std::vector<double> out(patches.size());
  std::size_t k = 0;
  for (std::size_t gy = 0; gy < g; ++gy)
    for (std::size_t gx = 0; gx < g; ++gx)
      for (std::size_t ch = 0; ch < c.channels; ++ch)
        for (std::size_t y = 0; y < p; ++y)
          for (std::size_t x = 0; x < p; ++x)
            out[(ch * s + gy * p + y) * s + gx * p + x] = patches[k++];
  return Tensor({c.channels, s, s}, std::move(out));
}

std::vector<TokenRole> ImageRoles(const ModelConfig& c) {
  std::vector<TokenRole> roles(c.image_tokens(), TokenRole::kPatch);
  roles[0] = TokenRole::kCls;
  return roles;
}

std::vector<TokenRole> TextRoles(const ModelConfig& c, std::span<const std::size_t> ids) {
  std::vector<TokenRole> roles;
  roles.reserve(ids.size());
  for (std::size_t id : ids) {
    roles.push_back(id == c.start_token() || id == c.end_token() ? TokenRole::kSpecial
                                                                 : TokenRole::kText);
  }
  return roles;
}

void ValidateTokens(const ModelConfig& c, std::span<const std::size_t> ids) {
  Check(!ids.empty(), ErrorCode::kEmptyInput, "empty token list");
  Check(ids.size() <= c.max_len, ErrorCode::kDimension,
        "token list of length " + std::to_string(ids.size()) + " exceeds max_len " +
            std::to_string(c.max_len));
  for (std::size_t id : ids) {
    Check(id < c.vocab, ErrorCode::kInvalidArgument,
          "token id " + std::to_string(id) + " out of range for vocab " + std::to_string(c.vocab));
  }
}

namespace {

void CheckLayer(const ModelConfig& c, std::size_t layer) {
  Check(layer >= 1 && layer <= c.layers, ErrorCode::kInvalidArgument,
        "layer " + std::to_string(layer) + " outside [1, " + std::to_string(c.layers) + "]");
}

Var Block(const BlockWeights& w, const ModelConfig& c, Var x) {
  Graph& g = x.graph();
  auto k = [&g](const Tensor& t) { return g.Constant(t); };

  Var h = LayerNorm(x, k(w.ln1_gain), k(w.ln1_bias), c.ln_eps);
  Var q = AddRowBroadcast(MatMul(h, k(w.wq)), k(w.bq));
  Var key = AddRowBroadcast(MatMul(h, k(w.wk)), k(w.bk));
  Var v = AddRowBroadcast(MatMul(h, k(w.wv)), k(w.bv));
  const std::size_t dh = c.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(c.heads);
  for (std::size_t head = 0; head < c.heads; ++head) {
    Var qh = SliceCols(q, head * dh, dh);
    Var kh = SliceCols(key, head * dh, dh);
    Var vh = SliceCols(v, head * dh, dh);
    Var weights = Softmax(Scale(MatMul(qh, Transpose(kh)), inv_sqrt_dh), 1);
    heads.push_back(MatMul(weights, vh));
  }
  Var attn = AddRowBroadcast(MatMul(ConcatCols(heads), k(w.wo)), k(w.bo));
  Var x1 = Add(x, attn);

  Var h2 = LayerNorm(x1, k(w.ln2_gain), k(w.ln2_bias), c.ln_eps);
  Var hidden = Gelu(AddRowBroadcast(MatMul(h2, k(w.w1)), k(w.b1)));
  Var mlp = AddRowBroadcast(MatMul(hidden, k(w.w2)), k(w.b2));
  return Add(x1, mlp);
}

Var RunBlocks(const TowerWeights& tower, const ModelConfig& c, Var x, std::size_t from,
              std::size_t to) {
  for (std::size_t b = from; b < to; ++b) x = Block(tower.blocks[b], c, x);
  return x;
}

}  // namespace

Var ImagePrefix(const DualEncoderModel& model, Var patches, std::size_t layer) {
  const ModelConfig& c = model.config;
  CheckLayer(c, layer);
  Check(patches.shape() == Shape{c.num_patches(), c.patch_dim()}, ErrorCode::kDimension,
        "patch matrix shape " + ShapeString(patches.shape()));
  Graph& g = patches.graph();
  Var embedded = AddRowBroadcast(MatMul(patches, g.Constant(model.patch_weight)),
                                 g.Constant(model.patch_bias));
  Var cls = g.Constant(model.cls.Reshaped({1, c.d_model}));
  const Var rows[] = {cls, embedded};
  Var x = Add(ConcatRows(rows), g.Constant(model.image_pos));
  return RunBlocks(model.image, c, x, 0, layer);
}

Var TextPrefix(const DualEncoderModel& model, Var embeddings, std::size_t layer) {
  const ModelConfig& c = model.config;
  CheckLayer(c, layer);
  const Tensor& e = embeddings.value();
  Check(e.rank() == 2 && e.cols() == c.d_model && e.rows() >= 1 && e.rows() <= c.max_len,
        ErrorCode::kDimension, "text embedding shape " + ShapeString(e.shape()));
  Graph& g = embeddings.graph();
  std::vector<double> pos(model.text_pos.values().begin(),
                          model.text_pos.values().begin() + e.size());
  Var x = Add(embeddings, g.Constant(Tensor(e.shape(), std::move(pos))));
  return RunBlocks(model.text, c, x, 0, layer);
}

Var Suffix(const DualEncoderModel& model, Modality modality, Var hidden, std::size_t layer,
           std::size_t pool_row) {
  const ModelConfig& c = model.config;
  CheckLayer(c, layer);
  Check(hidden.value().rank() == 2 && hidden.value().cols() == c.d_model,
        ErrorCode::kDimension, "hidden state shape " + ShapeString(hidden.shape()));
  const TowerWeights& tower = model.tower(modality);
  Graph& g = hidden.graph();
  Var x = RunBlocks(tower, c, hidden, layer, c.layers);
  Var pooled = LayerNorm(SelectRow(x, pool_row), g.Constant(tower.final_gain),
                         g.Constant(tower.final_bias), c.ln_eps);
  return MatMul(pooled, g.Constant(tower.projection));
}

HiddenState EncodeImagePrefix(const DualEncoderModel& model, const Tensor& image,
                              std::size_t layer) {
  Graph g;
  Var z = ImagePrefix(model, g.Constant(Patchify(model.config, image)), layer);
  return HiddenState{z.value(), layer, Modality::kImage, ImageRoles(model.config), 0};
}

Tensor LookupTokens(const DualEncoderModel& model, std::span<const std::size_t> ids) {
  ValidateTokens(model.config, ids);
  Graph g;
  return EmbeddingLookup(g.Constant(model.token_embedding), ids).value();
}

HiddenState EncodeTextPrefix(const DualEncoderModel& model, std::span<const std::size_t> ids,
                             std::size_t layer) {
  Graph g;
  Var z = TextPrefix(model, g.Constant(LookupTokens(model, ids)), layer);
  return HiddenState{z.value(), layer, Modality::kText, TextRoles(model.config, ids),
                     ids.size() - 1};
}

Tensor EncodeSuffix(const DualEncoderModel& model, const HiddenState& z) {
  Check(z.tokens.rank() == 2 && z.pool_row < z.tokens.rows(), ErrorCode::kDimension,
        "hidden state pool row out of range");
  Graph g;
  Var e = Suffix(model, z.modality, g.Constant(z.tokens), z.layer, z.pool_row);
  return e.value().Reshaped({model.config.proj_dim});
}

Tensor EncodeImage(const DualEncoderModel& model, const Tensor& image) {
  return EncodeSuffix(model, EncodeImagePrefix(model, image, model.config.layers));
}

Tensor EncodeText(const DualEncoderModel& model, std::span<const std::size_t> ids) {
  return EncodeSuffix(model, EncodeTextPrefix(model, ids, model.config.layers));
}

Tensor EncodeTextEmbeddings(const DualEncoderModel& model, const Tensor& embeddings) {
  Graph g;
  Var z = TextPrefix(model, g.Constant(embeddings), model.config.layers);
  Var e = Suffix(model, Modality::kText, z, model.config.layers, embeddings.rows() - 1);
  return e.value().Reshaped({model.config.proj_dim});
}

double Cosine(const Tensor& u, const Tensor& v) {
  Graph g;
  return CosineSimilarity(g.Constant(u), g.Constant(v)).value().item();
}

double Similarity(const DualEncoderModel& model, const Tensor& image,
                  std::span<const std::size_t> ids) {
  return Cosine(EncodeImage(model, image), EncodeText(model, ids));
}

}  // namespace nib
