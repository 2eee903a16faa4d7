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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "nib_core.hpp"
#include "test_util.hpp"

namespace nib {
namespace {

using testing::Code;
using testing::CodeOf;

PathSpec Path(Modality modality, std::size_t steps = 10, std::size_t layer = 3) {
  PathSpec p;
  p.modality = modality;
  p.num_steps = steps;
  p.layer = layer;
  return p;
}

double Sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(PathSpec, RejectsZeroStepsAndBadLayer) {
  const ModelConfig c;
  EXPECT_EQ(CodeOf([&] { Path(Modality::kImage, 0).Validate(c); }),
            Code(ErrorCode::kInvalidArgument));
  EXPECT_EQ(CodeOf([&] { Path(Modality::kImage, 10, 0).Validate(c); }),
            Code(ErrorCode::kInvalidArgument));
  EXPECT_EQ(CodeOf([&] { Path(Modality::kImage, 10, 5).Validate(c); }),
            Code(ErrorCode::kInvalidArgument));
}

TEST(Nib, ImageMapShapeAndReporting) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[0];
  const AttributionMap m = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage));
  EXPECT_EQ(m.method, "nib");
  EXPECT_EQ(m.scores.size(), 16u);
  EXPECT_EQ(m.grid_rows, 4u);
  EXPECT_EQ(m.grid_cols, 4u);
  EXPECT_EQ(m.token_contributions.size(), 17u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(m.reported_positions[i], i + 1);
    EXPECT_EQ(m.scores[i], m.token_contributions[i + 1]);
  }
}

TEST(Nib, TextMapExcludesSpecialTokensButSumsThem) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[0];
  const AttributionMap m = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kText, 50));
  std::size_t content = 0;
  for (std::size_t id : s.tokens) {
    if (id != w.model.config.start_token() && id != w.model.config.end_token()) ++content;
  }
  EXPECT_EQ(m.scores.size(), content);
  EXPECT_EQ(m.token_contributions.size(), s.tokens.size());
  EXPECT_EQ(m.grid_rows, 1u);
  EXPECT_EQ(m.grid_cols, content);
  const double full = Sum(m.token_contributions);
  EXPECT_NEAR(std::abs(full - (m.score_open - m.score_closed)), m.completeness_gap, 1e-12);
}

TEST(Nib, OpenScoreEqualsSimilarityAndLiesInUnitInterval) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  for (std::size_t i = 0; i < 5; ++i) {
    const Sample& s = w.dataset[i];
    for (Modality mod : {Modality::kImage, Modality::kText}) {
      const AttributionMap m = NibAttribute(w.model, s.image, s.tokens, Path(mod));
      EXPECT_NEAR(m.score_open, Similarity(w.model, s.image, s.tokens), 1e-12);
      EXPECT_GE(m.score_closed, -1.0);
      EXPECT_LE(m.score_closed, 1.0);
      EXPECT_FALSE(m.degenerate_closed);
    }
  }
}

TEST(Nib, NarrowedScoreEndpoints) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[1];
  const Bottleneck b = PrepareBottleneck(w.model, s.image, s.tokens, Modality::kImage, 3);
  EXPECT_NEAR(NarrowedScore(w.model, b.z, 1.0, b.other), Similarity(w.model, s.image, s.tokens),
              1e-12);
  for (double lambda : {0.0, 0.25, 0.5, 0.75}) {
    const double v = NarrowedScore(w.model, b.z, lambda, b.other);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(CodeOf([&] { NarrowedScore(w.model, b.z, 1.5, b.other); }),
            Code(ErrorCode::kInvalidArgument));
}

TEST(Nib, CompletenessGapShrinksWithSteps) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  for (std::size_t i = 0; i < 3; ++i) {
    const Sample& s = w.dataset[i];
    const double g10 = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage, 10))
                           .completeness_gap;
    const double g200 = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage, 200))
                            .completeness_gap;
    EXPECT_LT(g200, g10) << s.id;
    EXPECT_LE(g200, 1e-2) << s.id;
  }
}

TEST(Nib, RepeatedRunsAreBitwiseIdentical) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[2];
  const AttributionMap a = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage));
  const AttributionMap b = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage));
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.completeness_gap, b.completeness_gap);
}

TEST(Nib, SuffixIgnoringHiddenStateGivesZeroMap) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  DualEncoderModel m = w.model;
  // Final LN with zero gain outputs its bias regardless of the hidden state.
  m.image.final_gain = Tensor::Zeros(m.image.final_gain.shape());
  m.image.final_bias = Tensor::Full(m.image.final_bias.shape(), 0.5);
  const Sample& s = w.dataset[0];
  const AttributionMap map = NibAttribute(m, s.image, s.tokens, Path(Modality::kImage));
  for (double v : map.token_contributions) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(map.score_open, map.score_closed);
  EXPECT_EQ(map.completeness_gap, 0.0);
}

TEST(Nib, ZeroSuffixOutputMarksClosedScoreDegenerate) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  DualEncoderModel m = w.model;
  const std::size_t layer = 3;
  // A bias-free suffix maps the all-zero hidden state to the zero embedding.
  for (std::size_t b = layer; b < m.config.layers; ++b) {
    BlockWeights& blk = m.image.blocks[b];
    for (Tensor* t : {&blk.ln1_bias, &blk.bq, &blk.bk, &blk.bv, &blk.bo, &blk.ln2_bias,
                      &blk.b1, &blk.b2}) {
      *t = Tensor::Zeros(t->shape());
    }
  }
  m.image.final_bias = Tensor::Zeros(m.image.final_bias.shape());
  const Sample& s = w.dataset[0];
  const AttributionMap map = NibAttribute(m, s.image, s.tokens, Path(Modality::kImage, 20));
  EXPECT_TRUE(map.degenerate_closed);
  EXPECT_EQ(map.score_closed, 0.0);
  const Bottleneck bn = PrepareBottleneck(m, s.image, s.tokens, Modality::kImage, layer);
  EXPECT_EQ(CodeOf([&] { NarrowedScore(m, bn.z, 0.0, bn.other); }),
            Code(ErrorCode::kDegenerateInput));
}

TEST(Nib, PassCountsForTenSteps) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[0];
  PassCounter counter;
  NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage, 10), &counter);
  EXPECT_EQ(counter.forward, 12u);
  EXPECT_EQ(counter.backward, 10u);
  EXPECT_EQ(counter.input_independent, 1u);
}

TEST(Golden, NibScoresMatchReference) {
  const auto& golden = testing::Golden();
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  for (std::size_t k = 0; k < golden["samples"].size(); ++k) {
    const Sample& s = testing::GoldenSample(k);
    for (auto [key, mod] : {std::pair{"nib_image_m10", Modality::kImage},
                            std::pair{"nib_text_m10", Modality::kText}}) {
      const auto& g = golden["samples"][k][key];
      const AttributionMap m = NibAttribute(w.model, s.image, s.tokens, Path(mod));
      const auto expected = testing::ToVector(g["scores"]);
      ASSERT_EQ(m.scores.size(), expected.size()) << key;
      for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(m.scores[i], expected[i], 1e-9) << key << " " << s.id << " " << i;
      }
      EXPECT_NEAR(m.score_open, g["score_open"].get<double>(), 1e-10);
      EXPECT_NEAR(m.score_closed, g["score_closed"].get<double>(), 1e-10);
      EXPECT_NEAR(m.completeness_gap, g["completeness_gap"].get<double>(), 1e-9);
    }
  }
}

TEST(Golden, TwoConceptFixtureHasNegativeEvidence) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.fixture;
  const AttributionMap m = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage));
  EXPECT_LT(*std::min_element(m.scores.begin(), m.scores.end()), 0.0);
}

// Tensor-product hat functions: an independent statement of half-pixel
// bilinear interpolation with edge clamping.
double Hat(std::size_t dst, std::size_t in, std::size_t out, std::size_t cell) {
  double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(out) -
             0.5;
  s = std::clamp(s, 0.0, static_cast<double>(in - 1));
  return std::max(0.0, 1.0 - std::abs(s - static_cast<double>(cell)));
}

AttributionMap GridMap(std::size_t rows, std::size_t cols, std::vector<double> scores) {
  AttributionMap m;
  m.modality = Modality::kImage;
  m.grid_rows = rows;
  m.grid_cols = cols;
  m.scores = std::move(scores);
  return m;
}

TEST(Upsample, ConstantGridStaysConstant) {
  const SaliencyImage img = UpsampleBilinear(GridMap(4, 4, std::vector<double>(16, 0.37)), 32, 32);
  ASSERT_EQ(img.raw.size(), 1024u);
  for (double v : img.raw) EXPECT_NEAR(v, 0.37, 1e-15);
  for (double v : img.normalized) EXPECT_EQ(v, 1.0);
}

TEST(Upsample, SingleHotCellMatchesHatProduct) {
  for (std::size_t hot = 0; hot < 16; ++hot) {
    std::vector<double> scores(16, 0.0);
    scores[hot] = 1.0;
    const SaliencyImage img = UpsampleBilinear(GridMap(4, 4, scores), 32, 32);
    const std::size_t r = hot / 4, c = hot % 4;
    for (std::size_t y = 0; y < 32; ++y) {
      for (std::size_t x = 0; x < 32; ++x) {
        EXPECT_NEAR(img.raw[y * 32 + x], Hat(y, 4, 32, r) * Hat(x, 4, 32, c), 1e-14)
            << hot << " " << y << " " << x;
      }
    }
  }
}

TEST(Upsample, OneByOneGridIsConstant) {
  const SaliencyImage img = UpsampleBilinear(GridMap(1, 1, {-2.5}), 8, 8);
  for (double v : img.raw) EXPECT_EQ(v, -2.5);
}

TEST(Upsample, LinearRampIsReproducedInTheInterior) {
  std::vector<double> scores(16);
  for (std::size_t i = 0; i < 16; ++i) scores[i] = static_cast<double>(i % 4);
  const SaliencyImage img = UpsampleBilinear(GridMap(4, 4, scores), 32, 32);
  for (std::size_t x = 4; x < 28; ++x) {
    const double expected = (static_cast<double>(x) + 0.5) / 8.0 - 0.5;
    EXPECT_NEAR(img.raw[5 * 32 + x], expected, 1e-14);
  }
}

TEST(Upsample, TextMapIsRejected) {
  AttributionMap m = GridMap(1, 3, {1, 2, 3});
  m.modality = Modality::kText;
  EXPECT_EQ(CodeOf([&] { UpsampleBilinear(m, 32, 32); }), Code(ErrorCode::kInvalidArgument));
}

TEST(MinMax, RangeAndConstantInput) {
  const std::vector<double> v{2.0, -1.0, 0.5};
  const auto n = MinMaxNormalize(v);
  EXPECT_EQ(n[0], 1.0);
  EXPECT_EQ(n[1], 0.0);
  EXPECT_DOUBLE_EQ(n[2], 0.5);
  const std::vector<double> flat{3.0, 3.0};
  EXPECT_EQ(MinMaxNormalize(flat), (std::vector<double>{1.0, 1.0}));
}

TEST(Invariance, IdentityBlockLeavesEncoderAndMapUnchanged) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const DualEncoderModel aug = WithIdentityBlock(w.model, 3);
  EXPECT_EQ(aug.config.layers, 5u);
  for (std::size_t i = 0; i < 3; ++i) {
    const Sample& s = w.dataset[i];
    EXPECT_NEAR(Similarity(aug, s.image, s.tokens), Similarity(w.model, s.image, s.tokens),
                1e-12);
    for (Modality mod : {Modality::kImage, Modality::kText}) {
      EXPECT_TRUE(ImplementationInvarianceProbe(w.model, s.image, s.tokens, Path(mod)));
    }
  }
}

TEST(Invariance, RescaledValueProjectionGivesSameMap) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[0];
  for (Modality mod : {Modality::kImage, Modality::kText}) {
    // Block 3 (0-based) sits after the bottleneck, so the hidden state is
    // unchanged and only the suffix parameters differ.
    const DualEncoderModel m = WithRescaledValues(w.model, mod, 3, 4.0);
    const AttributionMap a = NibAttribute(w.model, s.image, s.tokens, Path(mod));
    const AttributionMap b = NibAttribute(m, s.image, s.tokens, Path(mod));
    EXPECT_LE(MaxScoreDiff(a, b), 1e-9);
  }
}

TEST(Invariance, DifferentLayerIsANegativeControl) {
  const testing::ToyWorld& w = testing::SeedZeroWorld();
  const Sample& s = w.dataset[0];
  const AttributionMap a = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage, 10, 3));
  const AttributionMap b = NibAttribute(w.model, s.image, s.tokens, Path(Modality::kImage, 10, 2));
  EXPECT_GT(MaxScoreDiff(a, b), 1e-6);
}

}  // namespace
}  // namespace nib
