// Copyright 2026 The skim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "skim/scoring.hpp"
#include "unit/helpers.hpp"

namespace skim {
namespace {

TEST(Normalize, MinMax) {
  const std::vector<double> v{2, 4, 6};
  EXPECT_EQ(normalize(v), (std::vector<double>{0, 0.5, 1}));
}

TEST(Normalize, ConstantInputIsHalf) {
  const std::vector<double> v{5, 5, 5};
  for (auto kind : {NormKind::minmax, NormKind::exponential, NormKind::combined}) {
    EXPECT_EQ(normalize(v, {kind, 2}), (std::vector<double>{0.5, 0.5, 0.5}));
  }
}

TEST(Normalize, Exponential) {
  const std::vector<double> v{0, 0.5, 1};
  const auto out = normalize(v, {NormKind::exponential, 2});
  EXPECT_NEAR(out[0], 0, 1e-12);
  EXPECT_NEAR(out[1], (std::numbers::e - 1) / (std::numbers::e * std::numbers::e - 1), 1e-12);
  EXPECT_NEAR(out[1], 0.2689414213699951, 1e-12);
  EXPECT_NEAR(out[2], 1, 1e-12);
}

TEST(Normalize, OrderPreservingOnRandomInput) {
  std::mt19937 gen(8);
  std::uniform_real_distribution<double> u(-50, 50);
  for (auto kind : {NormKind::minmax, NormKind::exponential, NormKind::combined}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(20);
      for (auto& x : v) x = u(gen);
      const auto out = normalize(v, {kind, 2});
      for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_GE(out[i], 0);
        EXPECT_LE(out[i], 1);
        for (std::size_t j = 0; j < v.size(); ++j) {
          if (v[i] <= v[j]) EXPECT_LE(out[i], out[j]);
        }
      }
    }
  }
}

TEST(Normalize, RejectsNaNAndEmpty) {
  const std::vector<double> v{1, std::nan(""), 2};
  EXPECT_THROW(normalize(v), InvariantError);
  EXPECT_THROW(normalize(std::vector<double>{}), InvariantError);
  EXPECT_THROW((NormSpec{NormKind::exponential, 0}.validate()), InvariantError);
}

TEST(NormKindNames, Parse) {
  EXPECT_EQ(norm_kind_from_string("exp"), NormKind::exponential);
  EXPECT_EQ(norm_kind_from_string("minmax+exp"), NormKind::combined);
  EXPECT_THROW(norm_kind_from_string("zscore"), InvariantError);
}

TEST(Smooth, EqualScoresStayConstant) {
  const std::vector<double> s{0.3, 0.3, 0.3};
  const auto f = smooth_scene_scores(s, test::scenes_of({5, 8, 3}));
  for (double x : f) EXPECT_DOUBLE_EQ(x, 0.3);
}

TEST(Smooth, CosineMidpointIsHalf) {
  // Midpoints 2 and 6; frame 4 sits at p = 0.5.
  const std::vector<double> s{0, 1};
  const auto f = smooth_scene_scores(s, test::scenes_of({4, 4}));
  EXPECT_NEAR(f[4], 0.5, 1e-12);
  EXPECT_EQ(f[2], 0);
  EXPECT_EQ(f[6], 1);
  EXPECT_EQ(f[0], 0);
  EXPECT_EQ(f[7], 1);
}

TEST(Smooth, SingleSceneIsFlat) {
  const std::vector<double> s{0.7};
  const auto f = smooth_scene_scores(s, test::scenes_of({9}));
  EXPECT_EQ(f, std::vector<double>(9, 0.7));
}

TEST(Smooth, MatchesClosedForm) {
  const std::vector<double> s{0.2, 0.9, 0.4};
  const auto sc = test::scenes_of({10, 6, 11});
  const auto f = smooth_scene_scores(s, sc);
  const std::size_t m[] = {5, 13, 21};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = m[i]; t <= m[i + 1]; ++t) {
      const double p = double(t - m[i]) / double(m[i + 1] - m[i]);
      const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * p);
      EXPECT_NEAR(f[t], s[i] + w * (s[i + 1] - s[i]), 1e-12);
    }
  }
}

TEST(SelectParams, Branches) {
  const auto a = select_params(700), b = select_params(200), c = select_params(60);
  EXPECT_EQ(a.sigma, 0.1);
  EXPECT_EQ(a.window_s, 1.0);
  EXPECT_EQ(b.sigma, 1.0);
  EXPECT_EQ(b.window_s, 1.0);
  EXPECT_EQ(c.sigma, 0.3);
  EXPECT_EQ(c.window_s, 3.0);
  // Boundaries: T = S and T = 5S fall in the lower branch.
  EXPECT_EQ(select_params(108).sigma, 0.3);
  EXPECT_EQ(select_params(540).sigma, 1.0);
  EXPECT_EQ(select_params(540.001).sigma, 0.1);
  EXPECT_THROW(select_params(0), InvariantError);
}

TEST(Consistency, HandCounts) {
  const std::vector<std::size_t> a{0, 0, 0, 0}, b{0, 0, 1, 0}, c{0, 1};
  EXPECT_EQ(consistency(a), 1.0);
  EXPECT_EQ(consistency(b), 0.75);
  EXPECT_EQ(consistency(c), 0.5);
}

TEST(Uniqueness, HandCases) {
  EXPECT_EQ(uniqueness(Points{2, 2, {0, 0, 2, 0}}), 1.0);
  EXPECT_EQ(uniqueness(Points{3, 2, {1, 1, 1, 1, 1, 1}}), 0.0);
  EXPECT_NEAR(uniqueness(Points{2, 2, {0, 0, 3, 4}}), 2.5, 1e-12);
}

EmbeddingMatrix matrix(std::size_t dim, const std::vector<float>& v) { return EmbeddingMatrix(v.size() / dim, dim, v); }

TEST(FrameWeights, SigmaHalfOnOppositeSegments) {
  // Segment A: two near-identical rows (one cluster, low uniqueness).
  // Segment B: two far-apart rows (two clusters, high uniqueness).
  const auto emb = matrix(2, {0, 0, 0, 0.001f, 5, 0, -5, 0});
  WeightParams p{0.5, 2.0};
  const auto w = frame_weights(test::scenes_of({4}), emb, 1.0, p);
  EXPECT_EQ(w.k_star[0], 3u);
  for (double x : w.weights) EXPECT_NEAR(x, 0.5, 1e-9);

  WeightParams c{1.0, 2.0}, u{0.0, 2.0};
  EXPECT_EQ(frame_weights(test::scenes_of({4}), emb, 1.0, c).weights, (std::vector<double>{1, 1, 0, 0}));
  EXPECT_EQ(frame_weights(test::scenes_of({4}), emb, 1.0, u).weights, (std::vector<double>{0, 0, 1, 1}));
}

TEST(FrameWeights, IdenticalEmbeddingsGiveEqualWeights) {
  const auto emb = matrix(3, std::vector<float>(3 * 12, 0.25f));
  const auto w = frame_weights(test::scenes_of({12}), emb, 2.0, {1.0, 1.0});
  for (double x : w.weights) EXPECT_EQ(x, w.weights[0]);
}

TEST(FrameWeights, SigmaZeroIsRescaledUniqueness) {
  std::mt19937 gen(12);
  std::normal_distribution<float> nd;
  std::vector<float> v(2 * 30);
  for (auto& x : v) x = nd(gen);
  const auto emb = matrix(2, v);
  const auto w = frame_weights(test::scenes_of({30}), emb, 5.0, {0.0, 1.0});
  std::vector<double> u;
  for (std::size_t s = 0; s < 30; s += 5) u.push_back(uniqueness(slice_points(emb, {s, s + 5})));
  const auto expect = normalize(u);
  for (std::size_t t = 0; t < 30; ++t) EXPECT_NEAR(w.weights[t], expect[t / 5], 1e-12);
}

TEST(FrameWeights, IndependentOfJobs) {
  std::mt19937 gen(13);
  std::normal_distribution<float> nd;
  std::vector<float> v(4 * 300);
  for (auto& x : v) x = nd(gen);
  const auto emb = matrix(4, v);
  const auto sc = test::scenes_of({50, 70, 80, 100});
  WeightOptions opt;
  opt.seed = 5;
  const auto a = frame_weights(sc, emb, 10, {0.3, 1.0}, opt, 1);
  const auto b = frame_weights(sc, emb, 10, {0.3, 1.0}, opt, 4);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.k_star, b.k_star);
}

TEST(Fuse, ProductsThenPerSceneNormalization) {
  const std::vector<double> s{0.8, 0.4}, w{0.5, 1.0};
  EXPECT_EQ(fuse_frame_scores(s, w, test::scenes_of({2})), (std::vector<double>{0.5, 0.5}));
}

TEST(Fuse, UnitWeightsGivePerSceneNormalizedScores) {
  const std::vector<double> s{0.1, 0.3, 0.2, 0.9, 0.5}, w(5, 1.0);
  const auto out = fuse_frame_scores(s, w, test::scenes_of({3, 2}));
  EXPECT_NEAR(out[0], 0, 1e-12);
  EXPECT_NEAR(out[1], 1, 1e-12);
  EXPECT_NEAR(out[2], 0.5, 1e-12);
  EXPECT_NEAR(out[3], 1, 1e-12);
  EXPECT_NEAR(out[4], 0, 1e-12);
}

TEST(ScoreFrames, OverridesAndDurationRule) {
  const auto emb = matrix(1, std::vector<float>(100, 1.0f));
  const std::vector<double> raw{10, 90};
  ScoringConfig cfg;
  auto r = score_frames(raw, test::scenes_of({40, 60}), emb, 1.0, cfg);
  EXPECT_EQ(r.params.sigma, 0.3);
  EXPECT_EQ(r.params.window_s, 3.0);
  EXPECT_EQ(r.scene_norm, (std::vector<double>{0, 1}));
  cfg.sigma = 0.9;
  cfg.window_s = 2;
  r = score_frames(raw, test::scenes_of({40, 60}), emb, 1.0, cfg);
  EXPECT_EQ(r.params.sigma, 0.9);
  EXPECT_EQ(r.params.window_s, 2.0);
  for (double x : r.final_scores) {
    EXPECT_GE(x, 0);
    EXPECT_LE(x, 1);
  }
}

}  // namespace
}  // namespace skim
