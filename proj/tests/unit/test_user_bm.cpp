// Copyright 2026 The obm Authors.
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
#include <random>
#include <vector>

#include "expect_error.hpp"
#include "obm/user_bm.hpp"
#include "oracles.hpp"

namespace obm {
namespace {

using testing::error_of;
using testing::Ratings;

const FeatureScheme kOrdinal = FeatureScheme::ordinal(RatingScale(5));
const FeatureScheme kCategorical = FeatureScheme::categorical(RatingScale(5));
const FeatureScheme kGaussian = FeatureScheme::gaussian(RatingScale(5), {3.1, 1.2});

std::vector<FeatureScheme> schemes() { return {kOrdinal, kCategorical, kGaussian}; }

TEST(NegativeEnergy, ZeroParametersGiveZero) {
  const BmParams p = BmParams::zeros(4, 3, kOrdinal, PairSet::from_pairs(4, {{0, 1}, {1, 3}}));
  const Ratings r = {{0, 2}, {1, 5}, {3, 1}};
  const std::vector<double> h = {1, 0, 1};
  EXPECT_EQ(negative_energy(p, kOrdinal, Evidence{r}, h), 0.0);
}

TEST(NegativeEnergy, DirectSum) {
  BmParams p = BmParams::zeros(1, 1, kCategorical, PairSet(1));
  p.alpha[0] = 0.5;
  p.beta_at(0, 0) = 0.3;
  p.gamma_at(0, 0, 0) = 0.2;
  const Ratings r = {{0, 1}};
  EXPECT_NEAR(negative_energy(p, kCategorical, Evidence{r}, std::vector<double>{1.0}), 1.0, 1e-15);
}

TEST(NegativeEnergy, MatchesHandWrittenEnergy) {
  std::mt19937_64 rng(31);
  for (const FeatureScheme& f : schemes()) {
    const auto ref = testing::ref_features(f);
    for (int trial = 0; trial < 30; ++trial) {
      const BmParams p = testing::random_params(rng, 6, 3, f, 0.7, 0.5);
      const Ratings r = testing::random_ratings(rng, 6, 4, 5);
      for (std::uint64_t m = 0; m < 8; ++m) {
        const std::vector<double> h = {double(m & 1), double((m >> 1) & 1), double((m >> 2) & 1)};
        const std::vector<int> hi = {int(m & 1), int((m >> 1) & 1), int((m >> 2) & 1)};
        EXPECT_NEAR(negative_energy(p, f, Evidence{r}, h), testing::ref_negative_energy(p, ref, r, hi), 1e-12);
      }
    }
  }
}

TEST(HiddenPosteriorTest, ZeroParametersGiveHalf) {
  const BmParams p = BmParams::zeros(3, 4, kOrdinal, PairSet(3));
  const Ratings r = {{0, 1}, {2, 4}};
  for (double v : hidden_posterior(p, kOrdinal, Evidence{r}).probs) EXPECT_EQ(v, 0.5);
}

TEST(HiddenPosteriorTest, Saturation) {
  BmParams p = BmParams::zeros(3, 2, kOrdinal, PairSet(3));
  p.alpha = {20.0, 20.0};
  const Ratings r = {{1, 3}};
  for (double v : hidden_posterior(p, kOrdinal, Evidence{r}).probs) EXPECT_NEAR(v, 1.0, 1e-8);
}

TEST(HiddenPosteriorTest, MatchesEnumeration) {
  std::mt19937_64 rng(32);
  for (const FeatureScheme& f : schemes()) {
    const auto ref = testing::ref_features(f);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 1 + trial % 8;
      const BmParams p = testing::random_params(rng, 6, d, f, 0.5, 0.4);
      const Ratings r = testing::random_ratings(rng, 6, 1 + trial % 6, 5);
      const auto got = hidden_posterior(p, f, Evidence{r}).probs;
      const auto want = testing::ref_hidden_posterior(p, ref, r);
      for (int k = 0; k < d; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
    }
  }
}

TEST(ConditionalRating, ZeroParametersAreUniform) {
  const BmParams p = BmParams::zeros(3, 2, kOrdinal, PairSet::from_pairs(3, {{0, 2}}));
  const Ratings r = {{0, 5}};
  for (double v : conditional_rating(p, kOrdinal, 2, Evidence{r}, std::vector<double>{1, 0})) {
    EXPECT_NEAR(v, 0.2, 1e-15);
  }
}

TEST(ConditionalRating, NegativeLambdaPullsTowardNeighbour) {
  BmParams p = BmParams::zeros(2, 1, kOrdinal, PairSet::from_pairs(2, {{0, 1}}));
  p.lambda[0] = -2.0;
  const Ratings r = {{0, 5}};
  const auto dist = conditional_rating(p, kOrdinal, 1, Evidence{r}, std::vector<double>{0});
  EXPECT_EQ(std::max_element(dist.begin(), dist.end()) - dist.begin(), 4);
}

TEST(ConditionalRating, MatchesDirectNormalization) {
  std::mt19937_64 rng(33);
  for (const FeatureScheme& f : schemes()) {
    const auto ref = testing::ref_features(f);
    for (int trial = 0; trial < 30; ++trial) {
      const BmParams p = testing::random_params(rng, 6, 3, f, 0.6, 0.5);
      Ratings r = testing::random_ratings(rng, 6, 4, 5);
      const std::vector<int> hi = {trial & 1, (trial >> 1) & 1, (trial >> 2) & 1};
      const std::vector<double> h(hi.begin(), hi.end());
      const std::size_t pos = static_cast<std::size_t>(trial) % r.size();
      const auto got = conditional_rating(p, f, r[pos].index, Evidence{r}, h);
      std::vector<double> want(5);
      double z = 0;
      for (int s = 1; s <= 5; ++s) {
        Ratings alt = r;
        alt[pos].level = s;
        want[s - 1] = std::exp(testing::ref_negative_energy(p, ref, alt, hi));
        z += want[s - 1];
      }
      for (int s = 0; s < 5; ++s) EXPECT_NEAR(got[s], want[s] / z, 1e-12);
    }
  }
}

TEST(ConditionalRating, CategoricalBetaShiftInvariance) {
  std::mt19937_64 rng(34);
  BmParams p = testing::random_params(rng, 4, 2, kCategorical, 0.8, 0.5);
  const Ratings r = {{0, 2}, {1, 4}, {3, 3}};
  const std::vector<double> h = {1, 0};
  const auto before = conditional_rating(p, kCategorical, 2, Evidence{r}, h);
  for (int a = 0; a < 5; ++a) p.beta_at(2, a) += 1.7;
  const auto after = conditional_rating(p, kCategorical, 2, Evidence{r}, h);
  for (int s = 0; s < 5; ++s) EXPECT_NEAR(before[s], after[s], 1e-12);
}

TEST(ConditionalRating, ItemOutsideRangeIsIndexError) {
  const BmParams p = BmParams::zeros(3, 1, kOrdinal, PairSet(3));
  const Ratings r = {{0, 1}};
  EXPECT_EQ(error_of([&] { conditional_rating(p, kOrdinal, 3, Evidence{r}, std::vector<double>{0}); }),
            ErrorCode::kIndex);
}

TEST(GibbsSweep, ZeroParametersGiveHalfHiddenMarginals) {
  const BmParams p = BmParams::zeros(3, 4, kOrdinal, PairSet(3));
  const Ratings r = {{0, 1}, {1, 2}, {2, 3}};
  Rng rng(35);
  GibbsState s = data_state(p, Evidence{r});
  std::vector<double> on(4, 0.0);
  for (int t = 0; t < 10000; ++t) {
    s = gibbs_sweep(p, kOrdinal, Evidence{r}, std::move(s), rng);
    for (int k = 0; k < 4; ++k) on[k] += s.hidden[k];
  }
  for (double v : on) EXPECT_NEAR(v / 10000.0, 0.5, 0.02);
}

TEST(GibbsSweep, LongRunMarginalsMatchEnumeration) {
  std::mt19937_64 prng(36);
  const FeatureScheme f = FeatureScheme::ordinal(RatingScale(3));
  const auto ref = testing::ref_features(f);
  const BmParams p = testing::random_params(prng, 3, 2, f, 0.5, 1.0);
  const Ratings r = {{0, 1}, {1, 2}, {2, 3}};

  // Enumerated P(r_i = s) over all 27 rating configurations.
  std::vector<double> marg(9, 0.0);
  double z = 0;
  for (int a = 1; a <= 3; ++a) {
    for (int b = 1; b <= 3; ++b) {
      for (int c = 1; c <= 3; ++c) {
        const double w = std::exp(testing::ref_log_marginal(p, ref, {{0, a}, {1, b}, {2, c}}));
        marg[a - 1] += w;
        marg[3 + b - 1] += w;
        marg[6 + c - 1] += w;
        z += w;
      }
    }
  }
  Rng rng(37);
  GibbsState s = data_state(p, Evidence{r});
  std::vector<double> counts(9, 0.0);
  const int sweeps = 50000;
  for (int t = 0; t < sweeps; ++t) {
    s = gibbs_sweep(p, f, Evidence{r}, std::move(s), rng);
    for (int i = 0; i < 3; ++i) counts[3 * i + s.levels[i] - 1] += 1.0;
  }
  for (int k = 0; k < 9; ++k) EXPECT_NEAR(counts[k] / sweeps, marg[k] / z, 0.02);
}

TEST(GibbsSweep, FixedSeedIsReproducible) {
  std::mt19937_64 prng(38);
  const BmParams p = testing::random_params(prng, 5, 3, kOrdinal, 0.5, 0.5);
  const Ratings r = {{0, 1}, {2, 2}, {4, 5}};
  auto run = [&] {
    Rng rng(99);
    GibbsState s = data_state(p, Evidence{r});
    std::vector<int> trace;
    for (int t = 0; t < 50; ++t) {
      s = gibbs_sweep(p, kOrdinal, Evidence{r}, std::move(s), rng);
      trace.insert(trace.end(), s.levels.begin(), s.levels.end());
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace obm
