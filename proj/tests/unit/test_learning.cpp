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
#include <limits>
#include <random>
#include <vector>

#include "expect_error.hpp"
#include "obm/learning.hpp"
#include "oracles.hpp"

namespace obm {
namespace {

using testing::error_of;
using testing::Ratings;

const FeatureScheme kOrdinal = FeatureScheme::ordinal(RatingScale(5));
const FeatureScheme kCategorical = FeatureScheme::categorical(RatingScale(5));
const FeatureScheme kGaussian = FeatureScheme::gaussian(RatingScale(5), {3.2, 1.1});

std::vector<FeatureScheme> schemes() { return {kOrdinal, kCategorical, kGaussian}; }

std::vector<std::vector<double>*> blocks(BmParams& p) { return {&p.alpha, &p.beta, &p.gamma, &p.lambda}; }
std::vector<const std::vector<double>*> blocks(const GradientAccumulator& g) {
  return {&g.alpha, &g.beta, &g.gamma, &g.lambda};
}

// Worst block-wise relative error between an analytic gradient and central
// differences of the objective.
double gradient_error(BmParams& p, const GradientAccumulator& g, const std::function<double()>& objective,
                      double step = 1e-5) {
  double worst = 0.0;
  const auto analytic = blocks(g);
  const auto params = blocks(p);
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b]->empty()) continue;
    const auto fd = testing::finite_difference(*params[b], objective, step);
    worst = std::max(worst, testing::max_relative_error(*analytic[b], fd));
  }
  return worst;
}

TEST(PlObjective, ZeroParametersAreUniform) {
  const BmParams p = BmParams::zeros(6, 3, kOrdinal, PairSet::from_pairs(6, {{0, 1}, {2, 5}}));
  const Ratings r = {{0, 1}, {2, 3}, {5, 5}};
  EXPECT_NEAR(pl_objective(p, kOrdinal, Evidence{r}), 3.0 * std::log(0.2), 1e-12);
}

TEST(PlObjective, MatchesEnumeration) {
  std::mt19937_64 rng(41);
  for (const FeatureScheme& f : schemes()) {
    const auto ref = testing::ref_features(f);
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 1 + trial % 8;
      const BmParams p = testing::random_params(rng, 6, d, f, 0.5, 0.5);
      const Ratings r = testing::random_ratings(rng, 6, 1 + trial % 6, 5);
      const double got = pl_objective(p, f, Evidence{r});
      const double want = testing::ref_pl_objective(p, ref, r);
      EXPECT_LE(std::abs(got - want), 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(PlObjective, ConditionalsAreNormalized) {
  std::mt19937_64 rng(42);
  const BmParams p = testing::random_params(rng, 6, 4, kOrdinal, 0.5, 0.5);
  const Ratings r = testing::random_ratings(rng, 6, 5, 5);
  const auto c = pl_conditionals(p, kOrdinal, Evidence{r});
  ASSERT_EQ(c.size(), 25u);
  for (int i = 0; i < 5; ++i) {
    double z = 0;
    for (int s = 0; s < 5; ++s) z += c[5 * i + s];
    EXPECT_NEAR(z, 1.0, 1e-12);
  }
}

TEST(PlGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(43);
  for (const FeatureScheme& f : schemes()) {
    for (int trial = 0; trial < 10; ++trial) {
      BmParams p = testing::random_params(rng, 5, 1 + trial % 4, f, 0.5, 0.6);
      const Ratings r = testing::random_ratings(rng, 5, 2 + trial % 4, 5);
      const GradientAccumulator g = pl_gradient(p, f, Evidence{r});
      EXPECT_LE(gradient_error(p, g, [&] { return pl_objective(p, f, Evidence{r}); }), 1e-5);
    }
  }
}

TEST(PlGradient, AccumulationIsAdditive) {
  std::mt19937_64 rng(44);
  const BmParams p = testing::random_params(rng, 5, 3, kOrdinal, 0.5, 0.6);
  const Ratings r = testing::random_ratings(rng, 5, 4, 5);
  GradientAccumulator twice = GradientAccumulator::zeros_like(p);
  const double a = accumulate_pl_gradient(p, kOrdinal, Evidence{r}, twice);
  const double b = accumulate_pl_gradient(p, kOrdinal, Evidence{r}, twice);
  EXPECT_EQ(a, b);
  GradientAccumulator once = pl_gradient(p, kOrdinal, Evidence{r});
  once.add(once, 1.0);
  for (std::size_t k = 0; k < once.beta.size(); ++k) EXPECT_DOUBLE_EQ(once.beta[k], twice.beta[k]);
}

TEST(PlGradient, SingleRatingHasNoPairTerms) {
  std::mt19937_64 rng(45);
  const BmParams p = testing::random_params(rng, 4, 2, kOrdinal, 0.5, 1.0);
  const Ratings r = {{2, 4}};
  const GradientAccumulator g = pl_gradient(p, kOrdinal, Evidence{r});
  for (double v : g.lambda) EXPECT_EQ(v, 0.0);
  // beta gradient of member 2 is sum_s D(s) f_a(s) with D = indicator - conditional.
  const auto c = pl_conditionals(p, kOrdinal, Evidence{r});
  for (int a = 0; a < kOrdinal.unary_size(); ++a) {
    double want = kOrdinal.unary(4)[a];
    for (int s = 1; s <= 5; ++s) want -= c[s - 1] * kOrdinal.unary(s)[a];
    EXPECT_NEAR(g.beta[p.beta_index(2, a)], want, 1e-12);
  }
}

TEST(PlGradient, ZeroParametersGiveZeroAlphaGradient) {
  const BmParams p = BmParams::zeros(4, 3, kOrdinal, PairSet(4));
  const Ratings r = {{0, 1}, {1, 3}, {3, 5}};
  for (double v : pl_gradient(p, kOrdinal, Evidence{r}).alpha) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(ExactMl, LogLikelihoodMatchesEnumeration) {
  std::mt19937_64 rng(46);
  for (const FeatureScheme& f : schemes()) {
    const auto ref = testing::ref_features(f);
    for (int trial = 0; trial < 10; ++trial) {
      const BmParams p = testing::random_params(rng, 5, 1 + trial % 3, f, 0.5, 0.6);
      const Ratings r = testing::random_ratings(rng, 5, 1 + trial % 3, 5);
      EXPECT_NEAR(exact_log_likelihood(p, f, Evidence{r}), testing::ref_log_likelihood(p, ref, r), 1e-10);
    }
  }
}

TEST(ExactMl, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(47);
  for (const FeatureScheme& f : schemes()) {
    const FeatureScheme small = f.kind() == SchemeKind::kGaussian
                                    ? FeatureScheme::gaussian(RatingScale(3), {2.0, 0.8})
                                    : make_scheme(f.kind(), RatingScale(3));
    for (int trial = 0; trial < 8; ++trial) {
      BmParams p = testing::random_params(rng, 3, 2, small, 0.5, 1.0);
      const Ratings r = testing::random_ratings(rng, 3, 3, 3);
      const GradientAccumulator g = exact_ml_gradient(p, small, Evidence{r});
      EXPECT_LE(gradient_error(p, g, [&] { return exact_log_likelihood(p, small, Evidence{r}); }), 1e-6);
    }
  }
}

TEST(ExactMl, ZeroParametersGiveZeroAlphaGradient) {
  const BmParams p = BmParams::zeros(3, 2, kOrdinal, PairSet(3));
  const Ratings r = {{0, 2}, {2, 5}};
  for (double v : exact_ml_gradient(p, kOrdinal, Evidence{r}).alpha) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(ExactMl, SizeGuard) {
  const BmParams wide = BmParams::zeros(3, 13, kOrdinal, PairSet(3));
  const Ratings r = {{0, 1}};
  EXPECT_EQ(error_of([&] { exact_log_likelihood(wide, kOrdinal, Evidence{r}); }), ErrorCode::kEnumerationTooLarge);
  const BmParams many = BmParams::zeros(9, 1, kOrdinal, PairSet(9));
  const Ratings nine = {{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {6, 1}, {7, 1}, {8, 1}};
  EXPECT_EQ(error_of([&] { exact_ml_gradient(many, kOrdinal, Evidence{nine}); }), ErrorCode::kEnumerationTooLarge);
}

TEST(ExactMl, DataFromModelGivesZeroMeanBetaGradient) {
  // Averaging the gradient over data drawn from the model itself cancels the
  // data and model terms in expectation.
  std::mt19937_64 rng(48);
  const FeatureScheme f = FeatureScheme::ordinal(RatingScale(3));
  const auto ref = testing::ref_features(f);
  const BmParams p = testing::random_params(rng, 3, 2, f, 0.5, 1.0);
  std::vector<Ratings> configs;
  std::vector<double> weights;
  for (int a = 1; a <= 3; ++a) {
    for (int b = 1; b <= 3; ++b) {
      for (int c = 1; c <= 3; ++c) {
        configs.push_back({{0, a}, {1, b}, {2, c}});
        weights.push_back(std::exp(testing::ref_log_marginal(p, ref, configs.back())));
      }
    }
  }
  std::discrete_distribution<int> draw(weights.begin(), weights.end());
  const int samples = 4000;
  std::vector<double> sum(p.beta.size(), 0.0);
  std::vector<double> sq(p.beta.size(), 0.0);
  for (int t = 0; t < samples; ++t) {
    const auto g = exact_ml_gradient(p, f, Evidence{configs[draw(rng)]});
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k] += g.beta[k];
      sq[k] += g.beta[k] * g.beta[k];
    }
  }
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const double mean = sum[k] / samples;
    const double se = std::sqrt(std::max(sq[k] / samples - mean * mean, 0.0) / samples);
    EXPECT_LE(std::abs(mean), 3.0 * se + 1e-12) << "beta entry " << k;
  }
}

TEST(Cd, FixedSeedIsReproducible) {
  std::mt19937_64 prng(49);
  const BmParams p = testing::random_params(prng, 6, 3, kOrdinal, 0.5, 0.5);
  const Ratings r = testing::random_ratings(prng, 6, 4, 5);
  Rng a(7);
  Rng b(7);
  const auto ga = cd_gradient(p, kOrdinal, Evidence{r}, 3, a);
  const auto gb = cd_gradient(p, kOrdinal, Evidence{r}, 3, b);
  EXPECT_EQ(ga.alpha, gb.alpha);
  EXPECT_EQ(ga.beta, gb.beta);
  EXPECT_EQ(ga.gamma, gb.gamma);
  EXPECT_EQ(ga.lambda, gb.lambda);
}

TEST(Cd, SaturatedReconstructionGivesZeroGradient) {
  BmParams p = BmParams::zeros(3, 2, kCategorical, PairSet::from_pairs(3, {{0, 1}}));
  const Ratings r = {{0, 2}, {1, 4}, {2, 1}};
  p.alpha = {60.0, 60.0};
  for (const Entry& e : r) p.beta_at(e.index, e.level - 1) = 60.0;
  Rng rng(3);
  const auto g = cd_gradient(p, kCategorical, Evidence{r}, 1, rng);
  EXPECT_LE(g.norm(), 1e-12);
}

TEST(GaussianPl, PerfectReconstructionGivesZeroGradient) {
  BmParams p = BmParams::zeros(3, 2, kGaussian, PairSet::from_pairs(3, {{0, 2}}));
  const Ratings r = {{0, 2}, {1, 4}, {2, 5}};
  for (const Entry& e : r) p.beta_at(e.index, 0) = kGaussian.gaussian_value(e.level);
  EXPECT_NEAR(gaussian_pl_error(p, kGaussian, Evidence{r}), 0.0, 1e-30);
  for (auto form : {GaussianGradientForm::kExact, GaussianGradientForm::kPrinted}) {
    EXPECT_LE(gaussian_pl_gradient(p, kGaussian, Evidence{r}, form).norm(), 1e-15);
  }
}

TEST(GaussianPl, ExactFormMatchesFiniteDifferences) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    BmParams p = testing::random_params(rng, 6, 1 + trial % 4, kGaussian, 0.5, 0.6);
    const Ratings r = testing::random_ratings(rng, 6, 2 + trial % 5, 5);
    const auto g = gaussian_pl_gradient(p, kGaussian, Evidence{r}, GaussianGradientForm::kExact);
    EXPECT_LE(gradient_error(p, g, [&] { return gaussian_pl_error(p, kGaussian, Evidence{r}); }), 1e-6);
  }
}

TEST(GaussianPl, PrintedFormAgreesOnBetaAndLambdaOnly) {
  std::mt19937_64 rng(51);
  BmParams p = testing::random_params(rng, 6, 3, kGaussian, 0.8, 0.8);
  const Ratings r = testing::random_ratings(rng, 6, 5, 5);
  const auto exact = gaussian_pl_gradient(p, kGaussian, Evidence{r}, GaussianGradientForm::kExact);
  const auto printed = gaussian_pl_gradient(p, kGaussian, Evidence{r}, GaussianGradientForm::kPrinted);
  EXPECT_LE(testing::max_relative_error(exact.beta, printed.beta), 1e-12);
  EXPECT_LE(testing::max_relative_error(exact.lambda, printed.lambda), 1e-12);
  EXPECT_GT(testing::max_relative_error(exact.gamma, printed.gamma), 1e-3);
  EXPECT_GT(testing::max_relative_error(exact.alpha, printed.alpha), 1e-3);
}

RatingStore toy_store(std::mt19937_64& rng, int users, int items) {
  std::vector<RatingTriple> t;
  std::bernoulli_distribution keep(0.5);
  std::uniform_int_distribution<int> level(1, 5);
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (keep(rng) || i == u % items) t.push_back({u, i, level(rng)});
    }
  }
  return testing::store_from(t, users, items);
}

TEST(SgdTrain, FixedSeedIsReproducible) {
  std::mt19937_64 rng(52);
  const RatingStore s = toy_store(rng, 20, 8);
  TrainConfig c;
  c.hidden_units = 3;
  c.max_epochs = 3;
  c.block_size = 5;
  for (TrainMethod m : {TrainMethod::kCd, TrainMethod::kPl}) {
    c.method = m;
    const auto a = sgd_train(c, s, kOrdinal, build_topk(s, Axis::kItem, 3, 3));
    const auto b = sgd_train(c, s, kOrdinal, build_topk(s, Axis::kItem, 3, 3));
    EXPECT_EQ(a.params, b.params);
  }
}

TEST(SgdTrain, ZeroLearningRateKeepsInitialization) {
  std::mt19937_64 rng(53);
  const RatingStore s = toy_store(rng, 12, 6);
  TrainConfig c;
  c.hidden_units = 2;
  c.max_epochs = 4;
  c.learning_rate = 0.0;
  const NeighborGraph g = empty_graph(Axis::kItem, s.n_items());
  const auto trained = sgd_train(c, s, kOrdinal, g);
  BmParams init = init_params(c, s.n_items(), 2, kOrdinal, PairSet::from_graph(g));
  EXPECT_EQ(trained.params.alpha, init.alpha);
  EXPECT_EQ(trained.params.gamma, init.gamma);
  EXPECT_EQ(trained.params.beta, init.beta);
}

TEST(SgdTrain, NonFiniteParametersAreDivergence) {
  std::mt19937_64 rng(54);
  const RatingStore s = toy_store(rng, 12, 6);
  TrainConfig c;
  c.method = TrainMethod::kPl;
  c.hidden_units = 2;
  c.max_epochs = 5;
  c.learning_rate = 1e308;
  const auto f = [&] { sgd_train(c, s, kOrdinal, empty_graph(Axis::kItem, s.n_items())); };
  EXPECT_EQ(error_of(f), ErrorCode::kDivergence);
}

TEST(SgdTrain, ConfigValidation) {
  TrainConfig c;
  c.cd_steps = 0;
  EXPECT_EQ(error_of([&] { c.validate(); }), ErrorCode::kUsage);
  c = TrainConfig{};
  c.block_size = 0;
  EXPECT_EQ(error_of([&] { c.validate(); }), ErrorCode::kUsage);
  EXPECT_EQ(parse_train_method(method_name(TrainMethod::kGaussianPl)), TrainMethod::kGaussianPl);
}

}  // namespace
}  // namespace obm
