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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "expect_error.hpp"
#include "obm/inference.hpp"
#include "obm/joint_bm.hpp"
#include "oracles.hpp"

namespace obm {
namespace {

using testing::error_of;
using testing::Ratings;

const FeatureScheme kOrdinal = FeatureScheme::ordinal(RatingScale(5));
const FeatureScheme kGaussian = FeatureScheme::gaussian(RatingScale(5), {3.0, 1.3});

JointModelParams random_joint(std::mt19937_64& rng, const RatingStore& s, int d, int dp, const FeatureScheme& f,
                              double sigma) {
  return {testing::random_params(rng, s.n_items(), d, f, sigma, 0.6),
          testing::random_params(rng, s.n_users(), dp, f, sigma, 0.6)};
}

RatingStore random_store(std::mt19937_64& rng, int users, int items, double density) {
  std::vector<RatingTriple> t;
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<int> level(1, 5);
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (keep(rng) || i == u % items || u == i % users) t.push_back({u, i, level(rng)});
    }
  }
  return testing::store_from(t, users, items);
}

std::vector<double> hard(std::uint64_t mask, int first, int count) {
  std::vector<double> h(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) h[static_cast<std::size_t>(k)] = static_cast<double>((mask >> (first + k)) & 1u);
  return h;
}

TEST(JointEnergy, ZeroParametersGiveZero) {
  std::mt19937_64 rng(71);
  const RatingStore s = random_store(rng, 3, 3, 0.5);
  const JointModelParams j{BmParams::zeros(3, 2, kOrdinal, PairSet(3)), BmParams::zeros(3, 1, kOrdinal, PairSet(3))};
  EXPECT_EQ(joint_negative_energy(j, kOrdinal, s, std::vector<double>(6, 1.0), std::vector<double>(3, 1.0)), 0.0);
}

TEST(JointEnergy, UserSideOnlyIsSumOfUserEnergies) {
  std::mt19937_64 rng(72);
  const RatingStore s = random_store(rng, 2, 2, 0.9);
  JointModelParams j{testing::random_params(rng, 2, 2, kOrdinal, 0.7, 1.0), BmParams::zeros(2, 2, kOrdinal, PairSet(2))};
  const std::vector<double> hu = {1, 0, 0, 1};
  const std::vector<double> hi = {1, 1, 0, 1};
  double want = 0;
  for (int u = 0; u < 2; ++u) {
    want += negative_energy(j.user_side, kOrdinal, Evidence{s.by_user(u)}, std::span<const double>(hu).subspan(2 * u, 2));
  }
  EXPECT_NEAR(joint_negative_energy(j, kOrdinal, s, hu, hi), want, 1e-12);
}

TEST(JointEnergy, MatchesHandWrittenSum) {
  std::mt19937_64 rng(73);
  for (const FeatureScheme& f : {kOrdinal, kGaussian}) {
    const auto ref = testing::ref_features(f);
    const RatingStore s = random_store(rng, 3, 3, 0.6);
    const JointModelParams j = random_joint(rng, s, 2, 2, f, 0.5);
    testing::JointLevels levels;
    for (const auto& t : s.triples()) levels[{t.user, t.item}] = t.level;
    for (std::uint64_t m = 0; m < 64; m += 5) {
      const auto hu = hard(m, 0, 6);
      const auto hi = hard(m * 7 + 3, 0, 6);
      double want = 0;
      for (int u = 0; u < 3; ++u) {
        Ratings row(s.by_user(u).begin(), s.by_user(u).end());
        want += testing::ref_negative_energy(j.user_side, ref, row, {int(hu[2 * u]), int(hu[2 * u + 1])});
      }
      for (int i = 0; i < 3; ++i) {
        Ratings col(s.by_item(i).begin(), s.by_item(i).end());
        want += testing::ref_negative_energy(j.item_side, ref, col, {int(hi[2 * i]), int(hi[2 * i + 1])});
        for (const Entry& e : col) want -= ref.base(e.level);
      }
      EXPECT_NEAR(joint_negative_energy(j, f, s, hu, hi), want, 1e-12);
    }
  }
}

TEST(JointMeanField, ZeroItemSideReducesToUserModel) {
  std::mt19937_64 rng(74);
  const RatingStore s = random_store(rng, 5, 6, 0.5);
  JointModelParams j{testing::random_params(rng, 6, 3, kOrdinal, 0.5, 0.5), BmParams::zeros(5, 2, kOrdinal, PairSet(5))};
  std::fill(j.item_side.observed.begin(), j.item_side.observed.end(), 1);
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 6; ++i) {
      if (s.level(u, i)) continue;
      const auto joint = joint_meanfield_energies(j, kOrdinal, s, u, i);
      const auto user = meanfield_energies(j.user_side, kOrdinal, s.by_user(u), i);
      EXPECT_EQ(joint, user);
      EXPECT_EQ(predict_joint(j, kOrdinal, s, u, i).per_level, predict_meanfield(j.user_side, kOrdinal, s.by_user(u), i).per_level);
    }
  }
}

TEST(JointMeanField, ZeroParametersGiveFlatEnergies) {
  std::mt19937_64 rng(75);
  const RatingStore s = random_store(rng, 3, 4, 0.5);
  const JointModelParams j{BmParams::zeros(4, 2, kOrdinal, PairSet(4)), BmParams::zeros(3, 2, kOrdinal, PairSet(3))};
  for (int u = 0; u < 3; ++u) {
    for (int i = 0; i < 4; ++i) {
      for (double e : joint_meanfield_energies(j, kOrdinal, s, u, i)) EXPECT_EQ(e, 0.0);
    }
  }
}

TEST(JointMeanField, MatchesDirectFormula) {
  std::mt19937_64 rng(76);
  for (const FeatureScheme& f : {kOrdinal, kGaussian}) {
    const auto ref = testing::ref_features(f);
    const RatingStore s = random_store(rng, 4, 5, 0.5);
    const JointModelParams j = random_joint(rng, s, 3, 2, f, 0.5);
    for (int u = 0; u < 4; ++u) {
      for (int i = 0; i < 5; ++i) {
        if (s.level(u, i)) continue;
        const Ratings row(s.by_user(u).begin(), s.by_user(u).end());
        const Ratings col(s.by_item(i).begin(), s.by_item(i).end());
        const auto qu = testing::ref_hidden_posterior(j.user_side, ref, row);
        const auto qi = testing::ref_hidden_posterior(j.item_side, ref, col);
        const auto got = joint_meanfield_energies(j, f, s, u, i);
        for (int lvl = 1; lvl <= 5; ++lvl) {
          double v = ref.base(lvl);
          auto side = [&](const BmParams& p, int member, const std::vector<double>& q, const Ratings& co) {
            for (int a = 0; a < ref.unary_size(); ++a) {
              v += p.beta_at(member, a) * ref.unary(a, lvl);
              for (int k = 0; k < p.hidden; ++k) v += q[k] * p.gamma_at(member, k, a) * ref.unary(a, lvl);
            }
            for (const Entry& e : co) {
              if (auto m = p.pairs.find(member, e.index)) v += p.lambda[*m] * ref.pair(lvl, e.level);
            }
          };
          side(j.user_side, i, qu, row);
          side(j.item_side, u, qi, col);
          EXPECT_NEAR(got[lvl - 1], -v, 1e-12);
        }
      }
    }
  }
}

TEST(JointMeanField, ArgminMostlyMatchesEnumeratedPosterior) {
  std::mt19937_64 rng(77);
  const auto ref = testing::ref_features(kOrdinal);
  int agree = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    // 3 x 3 grid with (0, 0) held out.
    std::vector<RatingTriple> tr;
    std::uniform_int_distribution<int> level(1, 5);
    for (int u = 0; u < 3; ++u) {
      for (int i = 0; i < 3; ++i) {
        if (u != 0 || i != 0) tr.push_back({u, i, level(rng)});
      }
    }
    const RatingStore s = testing::store_from(tr, 3, 3);
    const JointModelParams j = random_joint(rng, s, 1, 1, kOrdinal, 0.1);
    testing::JointLevels levels;
    for (const auto& x : tr) levels[{x.user, x.item}] = x.level;
    std::vector<double> logp(5);
    for (int lvl = 1; lvl <= 5; ++lvl) {
      levels[{0, 0}] = lvl;
      logp[lvl - 1] = testing::ref_joint_log_weight(j, ref, levels, 3, 3);
    }
    const auto e = joint_meanfield_energies(j, kOrdinal, s, 0, 0);
    agree += std::min_element(e.begin(), e.end()) - e.begin() == std::max_element(logp.begin(), logp.end()) - logp.begin();
  }
  EXPECT_GE(agree, 40);
}

TEST(JointMeanField, ColdStarts) {
  const RatingStore s = testing::store_from({{0, 0, 3}, {0, 1, 4}, {1, 1, 2}}, 3, 3);
  const JointModelParams j{BmParams::zeros(3, 1, kOrdinal, PairSet(3)), BmParams::zeros(3, 1, kOrdinal, PairSet(3))};
  EXPECT_EQ(error_of([&] { joint_meanfield_energies(j, kOrdinal, s, 2, 0); }), ErrorCode::kColdStart);
  EXPECT_EQ(error_of([&] { joint_meanfield_energies(j, kOrdinal, s, 1, 2); }), ErrorCode::kColdStart);
}

TEST(StructuredPl, MatchesEnumeration) {
  std::mt19937_64 rng(78);
  for (const FeatureScheme& f : {kOrdinal, kGaussian}) {
    const auto ref = testing::ref_features(f);
    for (int trial = 0; trial < 3; ++trial) {
      const RatingStore s = random_store(rng, 2, 3, 0.7);
      const JointModelParams j = random_joint(rng, s, 2, 1, f, 0.5);
      const double got = structured_pl_exact(j, f, s);
      const double want = testing::ref_structured_pl(j, ref, s);
      EXPECT_NEAR(got, want, 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

JointTrainConfig toy_config() {
  JointTrainConfig c;
  c.base.hidden_units = 2;
  c.base.learning_rate = 1e-3;
  c.base.block_size = 2;
  c.base.seed = 5;
  c.item_hidden = 2;
  c.alternations = 1;
  return c;
}

TEST(AlternatingTrain, DisabledItemSideReducesBitExactly) {
  std::mt19937_64 rng(79);
  const RatingStore s = random_store(rng, 12, 8, 0.4);
  const NeighborGraph items = build_topk(s, Axis::kItem, 3, 3);
  const NeighborGraph users = build_topk(s, Axis::kUser, 3, 3);
  for (TrainMethod m : {TrainMethod::kCd, TrainMethod::kPl}) {
    JointTrainConfig c = toy_config();
    c.base.method = m;
    c.base.learning_rate = 0.1;
    c.alternations = 3;
    c.item_side = false;
    c.item_hidden = 0;
    TrainConfig plain = c.base;
    plain.max_epochs = 3;
    const auto joint = alternating_train(c, s, kOrdinal, items, users);
    const auto user = sgd_train(plain, s, kOrdinal, items);
    EXPECT_EQ(joint.params.user_side, user.params);
    for (int u = 0; u < s.n_users(); ++u) {
      for (int i = 0; i < s.n_items(); ++i) {
        if (s.level(u, i)) continue;
        EXPECT_EQ(predict_joint(joint.params, kOrdinal, s, u, i).per_level,
                  predict_meanfield(user.params, kOrdinal, s.by_user(u), i).per_level);
      }
    }
  }
}

TEST(AlternatingTrain, StructuredPlNonDecreasingAtSmallRate) {
  const RatingStore s = testing::store_from({{0, 0, 5}, {0, 1, 4}, {0, 2, 1}, {1, 0, 4}, {1, 1, 5}, {1, 3, 2},
                                             {2, 1, 4}, {2, 2, 2}, {2, 3, 1}, {3, 0, 5}, {3, 2, 1}, {3, 3, 2}},
                                            4, 4);
  JointTrainConfig c = toy_config();
  const NeighborGraph items = empty_graph(Axis::kItem, 4);
  const NeighborGraph users = empty_graph(Axis::kUser, 4);
  JointModelParams j = alternating_train(c, s, kOrdinal, items, users).params;
  std::vector<double> trace = {structured_pl_exact(j, kOrdinal, s)};
  continue_alternating(c, s, kOrdinal, j, 1, 5,
                       [&](int, const JointModelParams& p) { trace.push_back(structured_pl_exact(p, kOrdinal, s)); });
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_GE(trace[k], trace[k - 1]) << "alternation " << k;
}

TEST(AlternatingTrain, FixedSeedIsReproducible) {
  std::mt19937_64 rng(80);
  const RatingStore s = random_store(rng, 10, 6, 0.5);
  JointTrainConfig c = toy_config();
  c.alternations = 2;
  const NeighborGraph items = build_topk(s, Axis::kItem, 3, 3);
  const NeighborGraph users = build_topk(s, Axis::kUser, 3, 3);
  EXPECT_EQ(alternating_train(c, s, kOrdinal, items, users).params,
            alternating_train(c, s, kOrdinal, items, users).params);
}

TEST(AlternatingTrain, RejectsMissingItemHidden) {
  const RatingStore s = testing::store_from({{0, 0, 3}, {0, 1, 4}}, 1, 2);
  JointTrainConfig c = toy_config();
  c.item_hidden = 0;
  EXPECT_EQ(error_of([&] {
              alternating_train(c, s, kOrdinal, empty_graph(Axis::kItem, 2), empty_graph(Axis::kUser, 1));
            }),
            ErrorCode::kUsage);
}

}  // namespace
}  // namespace obm
