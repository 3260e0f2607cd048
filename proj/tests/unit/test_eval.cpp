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
#include <sstream>
#include <vector>

#include "expect_error.hpp"
#include "obm/eval.hpp"

namespace obm {
namespace {

using testing::error_of;
using Lists = std::vector<std::vector<std::int32_t>>;

TEST(Mae, Examples) {
  const std::vector<double> same = {1, 2, 3};
  EXPECT_EQ(mae(same, same), 0.0);
  const std::vector<double> p = {3, 5};
  const std::vector<int> t = {4, 4};
  EXPECT_EQ(mae(p, t), 1.0);
}

TEST(Mae, Errors) {
  const std::vector<double> a = {1, 2};
  const std::vector<double> b = {1};
  EXPECT_EQ(error_of([&] { mae(a, b); }), ErrorCode::kShape);
  EXPECT_EQ(error_of([] { mae(std::vector<double>{}, std::vector<double>{}); }), ErrorCode::kEmptyTest);
}

TEST(Mae, MatchesIndependentMeanOfAbs) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> p(1000);
  std::vector<double> t(1000);
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = u(rng);
    t[k] = u(rng);
  }
  // Pairwise summation of |p - t|, divided once.
  std::vector<double> d(p.size());
  std::transform(p.begin(), p.end(), t.begin(), d.begin(), [](double a, double b) { return std::abs(a - b); });
  while (d.size() > 1) {
    std::vector<double> next;
    for (std::size_t k = 0; k + 1 < d.size(); k += 2) next.push_back(d[k] + d[k + 1]);
    if (d.size() % 2) next.push_back(d.back());
    d = std::move(next);
  }
  EXPECT_NEAR(mae(p, t), d[0] / 1000.0, 1e-12);
}

TEST(Mae, TranslationAndPermutationInvariance) {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> p(200);
  std::vector<double> t(200);
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = u(rng);
    t[k] = u(rng);
  }
  const double base = mae(p, t);
  std::vector<double> ps = p;
  std::vector<double> ts = t;
  for (std::size_t k = 0; k < p.size(); ++k) {
    ps[k] += 2.5;
    ts[k] += 2.5;
  }
  EXPECT_NEAR(mae(ps, ts), base, 1e-12);
  std::vector<std::size_t> order(p.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < order.size(); ++k) {
    ps[k] = p[order[k]];
    ts[k] = t[order[k]];
  }
  EXPECT_NEAR(mae(ps, ts), base, 1e-12);
}

TEST(PrecisionRecall, Examples) {
  const std::vector<std::int32_t> rec = {1, 2, 3, 4, 5};
  const auto all = precision_recall_at_n(rec, std::vector<std::int32_t>{5, 4, 3, 2, 1, 9}, 5);
  EXPECT_EQ(all.precision, 1.0);
  const auto none = precision_recall_at_n(rec, std::vector<std::int32_t>{7, 8}, 5);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  const auto some = precision_recall_at_n(rec, std::vector<std::int32_t>{2, 4, 10, 11}, 5);
  EXPECT_DOUBLE_EQ(some.precision, 0.4);
  EXPECT_DOUBLE_EQ(*some.recall, 0.5);
  EXPECT_FALSE(precision_recall_at_n(rec, std::vector<std::int32_t>{}, 5).recall.has_value());
  // Short lists divide by their own length.
  EXPECT_DOUBLE_EQ(precision_recall_at_n(std::vector<std::int32_t>{2, 3}, std::vector<std::int32_t>{2}, 5).precision,
                   0.5);
}

TEST(RankingUtility, TestItemsOnTopGiveHundred) {
  const Lists recs = {{3, 1, 2, 9}, {5, 6, 7}};
  const Lists tests = {{1, 3}, {5}};
  EXPECT_DOUBLE_EQ(ranking_utility(recs, tests), 100.0);
}

TEST(RankingUtility, SingleItemAtPositionFive) {
  const Lists recs = {{10, 11, 12, 13, 7, 14}};
  const Lists tests = {{7}};
  EXPECT_DOUBLE_EQ(list_utility(recs[0], tests[0], 5.0), 0.5);
  EXPECT_DOUBLE_EQ(ranking_utility(recs, tests), 50.0);
}

TEST(RankingUtility, ThreeUserHandComputation) {
  // A: hits at 2 and 5 -> 2^-0.25 + 2^-1 = 1.3408964152537144, max 1 + 2^-0.25.
  // B: hit at 3 -> 2^-0.5 = 0.7071067811865476, max 1.
  // C: no hit, max 1. Total 100 * 2.0480031964402620 / 3.8408964152537144.
  const Lists recs = {{1, 2, 3, 4, 5}, {7, 8, 9}, {1}};
  const Lists tests = {{2, 5}, {9}, {4}};
  EXPECT_NEAR(ranking_utility(recs, tests), 53.3209692483982, 1e-12);
}

TEST(RankingUtility, EmptyTestUsersAreSkipped) {
  const Lists recs = {{1, 2}, {3}};
  const Lists tests = {{1}, {}};
  EXPECT_DOUBLE_EQ(ranking_utility(recs, tests), 100.0);
  EXPECT_EQ(ranking_utility(Lists{{1}}, Lists{{}}), 0.0);
}

TEST(RankingUtility, HalfLifeMustExceedOne) {
  RankingUtilityConfig c;
  c.half_life = 1.0;
  EXPECT_EQ(error_of([&] { c.validate(); }), ErrorCode::kUsage);
}

TEST(RankingUtility, MovingATestItemUpNeverDecreases) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int32_t> list(20);
    for (int k = 0; k < 20; ++k) list[k] = k;
    std::shuffle(list.begin(), list.end(), rng);
    std::vector<std::int32_t> test = {list[3], list[9], list[15]};
    const double before = list_utility(list, test, 5.0);
    const std::size_t from = 9 + static_cast<std::size_t>(trial % 11);
    std::vector<std::int32_t> moved = list;
    std::rotate(moved.begin() + 2, moved.begin() + static_cast<long>(from), moved.begin() + static_cast<long>(from) + 1);
    const bool was_test = std::find(test.begin(), test.end(), list[from]) != test.end();
    if (was_test) EXPECT_GE(list_utility(moved, test, 5.0), before - 1e-15);
  }
}

TEST(RankingUtility, UserOrderDoesNotMatter) {
  const Lists recs = {{1, 2, 3, 4, 5}, {7, 8, 9}, {1}};
  const Lists tests = {{2, 5}, {9}, {4}};
  const Lists recs2 = {{1}, {1, 2, 3, 4, 5}, {7, 8, 9}};
  const Lists tests2 = {{4}, {2, 5}, {9}};
  EXPECT_NEAR(ranking_utility(recs, tests), ranking_utility(recs2, tests2), 1e-12);
}

TEST(RankingCurve, CsvRows) {
  const Lists recs = {{1, 2, 3}, {4, 5, 6}};
  const Lists tests = {{2}, {9}};
  const std::vector<int> cutoffs = {1, 3};
  const auto curve = ranking_curve(recs, tests, cutoffs);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_DOUBLE_EQ(curve[1].precision, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(curve[1].recall, 0.5);
  std::ostringstream out;
  write_curve_csv(curve, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "n,precision,recall,utility");
}

TEST(MetricsReportTest, Lines) {
  MetricsReport r;
  r.add("mae", 0.75);
  r.add("variant", std::string("user"));
  std::ostringstream out;
  r.write(out);
  EXPECT_EQ(out.str(), "mae=0.75\nvariant=user\n");
}

}  // namespace
}  // namespace obm
