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

#include "obm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "obm/error.hpp"

namespace obm {

namespace {

template <class T>
double mae_impl(std::span<const double> predicted, std::span<const T> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::kShape, "prediction and truth lengths differ");
  if (predicted.empty()) throw Error(ErrorCode::kEmptyTest, "no predictions to score");
  double total = 0.0;
  for (std::size_t j = 0; j < predicted.size(); ++j) total += std::abs(predicted[j] - static_cast<double>(truth[j]));
  return total / static_cast<double>(predicted.size());
}

double discount(std::size_t position, double half_life) {
  return std::exp2(-static_cast<double>(position - 1) / (half_life - 1.0));
}

std::span<const std::int32_t> head(const std::vector<std::int32_t>& list, int n) {
  return {list.data(), std::min(list.size(), static_cast<std::size_t>(n))};
}

}  // namespace

double mae(std::span<const double> predicted, std::span<const double> truth) { return mae_impl(predicted, truth); }
double mae(std::span<const double> predicted, std::span<const int> truth) { return mae_impl(predicted, truth); }

PrecisionRecall precision_recall_at_n(std::span<const std::int32_t> recommended,
                                      std::span<const std::int32_t> relevant, int n) {
  if (n < 1) throw Error(ErrorCode::kUsage, "N must be at least 1");
  const std::unordered_set<std::int32_t> rel(relevant.begin(), relevant.end());
  const std::size_t top = std::min(recommended.size(), static_cast<std::size_t>(n));
  std::size_t hits = 0;
  for (std::size_t k = 0; k < top; ++k) hits += rel.count(recommended[k]);
  PrecisionRecall pr;
  pr.precision = top == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(top);
  if (!rel.empty()) pr.recall = static_cast<double>(hits) / static_cast<double>(rel.size());
  return pr;
}

void RankingUtilityConfig::validate() const {
  if (!(half_life > 1.0)) throw Error(ErrorCode::kUsage, "half_life must exceed 1");
}

double list_utility(std::span<const std::int32_t> recommended, std::span<const std::int32_t> test,
                    double half_life) {
  const std::unordered_set<std::int32_t> t(test.begin(), test.end());
  double u = 0.0;
  for (std::size_t p = 0; p < recommended.size(); ++p) {
    if (t.count(recommended[p]) != 0) u += discount(p + 1, half_life);
  }
  return u;
}

double max_list_utility(std::size_t test_size, double half_life) {
  double u = 0.0;
  for (std::size_t p = 1; p <= test_size; ++p) u += discount(p, half_life);
  return u;
}

double ranking_utility(const std::vector<std::vector<std::int32_t>>& recommendations,
                       const std::vector<std::vector<std::int32_t>>& tests, const RankingUtilityConfig& config) {
  config.validate();
  if (recommendations.size() != tests.size()) throw Error(ErrorCode::kShape, "one test set per user is required");
  double got = 0.0;
  double best = 0.0;
  for (std::size_t u = 0; u < tests.size(); ++u) {
    if (tests[u].empty()) continue;
    got += list_utility(recommendations[u], tests[u], config.half_life);
    const std::unordered_set<std::int32_t> distinct(tests[u].begin(), tests[u].end());
    best += max_list_utility(distinct.size(), config.half_life);
  }
  return best > 0.0 ? 100.0 * got / best : 0.0;
}

std::vector<CurvePoint> ranking_curve(const std::vector<std::vector<std::int32_t>>& recommendations,
                                      const std::vector<std::vector<std::int32_t>>& tests,
                                      std::span<const int> cutoffs, const RankingUtilityConfig& config) {
  config.validate();
  if (recommendations.size() != tests.size()) throw Error(ErrorCode::kShape, "one test set per user is required");
  std::vector<CurvePoint> curve;
  for (int n : cutoffs) {
    CurvePoint point;
    point.n = n;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t users = 0;
    std::vector<std::vector<std::int32_t>> cut(recommendations.size());
    for (std::size_t u = 0; u < tests.size(); ++u) {
      const auto top = head(recommendations[u], n);
      cut[u].assign(top.begin(), top.end());
      const PrecisionRecall pr = precision_recall_at_n(recommendations[u], tests[u], n);
      if (!pr.recall) continue;
      precision += pr.precision;
      recall += *pr.recall;
      ++users;
    }
    if (users > 0) {
      point.precision = precision / static_cast<double>(users);
      point.recall = recall / static_cast<double>(users);
    }
    point.utility = ranking_utility(cut, tests, config);
    curve.push_back(point);
  }
  return curve;
}

void write_curve_csv(std::span<const CurvePoint> curve, std::ostream& out) {
  out << "n,precision,recall,utility\n";
  char buf[128];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", p.n, p.precision, p.recall, p.utility);
    out << buf;
  }
}

void MetricsReport::add(std::string key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  entries.emplace_back(std::move(key), buf);
}

void MetricsReport::add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }

void MetricsReport::write(std::ostream& out) const {
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
}

}  // namespace obm
