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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace obm {

/// Mean absolute error. Throws kShape on length mismatch and kEmptyTest when
/// there is nothing to score.
double mae(std::span<const double> predicted, std::span<const double> truth);
double mae(std::span<const double> predicted, std::span<const int> truth);

struct PrecisionRecall {
  double precision = 0.0;
  /// Absent when the relevant set is empty.
  std::optional<double> recall;
};

/// `relevant` need not be sorted. Precision divides by min(N, list length).
PrecisionRecall precision_recall_at_n(std::span<const std::int32_t> recommended,
                                      std::span<const std::int32_t> relevant, int n);

struct RankingUtilityConfig {
  double half_life = 5.0;

  void validate() const;
};

/// Utility of one list: sum over test items found at 1-based position p of
/// 2^{-(p-1)/(half_life-1)}.
double list_utility(std::span<const std::int32_t> recommended, std::span<const std::int32_t> test,
                    double half_life);

/// Best achievable list utility with `test_size` items on top.
double max_list_utility(std::size_t test_size, double half_life);

/// 100 * sum_u utility_u / sum_u max_u; users with empty test sets are skipped.
/// Returns 0 when every test set is empty.
double ranking_utility(const std::vector<std::vector<std::int32_t>>& recommendations,
                       const std::vector<std::vector<std::int32_t>>& tests, const RankingUtilityConfig& config = {});

/// Precision, recall and utility averaged over users with lists cut at N.
struct CurvePoint {
  int n = 0;
  double precision = 0.0;
  double recall = 0.0;
  double utility = 0.0;
};

std::vector<CurvePoint> ranking_curve(const std::vector<std::vector<std::int32_t>>& recommendations,
                                      const std::vector<std::vector<std::int32_t>>& tests,
                                      std::span<const int> cutoffs, const RankingUtilityConfig& config = {});

/// Writes "n,precision,recall,utility" rows.
void write_curve_csv(std::span<const CurvePoint> curve, std::ostream& out);

/// Ordered "metric=value" lines.
struct MetricsReport {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string key, double value);
  void add(std::string key, std::string value);
  void write(std::ostream& out) const;
};

}  // namespace obm
