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
#include <span>
#include <vector>

#include "obm/corpus.hpp"
#include "obm/inference.hpp"
#include "obm/neighbors.hpp"

namespace obm {

/// Rank-K factor model without bias terms: r ~ global_mean + p_u . q_i.
struct SvdFactors {
  int rank = 0;
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  double global_mean = 0.0;
  double min_label = 1.0;
  double max_label = 5.0;
  std::vector<double> user_factors;  // n_users x rank
  std::vector<double> item_factors;  // n_items x rank
  std::vector<std::uint8_t> user_seen;
  std::vector<std::uint8_t> item_seen;

  std::span<const double> user(std::int32_t u) const;
  std::span<const double> item(std::int32_t i) const;
  bool operator==(const SvdFactors&) const = default;
};

struct SvdConfig {
  int rank = 20;
  double learning_rate = 0.005;
  int epochs = 100;
  double l2 = 0.02;
  double init_sigma = 0.01;
  std::uint64_t seed = 1;
};

/// Plain SGD over the observed ratings in a seeded shuffled order per epoch.
/// Throws kDivergence when a factor becomes non-finite.
SvdFactors svd_train(const RatingStore& store, const SvdConfig& config);

/// Regularized squared error sum (r - mean - p.q)^2 + l2 (|p_u|^2 + |q_i|^2)
/// summed over the observed ratings.
double svd_objective(const SvdFactors& factors, const RatingStore& store, double l2);

/// Unclamped score; throws kColdStart for users or items unseen in training.
double svd_score(const SvdFactors& factors, std::int32_t user, std::int32_t item);

/// Score clamped to the label range of the scale.
double svd_predict(const SvdFactors& factors, std::int32_t user, std::int32_t item);

/// Number of the user's top-`n_similar` neighbours who rated each candidate,
/// highest first, ties to the lower item id.
RankedList popularity_rank(const RatingStore& store, const NeighborGraph& user_graph, std::int32_t user,
                           std::span<const std::int32_t> candidates, int n_similar = 50);

}  // namespace obm
