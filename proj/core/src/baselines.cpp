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

#include "obm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "obm/error.hpp"

namespace obm {

std::span<const double> SvdFactors::user(std::int32_t u) const {
  return {user_factors.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(rank),
          static_cast<std::size_t>(rank)};
}

std::span<const double> SvdFactors::item(std::int32_t i) const {
  return {item_factors.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(rank),
          static_cast<std::size_t>(rank)};
}

SvdFactors svd_train(const RatingStore& store, const SvdConfig& config) {
  if (config.rank < 1) throw Error(ErrorCode::kUsage, "svd rank must be at least 1");
  if (config.epochs < 0 || !(config.learning_rate >= 0.0) || !(config.l2 >= 0.0)) {
    throw Error(ErrorCode::kUsage, "svd hyperparameters must be non-negative");
  }
  if (store.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot train on an empty store");
  const RatingScale& scale = store.scale();
  SvdFactors f;
  f.rank = config.rank;
  f.n_users = store.n_users();
  f.n_items = store.n_items();
  f.min_label = scale.value(1);
  f.max_label = scale.value(scale.n_levels());
  if (f.min_label > f.max_label) std::swap(f.min_label, f.max_label);

  double sum = 0.0;
  for (const auto& t : store.triples()) sum += scale.value(t.level);
  f.global_mean = sum / static_cast<double>(store.size());

  const auto r = static_cast<std::size_t>(config.rank);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_sigma);
  f.user_factors.resize(static_cast<std::size_t>(f.n_users) * r);
  f.item_factors.resize(static_cast<std::size_t>(f.n_items) * r);
  for (double& v : f.user_factors) v = normal(rng);
  for (double& v : f.item_factors) v = normal(rng);
  f.user_seen.assign(static_cast<std::size_t>(f.n_users), 0);
  f.item_seen.assign(static_cast<std::size_t>(f.n_items), 0);
  for (const auto& t : store.triples()) {
    f.user_seen[static_cast<std::size_t>(t.user)] = 1;
    f.item_seen[static_cast<std::size_t>(t.item)] = 1;
  }

  const auto& triples = store.triples();
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double lr = config.learning_rate;
  const double l2 = config.l2;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const RatingTriple& t = triples[idx];
      double* p = f.user_factors.data() + static_cast<std::size_t>(t.user) * r;
      double* q = f.item_factors.data() + static_cast<std::size_t>(t.item) * r;
      double dot = 0.0;
      for (std::size_t k = 0; k < r; ++k) dot += p[k] * q[k];
      const double err = scale.value(t.level) - f.global_mean - dot;
      for (std::size_t k = 0; k < r; ++k) {
        const double pk = p[k];
        const double qk = q[k];
        p[k] += lr * (err * qk - l2 * pk);
        q[k] += lr * (err * pk - l2 * qk);
      }
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(f.user_factors.begin(), f.user_factors.end(), finite) ||
        !std::all_of(f.item_factors.begin(), f.item_factors.end(), finite)) {
      throw Error(ErrorCode::kDivergence, "svd factors diverged during epoch " + std::to_string(epoch + 1));
    }
  }
  return f;
}

double svd_objective(const SvdFactors& factors, const RatingStore& store, double l2) {
  double total = 0.0;
  for (const auto& t : store.triples()) {
    const auto p = factors.user(t.user);
    const auto q = factors.item(t.item);
    double dot = 0.0;
    double norms = 0.0;
    for (int k = 0; k < factors.rank; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      dot += p[kk] * q[kk];
      norms += p[kk] * p[kk] + q[kk] * q[kk];
    }
    const double err = store.scale().value(t.level) - factors.global_mean - dot;
    total += err * err + l2 * norms;
  }
  return total;
}

double svd_score(const SvdFactors& factors, std::int32_t user, std::int32_t item) {
  if (user < 0 || user >= factors.n_users || factors.user_seen[static_cast<std::size_t>(user)] == 0) {
    throw Error(ErrorCode::kColdStart, "user " + std::to_string(user) + " has no training ratings");
  }
  if (item < 0 || item >= factors.n_items || factors.item_seen[static_cast<std::size_t>(item)] == 0) {
    throw Error(ErrorCode::kColdStart, "item " + std::to_string(item) + " has no training ratings");
  }
  const auto p = factors.user(user);
  const auto q = factors.item(item);
  double dot = 0.0;
  for (int k = 0; k < factors.rank; ++k) dot += p[static_cast<std::size_t>(k)] * q[static_cast<std::size_t>(k)];
  return factors.global_mean + dot;
}

double svd_predict(const SvdFactors& factors, std::int32_t user, std::int32_t item) {
  return std::clamp(svd_score(factors, user, item), factors.min_label, factors.max_label);
}

RankedList popularity_rank(const RatingStore& store, const NeighborGraph& user_graph, std::int32_t user,
                           std::span<const std::int32_t> candidates, int n_similar) {
  if (user_graph.axis != Axis::kUser) throw Error(ErrorCode::kUsage, "popularity ranking needs a user graph");
  if (user < 0 || user >= store.n_users()) throw Error(ErrorCode::kIndex, "user outside the store");
  std::vector<std::int32_t> counts(static_cast<std::size_t>(store.n_items()), 0);
  const auto neighbours = user_graph.neighbors(user);
  const std::size_t take = std::min(neighbours.size(), static_cast<std::size_t>(std::max(n_similar, 0)));
  for (std::size_t k = 0; k < take; ++k) {
    for (const Entry& e : store.by_user(neighbours[k].id)) ++counts[static_cast<std::size_t>(e.index)];
  }
  RankedList list;
  list.reserve(candidates.size());
  for (std::int32_t item : candidates) {
    if (item < 0 || item >= store.n_items()) throw Error(ErrorCode::kIndex, "candidate outside the store");
    list.push_back(RankedItem{item, static_cast<double>(counts[static_cast<std::size_t>(item)])});
  }
  sort_ranked(list, /*invert=*/true);
  return list;
}

}  // namespace obm
