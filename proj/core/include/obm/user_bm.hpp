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
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "obm/corpus.hpp"
#include "obm/features.hpp"
#include "obm/neighbors.hpp"

namespace obm {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Unordered member pairs {i, j} (i < j) that carry a correlation weight,
/// plus a per-member adjacency list for fast lookup.
class PairSet {
 public:
  struct Link {
    std::int32_t other = 0;
    std::int32_t pair = 0;

    bool operator==(const Link&) const = default;
  };

  PairSet() = default;
  /// No pairs over n_members members.
  explicit PairSet(std::int32_t n_members);
  /// Union of every neighbour relation in the graph, symmetrized.
  static PairSet from_graph(const NeighborGraph& graph);
  static PairSet from_pairs(std::int32_t n_members, std::vector<std::pair<std::int32_t, std::int32_t>> pairs);

  std::int32_t n_members() const noexcept { return n_members_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const std::vector<std::pair<std::int32_t, std::int32_t>>& pairs() const noexcept { return pairs_; }
  std::span<const Link> links(std::int32_t member) const;
  std::optional<std::int32_t> find(std::int32_t i, std::int32_t j) const;

  bool operator==(const PairSet& other) const { return n_members_ == other.n_members_ && pairs_ == other.pairs_; }

 private:
  void build_links();

  std::int32_t n_members_ = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs_;
  std::vector<std::size_t> offsets_;
  std::vector<Link> links_;
};

/// Parameters of one side of the model. For the user-centric model the
/// members are items: alpha (d), beta (K x A), gamma (K x d x A) and lambda
/// (pairs x B). The item-centric side reuses the layout with users as members
/// (theta, eta, nu, omega).
struct BmParams {
  int hidden = 0;
  int unary = 0;
  int pairwise = 1;
  std::int32_t members = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> lambda;
  PairSet pairs;
  /// 1 for members seen in training; predictions for others are cold starts.
  std::vector<std::uint8_t> observed;

  static BmParams zeros(std::int32_t members, int hidden, const FeatureScheme& scheme, PairSet pairs);

  double& beta_at(std::int32_t i, int a) { return beta[beta_index(i, a)]; }
  double beta_at(std::int32_t i, int a) const { return beta[beta_index(i, a)]; }
  double& gamma_at(std::int32_t i, int k, int a) { return gamma[gamma_index(i, k, a)]; }
  double gamma_at(std::int32_t i, int k, int a) const { return gamma[gamma_index(i, k, a)]; }
  double& lambda_at(std::int32_t p, int b) { return lambda[lambda_index(p, b)]; }
  double lambda_at(std::int32_t p, int b) const { return lambda[lambda_index(p, b)]; }

  std::size_t beta_index(std::int32_t i, int a) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(unary) + static_cast<std::size_t>(a);
  }
  std::size_t gamma_index(std::int32_t i, int k, int a) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden) + static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(unary) +
           static_cast<std::size_t>(a);
  }
  std::size_t lambda_index(std::int32_t p, int b) const {
    return static_cast<std::size_t>(p) * static_cast<std::size_t>(pairwise) + static_cast<std::size_t>(b);
  }

  bool all_finite() const;
  bool operator==(const BmParams&) const = default;
};

using UserModelParams = BmParams;
using ItemModelParams = BmParams;

/// Observed ratings of one entity (a user for the user-centric side) and,
/// optionally, extra log-potentials added to each candidate level of each
/// rating (size ratings.size() * n, row-major). The joint model uses the
/// offsets to inject the clamped opposite side.
struct Evidence {
  std::span<const Entry> ratings;
  std::span<const double> offsets = {};
};

/// P(h_k = 1 | ratings) for k = 1..d.
struct HiddenPosterior {
  std::vector<double> probs;
};

/// -E(h, r) with every unordered neighbour pair counted once. `hidden` may
/// hold soft values in [0, 1].
double negative_energy(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                       std::span<const double> hidden);

HiddenPosterior hidden_posterior(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

/// Distribution of member `item` given the other ratings and a hidden
/// configuration. Entries of `others` that refer to `item` are ignored.
std::vector<double> conditional_rating(const BmParams& params, const FeatureScheme& scheme, std::int32_t item,
                                       const Evidence& others, std::span<const double> hidden);

struct GibbsState {
  std::vector<double> hidden;
  std::vector<int> levels;  // aligned with Evidence::ratings
};

/// Samples every h_k given r, then every rated r_i in order given (r_-i, h).
GibbsState gibbs_sweep(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                       GibbsState state, Rng& rng);

/// Chain start at the observed data with hidden units at zero.
GibbsState data_state(const BmParams& params, const Evidence& evidence);

}  // namespace obm
