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

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "obm/features.hpp"
#include "obm/user_bm.hpp"

namespace obm::detail {

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_sum_exp(std::span<const double> values);

/// In-place softmax of log-potentials; returns the log normalizer.
double normalize_log(std::span<double> values);

/// Index of the largest entry, lowest index on ties.
int argmax(std::span<const double> values);

/// Draws a 0-based index from a normalized distribution.
int sample_index(std::span<const double> probs, Rng& rng);

/// Tables of a single member (item for the user-centric side) that do not
/// depend on the observed data: unary log-potential per level and the hidden
/// projection sum_a gamma_{k a} f_a(s) per (k, level).
struct MemberTables {
  std::vector<double> unary;  // n
  std::vector<double> proj;   // d x n

  double projection(int k, int s, int n) const {
    return proj[static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(s - 1)];
  }
};

MemberTables member_tables(const BmParams& params, const FeatureScheme& scheme, std::int32_t member);

/// Pair potential sum_b lambda_pb f_b(s, t).
inline double pair_potential(const BmParams& params, const FeatureScheme& scheme, std::int32_t pair, int s,
                             int t) {
  return params.lambda[static_cast<std::size_t>(pair)] * scheme.pair(s, t);
}

/// Everything about one entity's rated members that inference and learning
/// need: per-position unary and projection tables (offsets folded in) and the
/// neighbour pairs that fall inside the rated set.
class LocalModel {
 public:
  struct LocalLink {
    std::int32_t position = 0;  // other rated position
    std::int32_t pair = 0;      // index into params.lambda
  };

  LocalModel(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

  std::size_t size() const noexcept { return members_.size(); }
  int levels() const noexcept { return n_; }
  int hidden() const noexcept { return d_; }
  std::int32_t member(std::size_t p) const { return members_[p]; }
  int observed_level(std::size_t p) const { return observed_[p]; }
  const std::vector<int>& observed_levels() const noexcept { return observed_; }

  /// Unary log-potential: beta.f(s) + base(s) + offset.
  double unary(std::size_t p, int s) const {
    return unary_[p * static_cast<std::size_t>(n_) + static_cast<std::size_t>(s - 1)];
  }
  double projection(std::size_t p, int k, int s) const {
    return proj_[(p * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(n_) +
                 static_cast<std::size_t>(s - 1)];
  }
  std::span<const LocalLink> links(std::size_t p) const {
    return {links_.data() + link_offsets_[p], link_offsets_[p + 1] - link_offsets_[p]};
  }
  /// Unordered in-set pairs as (p, q, pair) with p < q.
  struct LocalPair {
    std::int32_t p = 0;
    std::int32_t q = 0;
    std::int32_t pair = 0;
  };
  const std::vector<LocalPair>& local_pairs() const noexcept { return pairs_; }

  double pair_potential(std::int32_t pair, int s, int t) const {
    return params_->lambda[static_cast<std::size_t>(pair)] * scheme_->pair(s, t);
  }

  /// alpha_k + sum_p projection(p, k, levels[p]).
  std::vector<double> activation(std::span<const int> levels) const;

  /// Log-potentials of position p over its n levels given the other levels
  /// and a (possibly soft) hidden vector.
  void conditional_logits(std::size_t p, std::span<const int> levels, std::span<const double> hidden,
                          std::span<double> out) const;

  const BmParams& params() const noexcept { return *params_; }
  const FeatureScheme& scheme() const noexcept { return *scheme_; }

 private:
  const BmParams* params_;
  const FeatureScheme* scheme_;
  int n_ = 0;
  int d_ = 0;
  std::vector<std::int32_t> members_;
  std::vector<int> observed_;
  std::vector<double> unary_;
  std::vector<double> proj_;
  std::vector<std::size_t> link_offsets_;
  std::vector<LocalLink> links_;
  std::vector<LocalPair> pairs_;
};

/// One Gibbs sweep over a prepared local model; `scratch` is reused storage.
void gibbs_sweep_local(const LocalModel& local, GibbsState& state, Rng& rng, std::vector<double>& scratch);

}  // namespace obm::detail
