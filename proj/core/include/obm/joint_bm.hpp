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
#include <functional>
#include <span>
#include <vector>

#include "obm/corpus.hpp"
#include "obm/features.hpp"
#include "obm/learning.hpp"
#include "obm/neighbors.hpp"
#include "obm/user_bm.hpp"

namespace obm {

/// User-centric side (members are items: alpha, beta, gamma, lambda) and
/// item-centric side (members are users: theta, eta, nu, omega).
struct JointModelParams {
  UserModelParams user_side;
  ItemModelParams item_side;

  bool operator==(const JointModelParams&) const = default;
};

/// Zero item side matching a store; omega pairs come from `user_graph`.
ItemModelParams zero_item_side(const RatingStore& store, int item_hidden, const FeatureScheme& scheme,
                               const NeighborGraph& user_graph);

/// Soft hidden posteriors of every user (M x d) and every item (K x d'),
/// row-major. Entities without ratings get logistic(bias).
struct JointPosteriors {
  int user_hidden = 0;
  int item_hidden = 0;
  std::vector<double> users;
  std::vector<double> items;

  std::span<const double> user(std::int32_t u) const;
  std::span<const double> item(std::int32_t i) const;
};

JointPosteriors compute_joint_posteriors(const JointModelParams& joint, const FeatureScheme& scheme,
                                         const RatingStore& store);

/// Sum of user-side negative energies over all users plus item-side negative
/// energies over all items. Unary features count once per side; the Gaussian
/// base measure once per rating. Hidden vectors are row-major M x d and K x d'.
double joint_negative_energy(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store,
                             std::span<const double> user_hidden, std::span<const double> item_hidden);

/// Log-potential over the n candidate levels of rating (entity, member) that
/// one side contributes when the opposite entity's hidden layer is clamped to
/// `clamped_hidden`. `side` is indexed by `member`; `co_ratings` lists the
/// other ratings of the opposite entity (member, level), used for pair terms.
/// Excludes the Gaussian base measure.
std::vector<double> side_message(const BmParams& side, const FeatureScheme& scheme, std::int32_t member,
                                 std::span<const double> clamped_hidden, std::span<const Entry> co_ratings);

/// Mean-field energy E_Q(r_uj = s) for s = 1..n. Throws kColdStart when u or
/// j has no training ratings.
std::vector<double> joint_meanfield_energies(const JointModelParams& joint, const FeatureScheme& scheme,
                                             const RatingStore& store, std::int32_t user, std::int32_t item,
                                             const JointPosteriors* cache = nullptr);

double joint_meanfield_energy(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store,
                              std::int32_t user, std::int32_t item, int level);

struct JointTrainConfig {
  TrainConfig base;
  int item_hidden = 20;
  int alternations = 5;
  int epochs_per_phase = 1;
  /// When false the item side stays at zero and is never updated.
  bool item_side = true;
};

struct JointTrainResult {
  JointModelParams params;
  std::vector<EpochReport> log;
};

using JointValidator = std::function<double(const JointModelParams&)>;

/// Alternates: clamp item posteriors and update the user side, then clamp
/// user posteriors and update the item side. `item_graph` gives lambda pairs,
/// `user_graph` gives omega pairs (pass an empty graph to disable either).
JointTrainResult alternating_train(const JointTrainConfig& config, const RatingStore& store,
                                   const FeatureScheme& scheme, const NeighborGraph& item_graph,
                                   const NeighborGraph& user_graph, const JointValidator& validator = {});

/// Runs the alternation loop from given parameters; `on_alternation` is called
/// after each full alternation with its 1-based index.
void continue_alternating(const JointTrainConfig& config, const RatingStore& store, const FeatureScheme& scheme,
                          JointModelParams& joint, int first_alternation, int alternations,
                          const std::function<void(int, const JointModelParams&)>& on_alternation = {});

/// Structured pseudo-likelihood 1/2 (sum_u log P(r_u | rest) + sum_i log P(r_i | rest))
/// with every hidden unit summed out exactly and whole rows/columns enumerated.
/// For toy instances only; throws kEnumerationTooLarge past 8 ratings per row.
double structured_pl_exact(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store);

}  // namespace obm
