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
#include <string_view>
#include <vector>

#include "obm/corpus.hpp"
#include "obm/features.hpp"
#include "obm/joint_bm.hpp"
#include "obm/neighbors.hpp"
#include "obm/user_bm.hpp"

namespace obm {

struct Prediction {
  int level = 0;              // most probable level, lowest on ties
  double confidence = 0.0;    // its probability
  double expected_value = 0;  // on the label scale
  std::vector<double> per_level;
};

/// Which number an evaluation reads off a Prediction.
enum class ReadOut { kExpected, kMap };

std::string_view read_out_name(ReadOut r) noexcept;
ReadOut parse_read_out(std::string_view name);
double read_value(const Prediction& p, ReadOut r, const RatingScale& scale);

/// Builds a Prediction from a normalized distribution over levels.
Prediction prediction_from(std::vector<double> per_level, const RatingScale& scale);

/// Per-user state shared across many target items: the hidden posterior and
/// the evidence. Entries for the target item itself are ignored.
class UserPredictor {
 public:
  /// Throws kColdStart for an empty evidence set.
  UserPredictor(const UserModelParams& params, const FeatureScheme& scheme, std::span<const Entry> ratings);

  /// Mean-field energies E_Q(r_j = s), s = 1..n.
  std::vector<double> meanfield_energies(std::int32_t item) const;

  /// Q(r_j) from the mean-field energies. For the Gaussian scheme the
  /// expected value is the reconstruction mean mapped back to labels.
  Prediction meanfield(std::int32_t item) const;

  /// P(r_j | r) with the hidden layer summed out exactly.
  Prediction exact(std::int32_t item) const;

  /// Expected mean-field energy sum_s Q(s) E_Q(s); lower is better.
  double ranking_score(std::int32_t item) const;

  /// Gaussian reconstruction mean of member `item` in normalized units.
  double gaussian_mean(std::int32_t item) const;

  std::span<const double> hidden_probs() const noexcept { return hidden_; }

 private:
  void check_item(std::int32_t item) const;
  std::span<const Entry> evidence_without(std::int32_t item, std::vector<Entry>& scratch) const;

  const UserModelParams* params_;
  const FeatureScheme* scheme_;
  std::span<const Entry> ratings_;
  std::vector<double> hidden_;
};

Prediction predict_meanfield(const UserModelParams& params, const FeatureScheme& scheme,
                             std::span<const Entry> ratings, std::int32_t item);
Prediction predict_map_exact(const UserModelParams& params, const FeatureScheme& scheme,
                             std::span<const Entry> ratings, std::int32_t item);
std::vector<double> meanfield_energies(const UserModelParams& params, const FeatureScheme& scheme,
                                       std::span<const Entry> ratings, std::int32_t item);

/// Joint-model prediction from exp(-E_Q) of the joint mean-field energy.
Prediction predict_joint(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store,
                         std::int32_t user, std::int32_t item, const JointPosteriors* cache = nullptr);

/// Items rated by the user's `n_similar` strongest neighbours, minus the
/// user's own training items; ascending ids.
std::vector<std::int32_t> candidate_items(const RatingStore& store, const NeighborGraph& user_graph,
                                          std::int32_t user, int n_similar);

struct RankedItem {
  std::int32_t item = 0;
  double score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

using RankedList = std::vector<RankedItem>;

/// Sorts by score ascending (descending when `invert`), ties to the lower id.
void sort_ranked(RankedList& list, bool invert = false);

/// Scores every candidate by its expected mean-field energy and sorts.
RankedList rank_items(const UserModelParams& params, const FeatureScheme& scheme, std::span<const Entry> ratings,
                      std::span<const std::int32_t> candidates, bool invert = false);

}  // namespace obm
