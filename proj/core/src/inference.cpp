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

#include "obm/inference.hpp"

#include <algorithm>
#include <string>

#include "local_model.hpp"
#include "obm/error.hpp"

namespace obm {

using detail::logistic;
using detail::softplus;

std::string_view read_out_name(ReadOut r) noexcept { return r == ReadOut::kMap ? "map" : "expected"; }

ReadOut parse_read_out(std::string_view name) {
  if (name == "expected") return ReadOut::kExpected;
  if (name == "map") return ReadOut::kMap;
  throw Error(ErrorCode::kUsage, "unknown read-out '" + std::string(name) + "'");
}

double read_value(const Prediction& p, ReadOut r, const RatingScale& scale) {
  return r == ReadOut::kMap ? scale.value(p.level) : p.expected_value;
}

Prediction prediction_from(std::vector<double> per_level, const RatingScale& scale) {
  if (per_level.size() != static_cast<std::size_t>(scale.n_levels())) {
    throw Error(ErrorCode::kShape, "distribution length does not match the scale");
  }
  Prediction p;
  const int best = detail::argmax(per_level);
  p.level = best + 1;
  p.confidence = per_level[static_cast<std::size_t>(best)];
  for (int s = 1; s <= scale.n_levels(); ++s) p.expected_value += per_level[static_cast<std::size_t>(s - 1)] * scale.value(s);
  p.per_level = std::move(per_level);
  return p;
}

namespace {

std::vector<double> softmax_of_negated(const std::vector<double>& energies) {
  std::vector<double> q(energies.size());
  for (std::size_t s = 0; s < q.size(); ++s) q[s] = -energies[s];
  detail::normalize_log(q);
  return q;
}

}  // namespace

UserPredictor::UserPredictor(const UserModelParams& params, const FeatureScheme& scheme,
                             std::span<const Entry> ratings)
    : params_(&params), scheme_(&scheme), ratings_(ratings) {
  if (ratings.empty()) throw Error(ErrorCode::kColdStart, "user has no training ratings");
  hidden_ = hidden_posterior(params, scheme, Evidence{ratings, {}}).probs;
}

void UserPredictor::check_item(std::int32_t item) const {
  if (item < 0 || item >= params_->members || params_->observed[static_cast<std::size_t>(item)] == 0) {
    throw Error(ErrorCode::kColdStart, "item " + std::to_string(item) + " has no training ratings");
  }
}

std::span<const Entry> UserPredictor::evidence_without(std::int32_t item, std::vector<Entry>& scratch) const {
  const auto it = std::lower_bound(ratings_.begin(), ratings_.end(), item,
                                   [](const Entry& e, std::int32_t v) { return e.index < v; });
  if (it == ratings_.end() || it->index != item) return ratings_;
  scratch.assign(ratings_.begin(), it);
  scratch.insert(scratch.end(), it + 1, ratings_.end());
  if (scratch.empty()) throw Error(ErrorCode::kColdStart, "user has no other training ratings");
  return scratch;
}

std::vector<double> UserPredictor::meanfield_energies(std::int32_t item) const {
  check_item(item);
  std::vector<Entry> scratch;
  const auto evidence = evidence_without(item, scratch);
  std::vector<double> recomputed;
  std::span<const double> hidden = hidden_;
  if (evidence.size() != ratings_.size()) {
    recomputed = hidden_posterior(*params_, *scheme_, Evidence{evidence, {}}).probs;
    hidden = recomputed;
  }
  const auto neg = side_message(*params_, *scheme_, item, hidden, evidence);
  std::vector<double> energies(neg.size());
  for (std::size_t s = 0; s < neg.size(); ++s) {
    energies[s] = -(neg[s] + scheme_->base_log_measure(static_cast<int>(s) + 1));
  }
  return energies;
}

double UserPredictor::gaussian_mean(std::int32_t item) const {
  check_item(item);
  if (scheme_->kind() != SchemeKind::kGaussian) throw Error(ErrorCode::kUsage, "not a gaussian model");
  std::vector<Entry> scratch;
  const auto evidence = evidence_without(item, scratch);
  std::vector<double> recomputed;
  std::span<const double> hidden = hidden_;
  if (evidence.size() != ratings_.size()) {
    recomputed = hidden_posterior(*params_, *scheme_, Evidence{evidence, {}}).probs;
    hidden = recomputed;
  }
  const UserModelParams& p = *params_;
  double mu = p.beta_at(item, 0);
  for (int k = 0; k < p.hidden; ++k) mu += p.gamma_at(item, k, 0) * hidden[static_cast<std::size_t>(k)];
  for (const Entry& e : evidence) {
    if (auto pair = p.pairs.find(item, e.index)) {
      mu += p.lambda[static_cast<std::size_t>(*pair)] * scheme_->gaussian_value(e.level);
    }
  }
  return mu;
}

Prediction UserPredictor::meanfield(std::int32_t item) const {
  Prediction p = prediction_from(softmax_of_negated(meanfield_energies(item)), scheme_->scale());
  if (scheme_->kind() == SchemeKind::kGaussian) p.expected_value = scheme_->to_label(gaussian_mean(item));
  return p;
}

Prediction UserPredictor::exact(std::int32_t item) const {
  check_item(item);
  std::vector<Entry> scratch;
  const auto evidence = evidence_without(item, scratch);
  const detail::LocalModel local(*params_, *scheme_, Evidence{evidence, {}});
  const std::vector<double> act = local.activation(local.observed_levels());
  const detail::MemberTables t = detail::member_tables(*params_, *scheme_, item);
  const int n = scheme_->n_levels();
  // Unary plus pair terms come from the message with the hidden layer off.
  const std::vector<double> off(static_cast<std::size_t>(params_->hidden), 0.0);
  std::vector<double> logmass = side_message(*params_, *scheme_, item, off, evidence);
  for (int s = 1; s <= n; ++s) {
    double& v = logmass[static_cast<std::size_t>(s - 1)];
    v += scheme_->base_log_measure(s);
    for (int k = 0; k < params_->hidden; ++k) v += softplus(act[static_cast<std::size_t>(k)] + t.projection(k, s, n));
  }
  detail::normalize_log(logmass);
  return prediction_from(std::move(logmass), scheme_->scale());
}

double UserPredictor::ranking_score(std::int32_t item) const {
  const auto energies = meanfield_energies(item);
  const auto q = softmax_of_negated(energies);
  double score = 0.0;
  for (std::size_t s = 0; s < q.size(); ++s) score += q[s] * energies[s];
  return score;
}

Prediction predict_meanfield(const UserModelParams& params, const FeatureScheme& scheme,
                             std::span<const Entry> ratings, std::int32_t item) {
  return UserPredictor(params, scheme, ratings).meanfield(item);
}

Prediction predict_map_exact(const UserModelParams& params, const FeatureScheme& scheme,
                             std::span<const Entry> ratings, std::int32_t item) {
  return UserPredictor(params, scheme, ratings).exact(item);
}

std::vector<double> meanfield_energies(const UserModelParams& params, const FeatureScheme& scheme,
                                       std::span<const Entry> ratings, std::int32_t item) {
  return UserPredictor(params, scheme, ratings).meanfield_energies(item);
}

Prediction predict_joint(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store,
                         std::int32_t user, std::int32_t item, const JointPosteriors* cache) {
  const auto energies = joint_meanfield_energies(joint, scheme, store, user, item, cache);
  Prediction p = prediction_from(softmax_of_negated(energies), scheme.scale());
  if (scheme.kind() == SchemeKind::kGaussian) {
    // -E_Q(s) + x_s^2/2 is affine in x_s; its slope is the reconstruction mean.
    const int n = scheme.n_levels();
    double xbar = 0.0;
    double ybar = 0.0;
    for (int s = 1; s <= n; ++s) {
      const double x = scheme.gaussian_value(s);
      xbar += x;
      ybar += -energies[static_cast<std::size_t>(s - 1)] + 0.5 * x * x;
    }
    xbar /= n;
    ybar /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (int s = 1; s <= n; ++s) {
      const double x = scheme.gaussian_value(s) - xbar;
      sxy += x * (-energies[static_cast<std::size_t>(s - 1)] + 0.5 * scheme.gaussian_value(s) * scheme.gaussian_value(s) - ybar);
      sxx += x * x;
    }
    p.expected_value = scheme.to_label(sxy / sxx);
  }
  return p;
}

std::vector<std::int32_t> candidate_items(const RatingStore& store, const NeighborGraph& user_graph,
                                          std::int32_t user, int n_similar) {
  if (user_graph.axis != Axis::kUser) throw Error(ErrorCode::kUsage, "candidate generation needs a user graph");
  if (user < 0 || user >= store.n_users()) throw Error(ErrorCode::kIndex, "user outside the store");
  std::vector<std::int32_t> out;
  const auto neighbours = user_graph.neighbors(user);
  const std::size_t take = std::min(neighbours.size(), static_cast<std::size_t>(std::max(n_similar, 0)));
  for (std::size_t k = 0; k < take; ++k) {
    for (const Entry& e : store.by_user(neighbours[k].id)) out.push_back(e.index);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  const auto own = store.by_user(user);
  std::erase_if(out, [&](std::int32_t i) {
    return std::binary_search(own.begin(), own.end(), Entry{i, 0},
                              [](const Entry& a, const Entry& b) { return a.index < b.index; });
  });
  return out;
}

void sort_ranked(RankedList& list, bool invert) {
  std::sort(list.begin(), list.end(), [invert](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return invert ? a.score > b.score : a.score < b.score;
    return a.item < b.item;
  });
}

RankedList rank_items(const UserModelParams& params, const FeatureScheme& scheme, std::span<const Entry> ratings,
                      std::span<const std::int32_t> candidates, bool invert) {
  const UserPredictor predictor(params, scheme, ratings);
  RankedList list;
  list.reserve(candidates.size());
  for (std::int32_t item : candidates) {
    if (item < 0 || item >= params.members || params.observed[static_cast<std::size_t>(item)] == 0) continue;
    list.push_back(RankedItem{item, predictor.ranking_score(item)});
  }
  sort_ranked(list, invert);
  return list;
}

}  // namespace obm
