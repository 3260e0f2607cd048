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

#include "obm/joint_bm.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "local_model.hpp"
#include "obm/error.hpp"

namespace obm {

using detail::logistic;
using detail::member_tables;
using detail::softplus;

namespace {

PairSet pairs_of(const NeighborGraph& graph, std::int32_t members) {
  if (graph.size() == 0) return PairSet(members);
  PairSet pairs = PairSet::from_graph(graph);
  if (pairs.n_members() != members) throw Error(ErrorCode::kShape, "neighbour graph does not match the store");
  return pairs;
}

void mark_observed(BmParams& side, const RatingStore& store, Axis members) {
  for (std::int32_t m = 0; m < side.members; ++m) {
    const bool seen = members == Axis::kItem ? !store.by_item(m).empty() : !store.by_user(m).empty();
    side.observed[static_cast<std::size_t>(m)] = seen ? 1 : 0;
  }
}

void check_sides(const JointModelParams& joint, const RatingStore& store) {
  if (joint.user_side.members != store.n_items() || joint.item_side.members != store.n_users()) {
    throw Error(ErrorCode::kShape, "joint parameters do not match the store");
  }
}

std::span<const double> row(const std::vector<double>& flat, std::int32_t r, int width) {
  return {flat.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(width),
          static_cast<std::size_t>(width)};
}

// Offsets for every entity of one side from the clamped posteriors of the other.
// `own` lists the entities being trained, `other_side` the opposite parameters,
// `other_entries(m)` the ratings of opposite entity m.
template <class OwnRatings, class OtherRatings>
void fill_offsets(std::int32_t entities, OwnRatings own, OtherRatings other_entries, const BmParams& other_side,
                  const FeatureScheme& scheme, const std::vector<double>& other_post,
                  std::vector<std::vector<double>>& offsets) {
  const auto n = static_cast<std::size_t>(scheme.n_levels());
  offsets.resize(static_cast<std::size_t>(entities));
  for (std::int32_t e = 0; e < entities; ++e) {
    const std::span<const Entry> ratings = own(e);
    std::vector<double>& out = offsets[static_cast<std::size_t>(e)];
    out.assign(ratings.size() * n, 0.0);
    for (std::size_t p = 0; p < ratings.size(); ++p) {
      const std::int32_t o = ratings[p].index;
      const auto msg = side_message(other_side, scheme, e, row(other_post, o, other_side.hidden), other_entries(o));
      std::copy(msg.begin(), msg.end(), out.begin() + static_cast<std::ptrdiff_t>(p * n));
    }
  }
}

std::vector<double> posteriors(const BmParams& side, const FeatureScheme& scheme, std::int32_t entities,
                               const std::function<std::span<const Entry>(std::int32_t)>& ratings) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(entities) * static_cast<std::size_t>(side.hidden));
  for (std::int32_t e = 0; e < entities; ++e) {
    const auto post = hidden_posterior(side, scheme, Evidence{ratings(e), {}});
    out.insert(out.end(), post.probs.begin(), post.probs.end());
  }
  return out;
}

TrainConfig item_config(const JointTrainConfig& config) {
  TrainConfig c = config.base;
  c.hidden_units = config.item_hidden;
  // A separate stream so that enabling the item side never perturbs the user side.
  c.seed = config.base.seed ^ 0x6a09e667f3bcc909ull;
  return c;
}

}  // namespace

ItemModelParams zero_item_side(const RatingStore& store, int item_hidden, const FeatureScheme& scheme,
                               const NeighborGraph& user_graph) {
  ItemModelParams side = BmParams::zeros(store.n_users(), item_hidden, scheme, pairs_of(user_graph, store.n_users()));
  mark_observed(side, store, Axis::kUser);
  return side;
}

std::span<const double> JointPosteriors::user(std::int32_t u) const { return row(users, u, user_hidden); }
std::span<const double> JointPosteriors::item(std::int32_t i) const { return row(items, i, item_hidden); }

JointPosteriors compute_joint_posteriors(const JointModelParams& joint, const FeatureScheme& scheme,
                                         const RatingStore& store) {
  check_sides(joint, store);
  JointPosteriors post;
  post.user_hidden = joint.user_side.hidden;
  post.item_hidden = joint.item_side.hidden;
  post.users = posteriors(joint.user_side, scheme, store.n_users(), [&](std::int32_t u) { return store.by_user(u); });
  post.items = posteriors(joint.item_side, scheme, store.n_items(), [&](std::int32_t i) { return store.by_item(i); });
  return post;
}

double joint_negative_energy(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store,
                             std::span<const double> user_hidden, std::span<const double> item_hidden) {
  check_sides(joint, store);
  const auto d = static_cast<std::size_t>(joint.user_side.hidden);
  const auto dp = static_cast<std::size_t>(joint.item_side.hidden);
  if (user_hidden.size() != d * static_cast<std::size_t>(store.n_users()) ||
      item_hidden.size() != dp * static_cast<std::size_t>(store.n_items())) {
    throw Error(ErrorCode::kShape, "hidden configuration does not match the model");
  }
  double total = 0.0;
  for (std::int32_t u = 0; u < store.n_users(); ++u) {
    total += negative_energy(joint.user_side, scheme, Evidence{store.by_user(u), {}},
                             user_hidden.subspan(static_cast<std::size_t>(u) * d, d));
  }
  for (std::int32_t i = 0; i < store.n_items(); ++i) {
    const auto ratings = store.by_item(i);
    total += negative_energy(joint.item_side, scheme, Evidence{ratings, {}},
                             item_hidden.subspan(static_cast<std::size_t>(i) * dp, dp));
    // The item side carried the base measure a second time.
    for (const Entry& e : ratings) total -= scheme.base_log_measure(e.level);
  }
  return total;
}

std::vector<double> side_message(const BmParams& side, const FeatureScheme& scheme, std::int32_t member,
                                 std::span<const double> clamped_hidden, std::span<const Entry> co_ratings) {
  if (clamped_hidden.size() != static_cast<std::size_t>(side.hidden)) {
    throw Error(ErrorCode::kShape, "clamped hidden vector has the wrong length");
  }
  const detail::MemberTables t = member_tables(side, scheme, member);
  const int n = scheme.n_levels();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int s = 1; s <= n; ++s) {
    double v = t.unary[static_cast<std::size_t>(s - 1)] - scheme.base_log_measure(s);
    for (int k = 0; k < side.hidden; ++k) v += clamped_hidden[static_cast<std::size_t>(k)] * t.projection(k, s, n);
    out[static_cast<std::size_t>(s - 1)] = v;
  }
  const auto links = side.pairs.links(member);
  if (links.empty()) return out;
  // Both lists are sorted by member; merge them.
  auto li = links.begin();
  for (const Entry& e : co_ratings) {
    if (e.index == member) continue;
    while (li != links.end() && li->other < e.index) ++li;
    if (li == links.end()) break;
    if (li->other != e.index) continue;
    for (int s = 1; s <= n; ++s) {
      out[static_cast<std::size_t>(s - 1)] += detail::pair_potential(side, scheme, li->pair, s, e.level);
    }
  }
  return out;
}

std::vector<double> joint_meanfield_energies(const JointModelParams& joint, const FeatureScheme& scheme,
                                             const RatingStore& store, std::int32_t user, std::int32_t item,
                                             const JointPosteriors* cache) {
  check_sides(joint, store);
  if (user < 0 || user >= store.n_users() || store.by_user(user).empty()) {
    throw Error(ErrorCode::kColdStart, "user " + std::to_string(user) + " has no training ratings");
  }
  if (item < 0 || item >= store.n_items() || store.by_item(item).empty()) {
    throw Error(ErrorCode::kColdStart, "item " + std::to_string(item) + " has no training ratings");
  }
  std::vector<double> pu;
  std::vector<double> pi;
  std::span<const double> user_post;
  std::span<const double> item_post;
  if (cache != nullptr) {
    user_post = cache->user(user);
    item_post = cache->item(item);
  } else {
    pu = hidden_posterior(joint.user_side, scheme, Evidence{store.by_user(user), {}}).probs;
    pi = hidden_posterior(joint.item_side, scheme, Evidence{store.by_item(item), {}}).probs;
    user_post = pu;
    item_post = pi;
  }
  const auto from_user = side_message(joint.user_side, scheme, item, user_post, store.by_user(user));
  const auto from_item = side_message(joint.item_side, scheme, user, item_post, store.by_item(item));
  std::vector<double> energies(from_user.size());
  for (std::size_t s = 0; s < energies.size(); ++s) {
    const double user_term = from_user[s] + scheme.base_log_measure(static_cast<int>(s) + 1);
    energies[s] = -(user_term + from_item[s]);
  }
  return energies;
}

double joint_meanfield_energy(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store,
                              std::int32_t user, std::int32_t item, int level) {
  if (!scheme.scale().contains(level)) throw Error(ErrorCode::kRange, "level outside the rating scale");
  return joint_meanfield_energies(joint, scheme, store, user, item)[static_cast<std::size_t>(level - 1)];
}

void continue_alternating(const JointTrainConfig& config, const RatingStore& store, const FeatureScheme& scheme,
                          JointModelParams& joint, int first_alternation, int alternations,
                          const std::function<void(int, const JointModelParams&)>& on_alternation) {
  check_sides(joint, store);
  const TrainConfig user_cfg = config.base;
  const TrainConfig item_cfg = item_config(config);
  const int per = config.epochs_per_phase;
  if (per < 1) throw Error(ErrorCode::kUsage, "epochs_per_phase must be positive");

  auto user_ratings = [&](std::int32_t u) { return store.by_user(u); };
  auto item_ratings = [&](std::int32_t i) { return store.by_item(i); };
  std::vector<std::vector<double>> user_offsets;
  std::vector<std::vector<double>> item_offsets;
  TrainingSet user_data = user_training_set(store);
  TrainingSet item_data;
  for (std::int32_t i = 0; i < store.n_items(); ++i) item_data.entities.push_back(Evidence{store.by_item(i), {}});

  for (int a = first_alternation; a < first_alternation + alternations; ++a) {
    if (config.item_side) {
      const auto item_post = posteriors(joint.item_side, scheme, store.n_items(), item_ratings);
      fill_offsets(store.n_users(), user_ratings, item_ratings, joint.item_side, scheme, item_post, user_offsets);
      for (std::int32_t u = 0; u < store.n_users(); ++u) {
        user_data.entities[static_cast<std::size_t>(u)].offsets = user_offsets[static_cast<std::size_t>(u)];
      }
    }
    run_epochs(user_cfg, user_data, scheme, joint.user_side, a * per, per);
    if (config.item_side) {
      const auto user_post = posteriors(joint.user_side, scheme, store.n_users(), user_ratings);
      fill_offsets(store.n_items(), item_ratings, user_ratings, joint.user_side, scheme, user_post, item_offsets);
      for (std::int32_t i = 0; i < store.n_items(); ++i) {
        item_data.entities[static_cast<std::size_t>(i)].offsets = item_offsets[static_cast<std::size_t>(i)];
      }
      run_epochs(item_cfg, item_data, scheme, joint.item_side, a * per, per);
    }
    if (on_alternation) on_alternation(a + 1, joint);
  }
}

JointTrainResult alternating_train(const JointTrainConfig& config, const RatingStore& store,
                                   const FeatureScheme& scheme, const NeighborGraph& item_graph,
                                   const NeighborGraph& user_graph, const JointValidator& validator) {
  config.base.validate();
  if (config.alternations < 1 || config.item_hidden < 0 || (config.item_side && config.item_hidden < 1)) {
    throw Error(ErrorCode::kUsage, "alternations and item_hidden must be positive");
  }
  if (store.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot train on an empty store");

  JointTrainResult result;
  JointModelParams& joint = result.params;
  joint.user_side = init_params(config.base, store.n_items(), config.base.hidden_units, scheme,
                                pairs_of(item_graph, store.n_items()));
  mark_observed(joint.user_side, store, Axis::kItem);
  if (config.item_side) {
    joint.item_side = init_params(item_config(config), store.n_users(), config.item_hidden, scheme,
                                  pairs_of(user_graph, store.n_users()));
    mark_observed(joint.item_side, store, Axis::kUser);
  } else {
    joint.item_side = zero_item_side(store, config.item_hidden, scheme, user_graph);
  }

  JointModelParams best = joint;
  double best_mae = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int a = 0; a < config.alternations; ++a) {
    const auto start = std::chrono::steady_clock::now();
    continue_alternating(config, store, scheme, joint, a, 1);
    EpochReport report;
    report.epoch = a + 1;
    double objective = 0.0;
    std::size_t counted = 0;
    for (std::int32_t u = 0; u < store.n_users(); ++u) {
      const Evidence ev{store.by_user(u), {}};
      if (ev.ratings.empty()) continue;
      objective += config.base.method == TrainMethod::kGaussianPl ? -gaussian_pl_error(joint.user_side, scheme, ev)
                                                                  : pl_objective(joint.user_side, scheme, ev);
      ++counted;
    }
    report.objective = counted > 0 ? objective / static_cast<double>(counted) : 0.0;
    report.val_mae = std::numeric_limits<double>::quiet_NaN();
    if (validator) {
      report.val_mae = validator(joint);
      if (report.val_mae < best_mae) {
        best_mae = report.val_mae;
        best = joint;
        stale = 0;
      } else {
        ++stale;
      }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(report);
    if (validator && stale >= config.base.patience) break;
  }
  if (validator && std::isfinite(best_mae)) joint = std::move(best);
  return result;
}

double structured_pl_exact(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& store) {
  check_sides(joint, store);
  const int n = scheme.n_levels();

  // Log-factor that the opposite side contributes to position p of an entity's
  // row when that rating takes level s, with the opposite hidden layer summed out.
  auto opposite_factors = [&](const BmParams& other, std::int32_t self, std::span<const Entry> ratings,
                              const std::function<std::span<const Entry>(std::int32_t)>& other_ratings) {
    std::vector<double> offsets(ratings.size() * static_cast<std::size_t>(n), 0.0);
    const std::vector<double> zero(static_cast<std::size_t>(other.hidden), 0.0);
    for (std::size_t p = 0; p < ratings.size(); ++p) {
      const std::int32_t o = ratings[p].index;
      const auto co = other_ratings(o);
      // Unary and pair terms, hidden switched off.
      const auto base = side_message(other, scheme, self, zero, co);
      // Hidden activation from the other ratings of entity o.
      std::vector<double> act(other.alpha);
      for (const Entry& e : co) {
        if (e.index == self) continue;
        const detail::MemberTables t = member_tables(other, scheme, e.index);
        for (int k = 0; k < other.hidden; ++k) act[static_cast<std::size_t>(k)] += t.projection(k, e.level, n);
      }
      const detail::MemberTables mine = member_tables(other, scheme, self);
      for (int s = 1; s <= n; ++s) {
        double v = base[static_cast<std::size_t>(s - 1)];
        for (int k = 0; k < other.hidden; ++k) v += softplus(act[static_cast<std::size_t>(k)] + mine.projection(k, s, n));
        offsets[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(s - 1)] = v;
      }
    }
    return offsets;
  };

  const std::function<std::span<const Entry>(std::int32_t)> by_user = [&](std::int32_t u) { return store.by_user(u); };
  const std::function<std::span<const Entry>(std::int32_t)> by_item = [&](std::int32_t i) { return store.by_item(i); };
  double total = 0.0;
  for (std::int32_t u = 0; u < store.n_users(); ++u) {
    const auto ratings = store.by_user(u);
    if (ratings.empty()) continue;
    const auto off = opposite_factors(joint.item_side, u, ratings, by_item);
    total += exact_log_likelihood(joint.user_side, scheme, Evidence{ratings, off});
  }
  for (std::int32_t i = 0; i < store.n_items(); ++i) {
    const auto ratings = store.by_item(i);
    if (ratings.empty()) continue;
    const auto off = opposite_factors(joint.user_side, i, ratings, by_user);
    total += exact_log_likelihood(joint.item_side, scheme, Evidence{ratings, off});
  }
  return 0.5 * total;
}

}  // namespace obm
