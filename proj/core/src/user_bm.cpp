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

#include "obm/user_bm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "local_model.hpp"
#include "obm/error.hpp"

namespace obm {

PairSet::PairSet(std::int32_t n_members) : n_members_(n_members) { build_links(); }

PairSet PairSet::from_graph(const NeighborGraph& graph) {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (std::int32_t a = 0; a < graph.size(); ++a) {
    for (const auto& nb : graph.neighbors(a)) {
      pairs.emplace_back(std::min(a, nb.id), std::max(a, nb.id));
    }
  }
  return from_pairs(graph.size(), std::move(pairs));
}

PairSet PairSet::from_pairs(std::int32_t n_members, std::vector<std::pair<std::int32_t, std::int32_t>> pairs) {
  for (auto& pr : pairs) {
    if (pr.first > pr.second) std::swap(pr.first, pr.second);
    if (pr.first == pr.second || pr.first < 0 || pr.second >= n_members) {
      throw Error(ErrorCode::kIndex, "invalid member pair");
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  PairSet set;
  set.n_members_ = n_members;
  set.pairs_ = std::move(pairs);
  set.build_links();
  return set;
}

void PairSet::build_links() {
  offsets_.assign(static_cast<std::size_t>(n_members_) + 1, 0);
  for (const auto& [i, j] : pairs_) {
    ++offsets_[static_cast<std::size_t>(i) + 1];
    ++offsets_[static_cast<std::size_t>(j) + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  links_.assign(pairs_.size() * 2, Link{});
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [i, j] = pairs_[p];
    links_[cursor[static_cast<std::size_t>(i)]++] = Link{j, static_cast<std::int32_t>(p)};
    links_[cursor[static_cast<std::size_t>(j)]++] = Link{i, static_cast<std::int32_t>(p)};
  }
  for (std::int32_t m = 0; m < n_members_; ++m) {
    auto first = links_.begin() + static_cast<std::ptrdiff_t>(offsets_[static_cast<std::size_t>(m)]);
    auto last = links_.begin() + static_cast<std::ptrdiff_t>(offsets_[static_cast<std::size_t>(m) + 1]);
    std::sort(first, last, [](const Link& x, const Link& y) { return x.other < y.other; });
  }
}

std::span<const PairSet::Link> PairSet::links(std::int32_t member) const {
  if (member < 0 || member >= n_members_) throw Error(ErrorCode::kIndex, "member index out of range");
  const auto m = static_cast<std::size_t>(member);
  return {links_.data() + offsets_[m], offsets_[m + 1] - offsets_[m]};
}

std::optional<std::int32_t> PairSet::find(std::int32_t i, std::int32_t j) const {
  auto row = links(i);
  auto it = std::lower_bound(row.begin(), row.end(), j, [](const Link& l, std::int32_t key) { return l.other < key; });
  if (it == row.end() || it->other != j) return std::nullopt;
  return it->pair;
}

BmParams BmParams::zeros(std::int32_t members, int hidden, const FeatureScheme& scheme, PairSet pairs) {
  if (hidden < 0) throw Error(ErrorCode::kRange, "hidden size must be non-negative");
  if (pairs.n_members() != members) throw Error(ErrorCode::kShape, "pair set does not match member count");
  BmParams p;
  p.hidden = hidden;
  p.unary = scheme.unary_size();
  p.pairwise = scheme.pair_size();
  p.members = members;
  const auto m = static_cast<std::size_t>(members);
  const auto d = static_cast<std::size_t>(hidden);
  const auto a = static_cast<std::size_t>(p.unary);
  p.alpha.assign(d, 0.0);
  p.beta.assign(m * a, 0.0);
  p.gamma.assign(m * d * a, 0.0);
  p.lambda.assign(pairs.size() * static_cast<std::size_t>(p.pairwise), 0.0);
  p.pairs = std::move(pairs);
  p.observed.assign(m, 1);
  return p;
}

bool BmParams::all_finite() const {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(alpha) && finite(beta) && finite(gamma) && finite(lambda);
}

namespace detail {

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double normalize_log(std::span<double> values) {
  const double lz = log_sum_exp(values);
  for (double& v : values) v = std::exp(v - lz);
  return lz;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

int sample_index(std::span<const double> probs, Rng& rng) {
  double u = uniform01(rng);
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    u -= probs[k];
    if (u < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

MemberTables member_tables(const BmParams& params, const FeatureScheme& scheme, std::int32_t member) {
  if (member < 0 || member >= params.members) {
    throw Error(ErrorCode::kIndex, "member " + std::to_string(member) + " outside parameter range");
  }
  const int n = scheme.n_levels();
  const int d = params.hidden;
  const int na = params.unary;
  MemberTables t;
  t.unary.assign(static_cast<std::size_t>(n), 0.0);
  t.proj.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(n), 0.0);
  const double* beta = params.beta.data() + params.beta_index(member, 0);
  for (int s = 1; s <= n; ++s) {
    auto f = scheme.unary(s);
    double u = 0.0;
    for (int a = 0; a < na; ++a) u += beta[a] * f[static_cast<std::size_t>(a)];
    t.unary[static_cast<std::size_t>(s - 1)] = u + scheme.base_log_measure(s);
    for (int k = 0; k < d; ++k) {
      const double* g = params.gamma.data() + params.gamma_index(member, k, 0);
      double acc = 0.0;
      for (int a = 0; a < na; ++a) acc += g[a] * f[static_cast<std::size_t>(a)];
      t.proj[static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(s - 1)] = acc;
    }
  }
  return t;
}

LocalModel::LocalModel(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence)
    : params_(&params), scheme_(&scheme), n_(scheme.n_levels()), d_(params.hidden) {
  if (params.unary != scheme.unary_size()) throw Error(ErrorCode::kShape, "parameters do not match feature scheme");
  const std::size_t count = evidence.ratings.size();
  const auto n = static_cast<std::size_t>(n_);
  if (!evidence.offsets.empty() && evidence.offsets.size() != count * n) {
    throw Error(ErrorCode::kShape, "evidence offsets must hold one value per rating and level");
  }
  members_.reserve(count);
  observed_.reserve(count);
  unary_.resize(count * n);
  proj_.resize(count * static_cast<std::size_t>(d_) * n);
  for (std::size_t p = 0; p < count; ++p) {
    const Entry& e = evidence.ratings[p];
    if (!scheme.scale().contains(e.level)) throw Error(ErrorCode::kRange, "rating level outside scale");
    MemberTables t = member_tables(params, scheme, e.index);
    members_.push_back(e.index);
    observed_.push_back(e.level);
    for (std::size_t s = 0; s < n; ++s) {
      unary_[p * n + s] = t.unary[s] + (evidence.offsets.empty() ? 0.0 : evidence.offsets[p * n + s]);
    }
    std::copy(t.proj.begin(), t.proj.end(), proj_.begin() + static_cast<std::ptrdiff_t>(p * t.proj.size()));
  }

  // Map member -> position for in-set pair discovery.
  std::vector<std::pair<std::int32_t, std::int32_t>> order(count);
  for (std::size_t p = 0; p < count; ++p) order[p] = {members_[p], static_cast<std::int32_t>(p)};
  std::sort(order.begin(), order.end());
  for (std::size_t p = 1; p < count; ++p) {
    if (order[p].first == order[p - 1].first) throw Error(ErrorCode::kDuplicate, "member rated twice in evidence");
  }
  auto position_of = [&](std::int32_t member) -> std::int32_t {
    auto it = std::lower_bound(order.begin(), order.end(), std::make_pair(member, std::int32_t{-1}));
    return it != order.end() && it->first == member ? it->second : -1;
  };
  link_offsets_.assign(count + 1, 0);
  std::vector<std::vector<LocalLink>> per(count);
  for (std::size_t p = 0; p < count; ++p) {
    for (const auto& link : params.pairs.links(members_[p])) {
      const std::int32_t q = position_of(link.other);
      if (q < 0) continue;
      per[p].push_back(LocalLink{q, link.pair});
      if (static_cast<std::int32_t>(p) < q) pairs_.push_back(LocalPair{static_cast<std::int32_t>(p), q, link.pair});
    }
  }
  for (std::size_t p = 0; p < count; ++p) {
    link_offsets_[p + 1] = link_offsets_[p] + per[p].size();
    links_.insert(links_.end(), per[p].begin(), per[p].end());
  }
}

std::vector<double> LocalModel::activation(std::span<const int> levels) const {
  std::vector<double> act(params_->alpha.begin(), params_->alpha.end());
  for (std::size_t p = 0; p < size(); ++p) {
    for (int k = 0; k < d_; ++k) act[static_cast<std::size_t>(k)] += projection(p, k, levels[p]);
  }
  return act;
}

void LocalModel::conditional_logits(std::size_t p, std::span<const int> levels, std::span<const double> hidden,
                                    std::span<double> out) const {
  for (int s = 1; s <= n_; ++s) {
    double v = unary(p, s);
    for (int k = 0; k < d_; ++k) v += hidden[static_cast<std::size_t>(k)] * projection(p, k, s);
    for (const auto& link : links(p)) {
      v += pair_potential(link.pair, s, levels[static_cast<std::size_t>(link.position)]);
    }
    out[static_cast<std::size_t>(s - 1)] = v;
  }
}

}  // namespace detail

namespace {

void check_hidden(const BmParams& params, std::span<const double> hidden) {
  if (hidden.size() != static_cast<std::size_t>(params.hidden)) {
    throw Error(ErrorCode::kShape, "hidden configuration has wrong length");
  }
}

}  // namespace

double negative_energy(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                       std::span<const double> hidden) {
  check_hidden(params, hidden);
  detail::LocalModel local(params, scheme, evidence);
  double value = 0.0;
  for (int k = 0; k < params.hidden; ++k) value += params.alpha[static_cast<std::size_t>(k)] * hidden[static_cast<std::size_t>(k)];
  for (std::size_t p = 0; p < local.size(); ++p) {
    const int s = local.observed_level(p);
    value += local.unary(p, s);
    for (int k = 0; k < params.hidden; ++k) value += hidden[static_cast<std::size_t>(k)] * local.projection(p, k, s);
  }
  for (const auto& pr : local.local_pairs()) {
    value += local.pair_potential(pr.pair, local.observed_level(static_cast<std::size_t>(pr.p)),
                                  local.observed_level(static_cast<std::size_t>(pr.q)));
  }
  return value;
}

HiddenPosterior hidden_posterior(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  detail::LocalModel local(params, scheme, evidence);
  HiddenPosterior post;
  post.probs = local.activation(local.observed_levels());
  for (double& v : post.probs) v = detail::logistic(v);
  return post;
}

std::vector<double> conditional_rating(const BmParams& params, const FeatureScheme& scheme, std::int32_t item,
                                       const Evidence& others, std::span<const double> hidden) {
  check_hidden(params, hidden);
  const detail::MemberTables t = detail::member_tables(params, scheme, item);
  const int n = scheme.n_levels();
  std::vector<double> logits(t.unary);
  for (int s = 1; s <= n; ++s) {
    double& v = logits[static_cast<std::size_t>(s - 1)];
    for (int k = 0; k < params.hidden; ++k) v += hidden[static_cast<std::size_t>(k)] * t.projection(k, s, n);
  }
  for (const auto& e : others.ratings) {
    if (e.index == item) continue;
    auto pair = params.pairs.find(item, e.index);
    if (!pair) continue;
    for (int s = 1; s <= n; ++s) {
      logits[static_cast<std::size_t>(s - 1)] += detail::pair_potential(params, scheme, *pair, s, e.level);
    }
  }
  detail::normalize_log(logits);
  return logits;
}

GibbsState data_state(const BmParams& params, const Evidence& evidence) {
  GibbsState state;
  state.hidden.assign(static_cast<std::size_t>(params.hidden), 0.0);
  state.levels.reserve(evidence.ratings.size());
  for (const auto& e : evidence.ratings) state.levels.push_back(e.level);
  return state;
}

namespace detail {

void gibbs_sweep_local(const LocalModel& local, GibbsState& state, Rng& rng, std::vector<double>& scratch) {
  const auto act = local.activation(state.levels);
  for (std::size_t k = 0; k < act.size(); ++k) state.hidden[k] = uniform01(rng) < logistic(act[k]) ? 1.0 : 0.0;
  scratch.resize(static_cast<std::size_t>(local.levels()));
  for (std::size_t p = 0; p < local.size(); ++p) {
    local.conditional_logits(p, state.levels, state.hidden, scratch);
    normalize_log(scratch);
    state.levels[p] = sample_index(scratch, rng) + 1;
  }
}

}  // namespace detail

GibbsState gibbs_sweep(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                       GibbsState state, Rng& rng) {
  detail::LocalModel local(params, scheme, evidence);
  if (state.levels.size() != local.size() || state.hidden.size() != static_cast<std::size_t>(params.hidden)) {
    throw Error(ErrorCode::kShape, "gibbs state does not match the model");
  }
  std::vector<double> scratch;
  detail::gibbs_sweep_local(local, state, rng, scratch);
  return state;
}

}  // namespace obm
