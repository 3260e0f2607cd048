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

#include "obm/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "local_model.hpp"
#include "obm/error.hpp"

namespace obm {

using detail::LocalModel;
using detail::logistic;
using detail::softplus;

GradientAccumulator GradientAccumulator::zeros_like(const BmParams& params) {
  GradientAccumulator g;
  g.alpha.assign(params.alpha.size(), 0.0);
  g.beta.assign(params.beta.size(), 0.0);
  g.gamma.assign(params.gamma.size(), 0.0);
  g.lambda.assign(params.lambda.size(), 0.0);
  return g;
}

void GradientAccumulator::clear() {
  std::fill(alpha.begin(), alpha.end(), 0.0);
  std::fill(beta.begin(), beta.end(), 0.0);
  std::fill(gamma.begin(), gamma.end(), 0.0);
  std::fill(lambda.begin(), lambda.end(), 0.0);
}

namespace {

template <typename F>
void for_each_block(GradientAccumulator& a, const GradientAccumulator& b, F&& f) {
  f(a.alpha, b.alpha);
  f(a.beta, b.beta);
  f(a.gamma, b.gamma);
  f(a.lambda, b.lambda);
}

}  // namespace

void GradientAccumulator::add(const GradientAccumulator& other, double scale) {
  for_each_block(*this, other, [scale](std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::kShape, "gradient shapes differ");
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += scale * y[k];
  });
}

double GradientAccumulator::dot(const GradientAccumulator& other) const {
  double s = 0.0;
  auto acc = [&s](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::kShape, "gradient shapes differ");
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  };
  acc(alpha, other.alpha);
  acc(beta, other.beta);
  acc(gamma, other.gamma);
  acc(lambda, other.lambda);
  return s;
}

double GradientAccumulator::norm() const { return std::sqrt(dot(*this)); }

namespace {

constexpr int kMaxEnumHidden = 12;
constexpr std::size_t kMaxEnumRatings = 8;
constexpr double kMaxEnumStates = 4.0e6;

void check_enumerable(const BmParams& params, const LocalModel& local) {
  const double states = std::pow(static_cast<double>(local.levels()), static_cast<double>(local.size()));
  if (params.hidden > kMaxEnumHidden || local.size() > kMaxEnumRatings || states > kMaxEnumStates) {
    throw Error(ErrorCode::kEnumerationTooLarge,
                "exact enumeration limited to 12 hidden units and 8 ratings (got " + std::to_string(params.hidden) +
                    " and " + std::to_string(local.size()) + ")");
  }
}

/// Odometer over all level assignments of the rated positions.
bool next_configuration(std::vector<int>& levels, int n) {
  for (std::size_t p = 0; p < levels.size(); ++p) {
    if (levels[p] < n) {
      ++levels[p];
      return true;
    }
    levels[p] = 1;
  }
  return false;
}

/// log sum_h Phi(h, r) for a complete rating configuration.
double log_marginal_potential(const LocalModel& local, std::span<const int> levels, std::vector<double>& act) {
  act = local.activation(levels);
  double v = 0.0;
  for (std::size_t p = 0; p < local.size(); ++p) v += local.unary(p, levels[p]);
  for (const auto& pr : local.local_pairs()) {
    v += local.pair_potential(pr.pair, levels[static_cast<std::size_t>(pr.p)], levels[static_cast<std::size_t>(pr.q)]);
  }
  for (double a : act) v += softplus(a);
  return v;
}

/// Adds weight * sufficient statistics of (r, P(h | r)) to `out`.
void add_statistics(const LocalModel& local, std::span<const int> levels, std::span<const double> hidden_probs,
                    double weight, GradientAccumulator& out) {
  const BmParams& params = local.params();
  const FeatureScheme& scheme = local.scheme();
  const int d = params.hidden;
  const int na = params.unary;
  for (int k = 0; k < d; ++k) out.alpha[static_cast<std::size_t>(k)] += weight * hidden_probs[static_cast<std::size_t>(k)];
  for (std::size_t p = 0; p < local.size(); ++p) {
    const std::int32_t i = local.member(p);
    auto f = scheme.unary(levels[p]);
    double* beta = out.beta.data() + params.beta_index(i, 0);
    for (int a = 0; a < na; ++a) beta[a] += weight * f[static_cast<std::size_t>(a)];
    for (int k = 0; k < d; ++k) {
      const double wk = weight * hidden_probs[static_cast<std::size_t>(k)];
      if (wk == 0.0) continue;
      double* gamma = out.gamma.data() + params.gamma_index(i, k, 0);
      for (int a = 0; a < na; ++a) gamma[a] += wk * f[static_cast<std::size_t>(a)];
    }
  }
  for (const auto& pr : local.local_pairs()) {
    out.lambda[static_cast<std::size_t>(pr.pair)] +=
        weight * scheme.pair(levels[static_cast<std::size_t>(pr.p)], levels[static_cast<std::size_t>(pr.q)]);
  }
}

std::vector<double> logistic_of(std::vector<double> act) {
  for (double& a : act) a = logistic(a);
  return act;
}

}  // namespace

double exact_log_likelihood(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  LocalModel local(params, scheme, evidence);
  check_enumerable(params, local);
  std::vector<double> act;
  const double data = log_marginal_potential(local, local.observed_levels(), act);
  std::vector<double> all;
  std::vector<int> levels(local.size(), 1);
  do {
    all.push_back(log_marginal_potential(local, levels, act));
  } while (next_configuration(levels, local.levels()));
  return data - detail::log_sum_exp(all);
}

GradientAccumulator exact_ml_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  LocalModel local(params, scheme, evidence);
  check_enumerable(params, local);
  GradientAccumulator grad = GradientAccumulator::zeros_like(params);

  std::vector<double> act;
  std::vector<double> log_phi;
  std::vector<int> levels(local.size(), 1);
  do {
    log_phi.push_back(log_marginal_potential(local, levels, act));
  } while (next_configuration(levels, local.levels()));
  const double log_z = detail::log_sum_exp(log_phi);

  GradientAccumulator model = GradientAccumulator::zeros_like(params);
  std::fill(levels.begin(), levels.end(), 1);
  std::size_t idx = 0;
  do {
    const double w = std::exp(log_phi[idx++] - log_z);
    add_statistics(local, levels, logistic_of(local.activation(levels)), w, model);
  } while (next_configuration(levels, local.levels()));

  add_statistics(local, local.observed_levels(), logistic_of(local.activation(local.observed_levels())), 1.0, grad);
  grad.add(model, -1.0);
  return grad;
}

void accumulate_cd_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                            int cd_steps, Rng& rng, GradientAccumulator& out) {
  if (cd_steps < 1) throw Error(ErrorCode::kRange, "cd_steps must be at least 1");
  LocalModel local(params, scheme, evidence);
  if (local.size() == 0) return;
  GibbsState state = data_state(params, evidence);
  add_statistics(local, state.levels, logistic_of(local.activation(state.levels)), 1.0, out);
  std::vector<double> scratch;
  for (int step = 0; step < cd_steps; ++step) detail::gibbs_sweep_local(local, state, rng, scratch);
  add_statistics(local, state.levels, logistic_of(local.activation(state.levels)), -1.0, out);
}

GradientAccumulator cd_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                                int cd_steps, Rng& rng) {
  GradientAccumulator grad = GradientAccumulator::zeros_like(params);
  accumulate_cd_gradient(params, scheme, evidence, cd_steps, rng, grad);
  return grad;
}

namespace {

/// Per-position PL quantities: log Z(s | r_-i) and the hidden conditionals
/// q_k(s) = P(h_k = 1 | r_i = s, r_-i).
struct PlTables {
  std::size_t count = 0;
  int n = 0;
  int d = 0;
  std::vector<double> cond;  // N x n, P(r_i = s | r_-i)
  std::vector<double> q;     // N x d x n
  double objective = 0.0;

  double& cond_at(std::size_t p, int s) { return cond[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(s - 1)]; }
  double& q_at(std::size_t p, int k, int s) {
    return q[(p * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(n) +
             static_cast<std::size_t>(s - 1)];
  }
};

PlTables pl_tables(const LocalModel& local, bool want_hidden) {
  PlTables t;
  t.count = local.size();
  t.n = local.levels();
  t.d = local.hidden();
  const auto n = static_cast<std::size_t>(t.n);
  t.cond.assign(t.count * n, 0.0);
  if (want_hidden) t.q.assign(t.count * static_cast<std::size_t>(t.d) * n, 0.0);
  const auto& obs = local.observed_levels();
  const std::vector<double> act = local.activation(obs);
  std::vector<double> excl(act.size());
  std::vector<double> logz(n);
  for (std::size_t p = 0; p < t.count; ++p) {
    for (int k = 0; k < t.d; ++k) {
      excl[static_cast<std::size_t>(k)] = act[static_cast<std::size_t>(k)] - local.projection(p, k, obs[p]);
    }
    for (int s = 1; s <= t.n; ++s) {
      double v = local.unary(p, s);
      for (const auto& link : local.links(p)) {
        v += local.pair_potential(link.pair, s, obs[static_cast<std::size_t>(link.position)]);
      }
      for (int k = 0; k < t.d; ++k) {
        const double z = excl[static_cast<std::size_t>(k)] + local.projection(p, k, s);
        v += softplus(z);
        if (want_hidden) t.q_at(p, k, s) = logistic(z);
      }
      logz[static_cast<std::size_t>(s - 1)] = v;
    }
    const double lz = detail::log_sum_exp(logz);
    t.objective += logz[static_cast<std::size_t>(obs[p] - 1)] - lz;
    for (int s = 1; s <= t.n; ++s) t.cond_at(p, s) = std::exp(logz[static_cast<std::size_t>(s - 1)] - lz);
  }
  return t;
}

}  // namespace

std::vector<double> pl_conditionals(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  LocalModel local(params, scheme, evidence);
  return pl_tables(local, false).cond;
}

double pl_objective(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  LocalModel local(params, scheme, evidence);
  return pl_tables(local, false).objective;
}

double accumulate_pl_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                              GradientAccumulator& out) {
  LocalModel local(params, scheme, evidence);
  if (local.size() == 0) return 0.0;
  PlTables t = pl_tables(local, true);
  const int n = t.n;
  const int d = t.d;
  const int na = params.unary;
  const auto& obs = local.observed_levels();

  // D(s | r_-i) = [s == observed] - P(s | r_-i), stored in place of cond.
  for (std::size_t p = 0; p < t.count; ++p) {
    for (int s = 1; s <= n; ++s) t.cond_at(p, s) = (s == obs[p] ? 1.0 : 0.0) - t.cond_at(p, s);
  }

  // alpha: sum_i sum_s D q_k(s); also the per-position share S_pk.
  std::vector<double> total(static_cast<std::size_t>(d), 0.0);
  for (std::size_t p = 0; p < t.count; ++p) {
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int s = 1; s <= n; ++s) acc += t.cond_at(p, s) * t.q_at(p, k, s);
      total[static_cast<std::size_t>(k)] += acc;
    }
  }
  for (int k = 0; k < d; ++k) out.alpha[static_cast<std::size_t>(k)] += total[static_cast<std::size_t>(k)];

  for (std::size_t p = 0; p < t.count; ++p) {
    const std::int32_t i = local.member(p);
    auto f_obs = scheme.unary(obs[p]);
    double* beta = out.beta.data() + params.beta_index(i, 0);
    for (int s = 1; s <= n; ++s) {
      const double dv = t.cond_at(p, s);
      auto f = scheme.unary(s);
      for (int a = 0; a < na; ++a) beta[a] += dv * f[static_cast<std::size_t>(a)];
    }
    // gamma_{ika}: sum_s D q_k(s) (f_a(s) - f_a(obs)) + f_a(obs) * total_k
    for (int k = 0; k < d; ++k) {
      double* gamma = out.gamma.data() + params.gamma_index(i, k, 0);
      for (int a = 0; a < na; ++a) gamma[a] += f_obs[static_cast<std::size_t>(a)] * total[static_cast<std::size_t>(k)];
      for (int s = 1; s <= n; ++s) {
        const double w = t.cond_at(p, s) * t.q_at(p, k, s);
        if (w == 0.0) continue;
        auto f = scheme.unary(s);
        for (int a = 0; a < na; ++a) {
          gamma[a] += w * (f[static_cast<std::size_t>(a)] - f_obs[static_cast<std::size_t>(a)]);
        }
      }
    }
    // lambda_{ij}: the centre-node contribution of position p to each of its pairs.
    for (const auto& link : local.links(p)) {
      const int other = obs[static_cast<std::size_t>(link.position)];
      double acc = 0.0;
      for (int s = 1; s <= n; ++s) acc += t.cond_at(p, s) * scheme.pair(s, other);
      out.lambda[static_cast<std::size_t>(link.pair)] += acc;
    }
  }
  return t.objective;
}

GradientAccumulator pl_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  GradientAccumulator grad = GradientAccumulator::zeros_like(params);
  accumulate_pl_gradient(params, scheme, evidence, grad);
  return grad;
}

namespace {

struct GaussianTerms {
  std::vector<double> x;       // normalized observed values
  std::vector<double> mu;      // reconstructions
  std::vector<double> eps;     // x - mu
  std::vector<double> hidden;  // P(h_k = 1 | x)
  double error = 0.0;
};

GaussianTerms gaussian_terms(const LocalModel& local, const Evidence& evidence) {
  const FeatureScheme& scheme = local.scheme();
  if (scheme.kind() != SchemeKind::kGaussian) {
    throw Error(ErrorCode::kUsage, "gaussian pseudo-likelihood requires the gaussian feature scheme");
  }
  const BmParams& params = local.params();
  const int n = scheme.n_levels();
  GaussianTerms g;
  const std::size_t count = local.size();
  g.x.resize(count);
  for (std::size_t p = 0; p < count; ++p) g.x[p] = scheme.gaussian_value(local.observed_level(p));
  g.hidden = logistic_of(local.activation(local.observed_levels()));

  // Offsets are affine in x for this scheme; recover their slope by least squares.
  double xbar = 0.0;
  for (int s = 1; s <= n; ++s) xbar += scheme.gaussian_value(s);
  xbar /= n;
  double sxx = 0.0;
  for (int s = 1; s <= n; ++s) sxx += (scheme.gaussian_value(s) - xbar) * (scheme.gaussian_value(s) - xbar);

  g.mu.resize(count);
  g.eps.resize(count);
  for (std::size_t p = 0; p < count; ++p) {
    const std::int32_t i = local.member(p);
    double mu = params.beta_at(i, 0);
    for (int k = 0; k < params.hidden; ++k) mu += params.gamma_at(i, k, 0) * g.hidden[static_cast<std::size_t>(k)];
    for (const auto& link : local.links(p)) {
      mu += params.lambda[static_cast<std::size_t>(link.pair)] * g.x[static_cast<std::size_t>(link.position)];
    }
    if (!evidence.offsets.empty()) {
      double sxy = 0.0;
      for (int s = 1; s <= n; ++s) {
        sxy += (scheme.gaussian_value(s) - xbar) *
               evidence.offsets[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(s - 1)];
      }
      mu += sxy / sxx;
    }
    g.mu[p] = mu;
    g.eps[p] = g.x[p] - mu;
    g.error += 0.5 * g.eps[p] * g.eps[p];
  }
  return g;
}

}  // namespace

double gaussian_pl_error(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence) {
  LocalModel local(params, scheme, evidence);
  return gaussian_terms(local, evidence).error;
}

double accumulate_gaussian_pl_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                                       GradientAccumulator& out, GaussianGradientForm form) {
  LocalModel local(params, scheme, evidence);
  if (local.size() == 0) return 0.0;
  const GaussianTerms g = gaussian_terms(local, evidence);
  const int d = params.hidden;
  std::vector<double> c(static_cast<std::size_t>(d), 0.0);
  for (std::size_t p = 0; p < local.size(); ++p) {
    for (int k = 0; k < d; ++k) c[static_cast<std::size_t>(k)] += g.eps[p] * params.gamma_at(local.member(p), k, 0);
  }
  const bool exact = form == GaussianGradientForm::kExact;
  for (int k = 0; k < d; ++k) {
    const double h = g.hidden[static_cast<std::size_t>(k)];
    const double slope = exact ? h * (1.0 - h) : h;
    out.alpha[static_cast<std::size_t>(k)] += -slope * c[static_cast<std::size_t>(k)];
  }
  for (std::size_t p = 0; p < local.size(); ++p) {
    const std::int32_t i = local.member(p);
    out.beta[params.beta_index(i, 0)] += -g.eps[p];
    for (int k = 0; k < d; ++k) {
      const double h = g.hidden[static_cast<std::size_t>(k)];
      const double chain = exact ? h * (1.0 - h) : h * h;
      out.gamma[params.gamma_index(i, k, 0)] += -h * g.eps[p] - chain * g.x[p] * c[static_cast<std::size_t>(k)];
    }
  }
  for (const auto& pr : local.local_pairs()) {
    const auto p = static_cast<std::size_t>(pr.p);
    const auto q = static_cast<std::size_t>(pr.q);
    out.lambda[static_cast<std::size_t>(pr.pair)] += -g.eps[p] * g.x[q] - g.eps[q] * g.x[p];
  }
  return g.error;
}

GradientAccumulator gaussian_pl_gradient(const BmParams& params, const FeatureScheme& scheme,
                                         const Evidence& evidence, GaussianGradientForm form) {
  GradientAccumulator grad = GradientAccumulator::zeros_like(params);
  accumulate_gaussian_pl_gradient(params, scheme, evidence, grad, form);
  return grad;
}

// ---------------------------------------------------------------------------

std::string_view method_name(TrainMethod method) noexcept {
  switch (method) {
    case TrainMethod::kCd: return "cd";
    case TrainMethod::kPl: return "pl";
    case TrainMethod::kGaussianPl: return "gaussian_pl";
  }
  return "unknown";
}

TrainMethod parse_train_method(std::string_view name) {
  if (name == "cd") return TrainMethod::kCd;
  if (name == "pl") return TrainMethod::kPl;
  if (name == "gaussian_pl") return TrainMethod::kGaussianPl;
  throw Error(ErrorCode::kUsage, "unknown training method '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (cd_steps < 1) throw Error(ErrorCode::kUsage, "cd_steps must be >= 1");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::kUsage, "learning_rate must be non-negative");
  if (block_size < 1) throw Error(ErrorCode::kUsage, "block_size must be >= 1");
  if (hidden_units < 0) throw Error(ErrorCode::kUsage, "hidden_units must be >= 0");
  if (max_epochs < 0) throw Error(ErrorCode::kUsage, "max_epochs must be >= 0");
  if (!(init_sigma >= 0.0)) throw Error(ErrorCode::kUsage, "init_sigma must be non-negative");
  if (!(l2 >= 0.0)) throw Error(ErrorCode::kUsage, "l2 must be non-negative");
}

TrainingSet user_training_set(const RatingStore& store) {
  TrainingSet set;
  set.entities.reserve(static_cast<std::size_t>(store.n_users()));
  for (std::int32_t u = 0; u < store.n_users(); ++u) set.entities.push_back(Evidence{store.by_user(u), {}});
  return set;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t entity) {
  return splitmix(splitmix(splitmix(seed) ^ epoch) ^ entity);
}

constexpr std::uint64_t kShuffleStream = ~std::uint64_t{0};

}  // namespace

BmParams init_params(const TrainConfig& config, std::int32_t members, int hidden, const FeatureScheme& scheme,
                     PairSet pairs) {
  BmParams params = BmParams::zeros(members, hidden, scheme, std::move(pairs));
  Rng rng(stream_seed(config.seed, kShuffleStream, kShuffleStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : params.alpha) v = config.init_sigma * normal(rng);
  for (double& v : params.gamma) v = config.init_sigma * normal(rng);
  return params;
}

std::vector<EpochReport> run_epochs(const TrainConfig& config, const TrainingSet& data, const FeatureScheme& scheme,
                                    BmParams& params, int first_epoch, int epochs) {
  config.validate();
  if (config.method == TrainMethod::kGaussianPl && scheme.kind() != SchemeKind::kGaussian) {
    throw Error(ErrorCode::kUsage, "gaussian_pl training requires the gaussian scheme");
  }
  std::vector<EpochReport> reports;
  GradientAccumulator grad = GradientAccumulator::zeros_like(params);
  std::vector<std::size_t> order(data.entities.size());
  for (int e = first_epoch; e < first_epoch + epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(stream_seed(config.seed, static_cast<std::uint64_t>(e), kShuffleStream));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double objective = 0.0;
    std::size_t counted = 0;
    const auto block = static_cast<std::size_t>(config.block_size);
    for (std::size_t first = 0; first < order.size(); first += block) {
      const std::size_t last = std::min(order.size(), first + block);
      grad.clear();
      std::size_t used = 0;
      for (std::size_t k = first; k < last; ++k) {
        const Evidence& ev = data.entities[order[k]];
        if (ev.ratings.empty()) continue;
        ++used;
        switch (config.method) {
          case TrainMethod::kCd: {
            Rng rng(stream_seed(config.seed, static_cast<std::uint64_t>(e), order[k]));
            accumulate_cd_gradient(params, scheme, ev, config.cd_steps, rng, grad);
            break;
          }
          case TrainMethod::kPl:
            objective += accumulate_pl_gradient(params, scheme, ev, grad);
            ++counted;
            break;
          case TrainMethod::kGaussianPl:
            // Descent on the reconstruction error.
            objective -= accumulate_gaussian_pl_gradient(params, scheme, ev, grad);
            ++counted;
            break;
        }
      }
      if (used == 0) continue;
      const double sign = config.method == TrainMethod::kGaussianPl ? -1.0 : 1.0;
      const double step = sign * config.learning_rate / static_cast<double>(used);
      const double decay = config.learning_rate * config.l2;
      auto apply = [&](std::vector<double>& theta, const std::vector<double>& g, bool decayed) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
          theta[j] += step * g[j];
          if (decayed && decay != 0.0) theta[j] -= decay * theta[j];
        }
      };
      apply(params.alpha, grad.alpha, false);
      apply(params.beta, grad.beta, true);
      apply(params.gamma, grad.gamma, true);
      apply(params.lambda, grad.lambda, true);
      if (!params.all_finite()) {
        throw Error(ErrorCode::kDivergence, "non-finite parameter during epoch " + std::to_string(e + 1));
      }
    }
    if (config.method == TrainMethod::kCd) {
      for (const Evidence& ev : data.entities) {
        if (ev.ratings.empty()) continue;
        objective += pl_objective(params, scheme, ev);
        ++counted;
      }
    }
    EpochReport report;
    report.epoch = e + 1;
    report.objective = counted > 0 ? objective / static_cast<double>(counted) : 0.0;
    report.val_mae = std::numeric_limits<double>::quiet_NaN();
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    reports.push_back(report);
  }
  return reports;
}

TrainResult sgd_train(const TrainConfig& config, const RatingStore& store, const FeatureScheme& scheme,
                      const NeighborGraph& item_graph, const Validator& validator) {
  config.validate();
  if (store.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot train on an empty store");
  PairSet pairs = item_graph.size() == 0 ? PairSet(store.n_items()) : PairSet::from_graph(item_graph);
  if (pairs.n_members() != store.n_items()) throw Error(ErrorCode::kShape, "item graph does not match the store");
  TrainResult result;
  result.params = init_params(config, store.n_items(), config.hidden_units, scheme, std::move(pairs));
  for (std::int32_t i = 0; i < store.n_items(); ++i) {
    result.params.observed[static_cast<std::size_t>(i)] = store.by_item(i).empty() ? 0 : 1;
  }
  const TrainingSet data = user_training_set(store);

  BmParams best = result.params;
  double best_mae = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int e = 0; e < config.max_epochs; ++e) {
    auto reports = run_epochs(config, data, scheme, result.params, e, 1);
    EpochReport& report = reports.front();
    if (validator) {
      report.val_mae = validator(result.params);
      if (report.val_mae < best_mae) {
        best_mae = report.val_mae;
        best = result.params;
        result.best_epoch = report.epoch;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      result.best_epoch = report.epoch;
    }
    result.log.push_back(report);
    if (validator && stale >= config.patience) break;
  }
  if (validator && std::isfinite(best_mae)) result.params = std::move(best);
  return result;
}

std::string format_epoch_csv(const EpochReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.4f", report.epoch, report.objective, report.val_mae,
                report.seconds);
  return buf;
}

}  // namespace obm
