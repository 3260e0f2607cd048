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
#include <string_view>
#include <vector>

#include "obm/corpus.hpp"
#include "obm/features.hpp"
#include "obm/neighbors.hpp"
#include "obm/user_bm.hpp"

namespace obm {

/// Dense gradient with the same layout as BmParams.
struct GradientAccumulator {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> lambda;

  static GradientAccumulator zeros_like(const BmParams& params);
  void clear();
  /// this += scale * other
  void add(const GradientAccumulator& other, double scale = 1.0);
  double dot(const GradientAccumulator& other) const;
  double norm() const;
};

// ---------------------------------------------------------------------------
// Maximum likelihood (enumeration; a testing oracle for small models)

/// log P(r) of the observed ratings with the hidden layer summed out and the
/// normalizer computed over every rating configuration. Throws
/// kEnumerationTooLarge beyond 12 hidden units or 8 ratings.
double exact_log_likelihood(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

/// Data statistics minus exact model expectations for all four blocks.
GradientAccumulator exact_ml_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

// ---------------------------------------------------------------------------
// Contrastive divergence

/// Data term from the soft hidden posterior; model term from the chain state
/// after `cd_steps` Gibbs sweeps started at the data, with the hidden
/// statistics taken as P(h | sampled ratings).
GradientAccumulator cd_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                                int cd_steps, Rng& rng);

void accumulate_cd_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                            int cd_steps, Rng& rng, GradientAccumulator& out);

// ---------------------------------------------------------------------------
// Pseudo-likelihood with the hidden layer marginalized in closed form

/// P(r_i = s | r_-i) for every rated position, row-major (N x n).
std::vector<double> pl_conditionals(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

double pl_objective(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

GradientAccumulator pl_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

/// Adds the gradient into `out` and returns the objective value.
double accumulate_pl_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                              GradientAccumulator& out);

// ---------------------------------------------------------------------------
// Gaussian mean-field pseudo-likelihood

/// Reconstruction error E = 1/2 sum_i (x_i - mu_i)^2 with
/// mu_i = beta_i + sum_k gamma_ik P(h_k = 1 | x) + sum_j lambda_ij x_j.
double gaussian_pl_error(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence);

enum class GaussianGradientForm {
  /// Full derivative of E, including the dependence of P(h | x) on alpha and gamma.
  kExact,
  /// The closed forms commonly printed for this model. They agree with kExact
  /// for beta and lambda but drop the logistic derivative in alpha and gamma.
  kPrinted,
};

/// Gradient of E (a descent direction is its negative).
GradientAccumulator gaussian_pl_gradient(const BmParams& params, const FeatureScheme& scheme,
                                         const Evidence& evidence,
                                         GaussianGradientForm form = GaussianGradientForm::kExact);

double accumulate_gaussian_pl_gradient(const BmParams& params, const FeatureScheme& scheme, const Evidence& evidence,
                                       GradientAccumulator& out, GaussianGradientForm form = GaussianGradientForm::kExact);

// ---------------------------------------------------------------------------
// Stochastic gradient driver

enum class TrainMethod { kCd, kPl, kGaussianPl };

std::string_view method_name(TrainMethod method) noexcept;
TrainMethod parse_train_method(std::string_view name);

struct TrainConfig {
  TrainMethod method = TrainMethod::kCd;
  int hidden_units = 20;
  int cd_steps = 1;
  double learning_rate = 0.1;
  int block_size = 100;
  int max_epochs = 20;
  double init_sigma = 0.01;
  std::uint64_t seed = 1;
  double l2 = 0.0;
  /// Epochs without validation improvement before stopping.
  int patience = 3;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double objective = 0.0;
  double val_mae = 0.0;  // NaN when no validator is attached
  double seconds = 0.0;
};

/// Returns the validation MAE of the current parameters, or NaN.
using Validator = std::function<double(const BmParams&)>;

struct TrainResult {
  BmParams params;
  std::vector<EpochReport> log;
  int best_epoch = 0;
};

/// The per-entity training data of one model side: evidence spans into
/// storage owned by the caller.
struct TrainingSet {
  std::vector<Evidence> entities;
};

/// User-side training set over a store (items are the members).
TrainingSet user_training_set(const RatingStore& store);

/// alpha and gamma from N(0, init_sigma^2), beta and lambda at zero.
BmParams init_params(const TrainConfig& config, std::int32_t members, int hidden, const FeatureScheme& scheme,
                     PairSet pairs);

/// Runs epochs [first_epoch, first_epoch + epochs) of block SGD on `params`.
/// Per-entity randomness is derived from (seed, epoch, entity) so the joint
/// trainer can interleave phases without changing any single phase.
std::vector<EpochReport> run_epochs(const TrainConfig& config, const TrainingSet& data, const FeatureScheme& scheme,
                                    BmParams& params, int first_epoch, int epochs);

/// Full user-centric training: init, epochs, validation patience. Throws
/// kDivergence naming the epoch when a parameter becomes non-finite.
TrainResult sgd_train(const TrainConfig& config, const RatingStore& store, const FeatureScheme& scheme,
                      const NeighborGraph& item_graph, const Validator& validator = {});

/// One training-log row: "epoch,objective_estimate,val_mae,seconds".
std::string format_epoch_csv(const EpochReport& report);

}  // namespace obm
