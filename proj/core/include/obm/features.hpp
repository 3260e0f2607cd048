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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "obm/corpus.hpp"

namespace obm {

enum class SchemeKind { kCategorical, kOrdinal, kGaussian };

std::string_view scheme_name(SchemeKind kind) noexcept;
/// Accepts "categorical", "ordinal" and "gaussian".
SchemeKind parse_scheme_kind(std::string_view name);

/// Global moment normalization of rating labels to roughly N(0, 1).
struct GaussianNormalizer {
  double mean = 0.0;
  double std = 1.0;

  double transform(double label) const noexcept { return (label - mean) / std; }
  double inverse(double x) const noexcept { return x * std + mean; }

  bool operator==(const GaussianNormalizer&) const = default;
};

/// Mean and population standard deviation of every rating label in the store.
/// Throws kDegenerateData when all labels coincide.
GaussianNormalizer fit_gaussian_normalizer(const RatingStore& store);

/// Maps a rating level to its unary feature vector f_a(s) (length A) and a
/// level pair to the pairwise feature vector f_b(s, t) (length B). Both are
/// tabulated at construction.
///
/// Ordinal layout is [down_1..down_n, up_1..up_n] with
///   down_t(s) = (t - s) * [t < s],  up_t(s) = (t - s) * [t > s].
/// The Gaussian scheme also carries a base log-measure -x^2/2 per rating so
/// that the discrete conditionals are discretized unit-variance Gaussians.
class FeatureScheme {
 public:
  static FeatureScheme categorical(const RatingScale& scale);
  static FeatureScheme ordinal(const RatingScale& scale);
  static FeatureScheme gaussian(const RatingScale& scale, const GaussianNormalizer& normalizer);

  SchemeKind kind() const noexcept { return kind_; }
  const RatingScale& scale() const noexcept { return scale_; }
  int n_levels() const noexcept { return scale_.n_levels(); }
  int unary_size() const noexcept { return unary_size_; }
  int pair_size() const noexcept { return 1; }
  const std::optional<GaussianNormalizer>& normalizer() const noexcept { return normalizer_; }

  /// f_a(R_s) for a = 0..A-1. Throws kRange for a level outside the scale.
  std::span<const double> unary(int s) const;
  /// f_b(R_s, R_t) for the single pairwise feature.
  double pair(int s, int t) const;
  std::vector<double> pair_feature(int s, int t) const { return {pair(s, t)}; }
  /// 0 except for the Gaussian scheme, where it is -x_s^2 / 2.
  double base_log_measure(int s) const;
  /// Normalized value x_s of level s; only meaningful for the Gaussian scheme.
  double gaussian_value(int s) const;

  /// Rating label of a (possibly fractional) normalized value, clamped to the scale.
  double to_label(double x) const;

  bool operator==(const FeatureScheme& other) const {
    return kind_ == other.kind_ && scale_ == other.scale_ && normalizer_ == other.normalizer_;
  }

 private:
  FeatureScheme(SchemeKind kind, const RatingScale& scale, std::optional<GaussianNormalizer> normalizer);
  void check(int s) const;

  SchemeKind kind_;
  RatingScale scale_;
  std::optional<GaussianNormalizer> normalizer_;
  int unary_size_ = 0;
  std::vector<double> unary_table_;  // n x A
  std::vector<double> pair_table_;   // n x n
  std::vector<double> base_table_;   // n
};

FeatureScheme make_scheme(SchemeKind kind, const RatingScale& scale,
                          const std::optional<GaussianNormalizer>& normalizer = std::nullopt);

}  // namespace obm
