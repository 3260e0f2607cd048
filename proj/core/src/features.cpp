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

#include "obm/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "obm/error.hpp"

namespace obm {

std::string_view scheme_name(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::kCategorical: return "categorical";
    case SchemeKind::kOrdinal: return "ordinal";
    case SchemeKind::kGaussian: return "gaussian";
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "categorical") return SchemeKind::kCategorical;
  if (name == "ordinal") return SchemeKind::kOrdinal;
  if (name == "gaussian") return SchemeKind::kGaussian;
  throw Error(ErrorCode::kUsage, "unknown feature scheme '" + std::string(name) + "'");
}

GaussianNormalizer fit_gaussian_normalizer(const RatingStore& store) {
  if (store.empty()) throw Error(ErrorCode::kEmptyCorpus, "cannot fit a normalizer on an empty store");
  double sum = 0.0;
  for (const auto& t : store.triples()) sum += store.scale().value(t.level);
  const double mean = sum / static_cast<double>(store.size());
  double sq = 0.0;
  for (const auto& t : store.triples()) {
    const double dev = store.scale().value(t.level) - mean;
    sq += dev * dev;
  }
  const double var = sq / static_cast<double>(store.size());
  if (!(var > 0.0)) throw Error(ErrorCode::kDegenerateData, "all ratings are identical; variance is zero");
  return GaussianNormalizer{mean, std::sqrt(var)};
}

FeatureScheme::FeatureScheme(SchemeKind kind, const RatingScale& scale,
                             std::optional<GaussianNormalizer> normalizer)
    : kind_(kind), scale_(scale), normalizer_(normalizer) {
  const int n = scale_.n_levels();
  switch (kind_) {
    case SchemeKind::kCategorical: unary_size_ = n; break;
    case SchemeKind::kOrdinal: unary_size_ = 2 * n; break;
    case SchemeKind::kGaussian: unary_size_ = 1; break;
  }
  const auto un = static_cast<std::size_t>(n);
  const auto ua = static_cast<std::size_t>(unary_size_);
  unary_table_.assign(un * ua, 0.0);
  pair_table_.assign(un * un, 0.0);
  base_table_.assign(un, 0.0);
  for (int s = 1; s <= n; ++s) {
    double* row = unary_table_.data() + static_cast<std::size_t>(s - 1) * ua;
    switch (kind_) {
      case SchemeKind::kCategorical: row[s - 1] = 1.0; break;
      case SchemeKind::kOrdinal:
        for (int t = 1; t <= n; ++t) {
          row[t - 1] = t < s ? static_cast<double>(t - s) : 0.0;
          row[n + t - 1] = t > s ? static_cast<double>(t - s) : 0.0;
        }
        break;
      case SchemeKind::kGaussian: {
        const double x = normalizer_->transform(scale_.value(s));
        row[0] = x;
        base_table_[static_cast<std::size_t>(s - 1)] = -0.5 * x * x;
        break;
      }
    }
    for (int t = 1; t <= n; ++t) {
      double v = 0.0;
      switch (kind_) {
        case SchemeKind::kCategorical: v = s == t ? 1.0 : 0.0; break;
        case SchemeKind::kOrdinal: v = static_cast<double>(std::abs(t - s)); break;
        case SchemeKind::kGaussian:
          v = normalizer_->transform(scale_.value(s)) * normalizer_->transform(scale_.value(t));
          break;
      }
      pair_table_[static_cast<std::size_t>(s - 1) * un + static_cast<std::size_t>(t - 1)] = v;
    }
  }
}

FeatureScheme FeatureScheme::categorical(const RatingScale& scale) {
  return FeatureScheme(SchemeKind::kCategorical, scale, std::nullopt);
}

FeatureScheme FeatureScheme::ordinal(const RatingScale& scale) {
  return FeatureScheme(SchemeKind::kOrdinal, scale, std::nullopt);
}

FeatureScheme FeatureScheme::gaussian(const RatingScale& scale, const GaussianNormalizer& normalizer) {
  if (!(normalizer.std > 0.0)) throw Error(ErrorCode::kDegenerateData, "normalizer std must be positive");
  return FeatureScheme(SchemeKind::kGaussian, scale, normalizer);
}

FeatureScheme make_scheme(SchemeKind kind, const RatingScale& scale,
                          const std::optional<GaussianNormalizer>& normalizer) {
  switch (kind) {
    case SchemeKind::kCategorical: return FeatureScheme::categorical(scale);
    case SchemeKind::kOrdinal: return FeatureScheme::ordinal(scale);
    case SchemeKind::kGaussian:
      if (!normalizer) throw Error(ErrorCode::kUsage, "gaussian scheme requires a fitted normalizer");
      return FeatureScheme::gaussian(scale, *normalizer);
  }
  throw Error(ErrorCode::kUsage, "unknown feature scheme");
}

void FeatureScheme::check(int s) const {
  if (!scale_.contains(s)) {
    throw Error(ErrorCode::kRange, "level " + std::to_string(s) + " outside 1.." + std::to_string(n_levels()));
  }
}

std::span<const double> FeatureScheme::unary(int s) const {
  check(s);
  const auto ua = static_cast<std::size_t>(unary_size_);
  return {unary_table_.data() + static_cast<std::size_t>(s - 1) * ua, ua};
}

double FeatureScheme::pair(int s, int t) const {
  check(s);
  check(t);
  return pair_table_[static_cast<std::size_t>(s - 1) * static_cast<std::size_t>(n_levels()) +
                     static_cast<std::size_t>(t - 1)];
}

double FeatureScheme::base_log_measure(int s) const {
  check(s);
  return base_table_[static_cast<std::size_t>(s - 1)];
}

double FeatureScheme::gaussian_value(int s) const {
  check(s);
  if (!normalizer_) return scale_.value(s);
  return normalizer_->transform(scale_.value(s));
}

double FeatureScheme::to_label(double x) const {
  const double label = normalizer_ ? normalizer_->inverse(x) : x;
  return std::clamp(label, scale_.value(1), scale_.value(n_levels()));
}

}  // namespace obm
