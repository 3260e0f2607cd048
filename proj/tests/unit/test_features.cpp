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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "expect_error.hpp"
#include "obm/features.hpp"
#include "oracles.hpp"

namespace obm {
namespace {

using testing::error_of;

std::vector<double> unary(const FeatureScheme& f, int s) {
  const auto v = f.unary(s);
  return {v.begin(), v.end()};
}

TEST(FeatureSchemeTest, Sizes) {
  const RatingScale scale(5);
  EXPECT_EQ(FeatureScheme::categorical(scale).unary_size(), 5);
  EXPECT_EQ(FeatureScheme::ordinal(scale).unary_size(), 10);
  EXPECT_EQ(FeatureScheme::gaussian(scale, {3.0, 1.0}).unary_size(), 1);
}

TEST(FeatureSchemeTest, CategoricalIndicator) {
  EXPECT_EQ(unary(FeatureScheme::categorical(RatingScale(5)), 3), (std::vector<double>{0, 0, 1, 0, 0}));
  EXPECT_EQ(FeatureScheme::categorical(RatingScale(5)).pair(4, 4), 1.0);
  EXPECT_EQ(FeatureScheme::categorical(RatingScale(5)).pair(4, 2), 0.0);
}

TEST(FeatureSchemeTest, OrdinalDownUpLayout) {
  const FeatureScheme f = FeatureScheme::ordinal(RatingScale(5));
  EXPECT_EQ(unary(f, 3), (std::vector<double>{-2, -1, 0, 0, 0, 0, 0, 0, 1, 2}));
  EXPECT_EQ(unary(f, 1), (std::vector<double>{0, 0, 0, 0, 0, 0, 1, 2, 3, 4}));
  EXPECT_EQ(f.pair(2, 5), 3.0);
  for (int s = 1; s <= 5; ++s) EXPECT_EQ(f.pair(s, s), 0.0);
}

TEST(FeatureSchemeTest, OrdinalComponentsAreMonotoneWithUnitSlope) {
  const FeatureScheme f = FeatureScheme::ordinal(RatingScale(7));
  for (int a = 0; a < f.unary_size(); ++a) {
    for (int s = 1; s < 7; ++s) {
      const double step = f.unary(s + 1)[static_cast<std::size_t>(a)] - f.unary(s)[static_cast<std::size_t>(a)];
      EXPECT_LE(step, 0.0);
      EXPECT_GE(step, -1.0);
    }
  }
}

TEST(FeatureSchemeTest, MatchesHandWrittenDefinitions) {
  const RatingScale scale(5);
  for (const FeatureScheme& f : {FeatureScheme::categorical(scale), FeatureScheme::ordinal(scale),
                                 FeatureScheme::gaussian(scale, {2.9, 1.3})}) {
    const testing::RefFeatures ref = testing::ref_features(f);
    ASSERT_EQ(ref.unary_size(), f.unary_size());
    for (int s = 1; s <= 5; ++s) {
      for (int a = 0; a < f.unary_size(); ++a) EXPECT_DOUBLE_EQ(f.unary(s)[static_cast<std::size_t>(a)], ref.unary(a, s));
      for (int t = 1; t <= 5; ++t) EXPECT_DOUBLE_EQ(f.pair(s, t), ref.pair(s, t));
      EXPECT_DOUBLE_EQ(f.base_log_measure(s), ref.base(s));
    }
  }
}

TEST(FeatureSchemeTest, OutOfRangeLevel) {
  const FeatureScheme f = FeatureScheme::ordinal(RatingScale(5));
  EXPECT_EQ(error_of([&] { f.unary(0); }), ErrorCode::kRange);
  EXPECT_EQ(error_of([&] { f.pair(1, 6); }), ErrorCode::kRange);
}

TEST(GaussianNormalizerTest, UniformLevels) {
  const RatingStore s = testing::store_from({{0, 0, 1}, {0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}}, 1, 5);
  const GaussianNormalizer g = fit_gaussian_normalizer(s);
  EXPECT_DOUBLE_EQ(g.mean, 3.0);
  EXPECT_NEAR(g.std, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(g.inverse(g.transform(4.0)), 4.0, 1e-15);
}

TEST(GaussianNormalizerTest, IdenticalLevelsAreDegenerate) {
  const RatingStore s = testing::store_from({{0, 0, 4}, {0, 1, 4}, {1, 0, 4}}, 2, 2);
  EXPECT_EQ(error_of([&] { fit_gaussian_normalizer(s); }), ErrorCode::kDegenerateData);
  EXPECT_EQ(error_of([] { FeatureScheme::gaussian(RatingScale(5), {3.0, 0.0}); }), ErrorCode::kDegenerateData);
}

TEST(GaussianNormalizerTest, FeaturesAreNormalizedProducts) {
  const FeatureScheme f = FeatureScheme::gaussian(RatingScale(5), {3.0, 2.0});
  EXPECT_DOUBLE_EQ(f.unary(5)[0], 1.0);
  EXPECT_DOUBLE_EQ(f.pair(1, 5), -1.0);
  EXPECT_DOUBLE_EQ(f.base_log_measure(1), -0.5);
  EXPECT_DOUBLE_EQ(f.to_label(10.0), 5.0);
}

TEST(SchemeNames, RoundTrip) {
  for (SchemeKind k : {SchemeKind::kCategorical, SchemeKind::kOrdinal, SchemeKind::kGaussian}) {
    EXPECT_EQ(parse_scheme_kind(scheme_name(k)), k);
  }
  EXPECT_EQ(error_of([] { parse_scheme_kind("binary"); }), ErrorCode::kUsage);
  EXPECT_EQ(error_of([] { make_scheme(SchemeKind::kGaussian, RatingScale(5)); }), ErrorCode::kUsage);
}

}  // namespace
}  // namespace obm
