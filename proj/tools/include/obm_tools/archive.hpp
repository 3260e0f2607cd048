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
#include <iosfwd>
#include <optional>
#include <string>

#include "obm/baselines.hpp"
#include "obm/corpus.hpp"
#include "obm/features.hpp"
#include "obm/user_bm.hpp"

namespace obm::tools {

inline constexpr int kArchiveVersion = 1;

/// A trained model with everything needed to use it without the config.
struct ModelArchive {
  int version = kArchiveVersion;
  std::string variant;
  SchemeKind scheme = SchemeKind::kOrdinal;
  std::optional<GaussianNormalizer> normalizer;
  RatingScale scale;
  std::uint64_t dataset_hash = 0;
  int k_top = 0;
  int min_overlap = 0;
  IdMap users;
  IdMap items;
  std::optional<BmParams> user_side;
  std::optional<BmParams> item_side;
  std::optional<SvdFactors> svd;

  FeatureScheme feature_scheme() const;
  bool operator==(const ModelArchive&) const = default;
};

/// Text header "OBMARCHIVE <version>\n" followed by length-prefixed binary
/// sections. Numbers are stored little-endian; doubles bit-exact.
void write_archive(const ModelArchive& archive, std::ostream& out);

/// Throws kVersion when the header names a version other than
/// `reader_version`, kTruncated when a section runs past the end of the data.
/// Nothing is returned on failure.
ModelArchive read_archive(std::istream& in, int reader_version = kArchiveVersion);

void save_model(const ModelArchive& archive, const std::string& path);
ModelArchive load_model(const std::string& path);

}  // namespace obm::tools
