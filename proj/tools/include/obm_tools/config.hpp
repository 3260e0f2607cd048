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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "obm/baselines.hpp"
#include "obm/corpus.hpp"
#include "obm/eval.hpp"
#include "obm/features.hpp"
#include "obm/inference.hpp"
#include "obm/joint_bm.hpp"
#include "obm/learning.hpp"

namespace obm::tools {

enum class Variant { kUser, kUserCorr, kUserItem, kUserItemCorr, kSvd };

std::string_view variant_name(Variant v) noexcept;
Variant parse_variant(std::string_view name);
bool uses_item_side(Variant v) noexcept;
bool uses_correlations(Variant v) noexcept;

/// Everything one experiment needs. Loaded from a key=value file; command
/// line overrides are applied with set().
struct ExperimentConfig {
  std::string data_path;
  RatingFormat data_format = RatingFormat::kMl100kTab;
  int levels = 5;

  int min_user_ratings = 20;
  int min_item_ratings = 20;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 1;
  /// Share of each user's training ratings held out for early stopping; 0 disables.
  double validation_fraction = 0.0;

  Variant variant = Variant::kUserCorr;
  SchemeKind scheme = SchemeKind::kOrdinal;
  int d = 20;
  int d_prime = 20;
  int k_top = 100;
  int min_overlap = 3;

  TrainConfig train;
  int epochs_per_phase = 1;
  /// Joint variants only: false keeps the item side at zero.
  bool item_side = true;

  SvdConfig svd;

  ReadOut read_out = ReadOut::kExpected;
  std::vector<std::string> metrics = {"mae", "ranking"};
  int n_similar = 50;
  double half_life = 5.0;
  /// Sort the model's ranking scores descending instead of ascending.
  bool rank_invert = false;
  std::vector<int> cutoffs = {1, 2, 5, 10, 20, 50, 100};

  std::string output_dir = "obm_out";

  /// Applies one key=value assignment. Unknown keys and bad values raise kUsage.
  void set(std::string_view key, std::string_view value);
  /// Parses "key=value" (whitespace around either side is ignored).
  void set_assignment(std::string_view assignment);
  void validate() const;

  /// Canonical text form, one "key=value" line per setting in a fixed order.
  std::string to_text() const;
};

/// Reads a config file: blank lines and lines starting with '#' are skipped.
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace obm::tools
