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
#include <span>
#include <string_view>
#include <vector>

#include "obm/corpus.hpp"

namespace obm {

enum class Axis { kUser, kItem };

std::string_view axis_name(Axis axis) noexcept;

struct Neighbor {
  std::int32_t id = 0;
  double corr = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Per-entity top-K positively correlated neighbours, sorted by correlation
/// descending with ties broken by lower id.
struct NeighborGraph {
  Axis axis = Axis::kItem;
  int k_top = 0;
  int min_overlap = 3;
  std::vector<std::vector<Neighbor>> lists;

  std::int32_t size() const noexcept { return static_cast<std::int32_t>(lists.size()); }
  std::span<const Neighbor> neighbors(std::int32_t id) const;

  bool operator==(const NeighborGraph&) const = default;
};

/// Pearson correlation of raw levels over the co-rated set of a and b.
/// nullopt when fewer than min_overlap co-ratings exist or either side has
/// zero variance over them.
std::optional<double> pearson(const RatingStore& store, Axis axis, std::int32_t a, std::int32_t b,
                              int min_overlap = 3);

NeighborGraph build_topk(const RatingStore& store, Axis axis, int k_top, int min_overlap = 3);

/// Graph with no edges; used by models without input-layer correlations.
NeighborGraph empty_graph(Axis axis, std::int32_t size);

/// "axis,id,neighbor,corr" rows using external ids.
void write_graph_csv(const NeighborGraph& graph, const RatingStore& store, std::ostream& out);
NeighborGraph read_graph_csv(std::istream& in, const RatingStore& store, Axis axis, int k_top,
                             int min_overlap);

}  // namespace obm
