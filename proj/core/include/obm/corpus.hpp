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
#include <unordered_map>
#include <vector>

namespace obm {

/// Ordered rating levels R_1 < ... < R_n. Levels are addressed by their
/// 1-based index s everywhere in the library.
class RatingScale {
 public:
  /// Scale whose labels are 1, 2, ..., n_levels.
  explicit RatingScale(int n_levels = 5);
  explicit RatingScale(std::vector<double> level_values);

  int n_levels() const noexcept { return static_cast<int>(values_.size()); }
  /// Label of level s (1-based).
  double value(int s) const { return values_.at(static_cast<std::size_t>(s - 1)); }
  const std::vector<double>& values() const noexcept { return values_; }
  bool contains(int s) const noexcept { return s >= 1 && s <= n_levels(); }

  bool operator==(const RatingScale&) const = default;

 private:
  std::vector<double> values_;
};

/// A rating with dense 0-based user and item indices.
struct RatingTriple {
  std::int32_t user = 0;
  std::int32_t item = 0;
  int level = 0;

  bool operator==(const RatingTriple&) const = default;
};

/// A rating as read from a file, before id remapping.
struct ExternalRating {
  std::int64_t user = 0;
  std::int64_t item = 0;
  int level = 0;
};

/// One side of the dual index: the counterpart index and the level.
struct Entry {
  std::int32_t index = 0;
  int level = 0;

  bool operator==(const Entry&) const = default;
};

/// Dense index <-> external id map. Dense order follows ascending external id.
class IdMap {
 public:
  IdMap() = default;
  explicit IdMap(std::vector<std::int64_t> sorted_ids);

  std::size_t size() const noexcept { return ids_.size(); }
  std::int64_t external(std::int32_t dense) const { return ids_.at(static_cast<std::size_t>(dense)); }
  std::optional<std::int32_t> find(std::int64_t external) const;
  const std::vector<std::int64_t>& ids() const noexcept { return ids_; }

  bool operator==(const IdMap& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::int64_t> ids_;
  std::unordered_map<std::int64_t, std::int32_t> lookup_;
};

enum class RatingFormat { kMl100kTab, kMl1mColonColon, kCsv };

/// Accepts "ml100k_tab", "ml1m_coloncolon" and "csv".
RatingFormat parse_format_tag(std::string_view tag);

/// Immutable sparse rating matrix indexed both by user and by item.
class RatingStore {
 public:
  RatingStore() = default;

  /// Assigns dense ids in ascending external-id order.
  static RatingStore from_external(std::span<const ExternalRating> ratings, const RatingScale& scale);

  /// Resolves ids against existing maps. Ratings whose user or item is not
  /// in the maps are skipped and counted in *dropped when it is non-null.
  static RatingStore from_external(std::span<const ExternalRating> ratings, const RatingScale& scale,
                                   const IdMap& users, const IdMap& items, std::size_t* dropped);

  static RatingStore from_triples(std::vector<RatingTriple> triples, const RatingScale& scale,
                                  IdMap users, IdMap items);

  std::int32_t n_users() const noexcept { return static_cast<std::int32_t>(users_.size()); }
  std::int32_t n_items() const noexcept { return static_cast<std::int32_t>(items_.size()); }
  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }

  const RatingScale& scale() const noexcept { return scale_; }
  const IdMap& user_ids() const noexcept { return users_; }
  const IdMap& item_ids() const noexcept { return items_; }

  /// Triples sorted by (user, item).
  const std::vector<RatingTriple>& triples() const noexcept { return triples_; }

  /// Items rated by user u, sorted by item index.
  std::span<const Entry> by_user(std::int32_t u) const;
  /// Users who rated item i, sorted by user index.
  std::span<const Entry> by_item(std::int32_t i) const;

  /// Level of (u, i), or nullopt when unrated.
  std::optional<int> level(std::int32_t u, std::int32_t i) const;

  bool operator==(const RatingStore& other) const {
    return scale_ == other.scale_ && users_ == other.users_ && items_ == other.items_ &&
           triples_ == other.triples_;
  }

 private:
  RatingScale scale_;
  IdMap users_;
  IdMap items_;
  std::vector<RatingTriple> triples_;
  std::vector<std::size_t> user_offsets_;
  std::vector<Entry> user_entries_;
  std::vector<std::size_t> item_offsets_;
  std::vector<Entry> item_entries_;
};

/// Reads raw ratings. Malformed lines raise kParse with the line number,
/// out-of-scale levels raise kRange, repeated (user, item) pairs kDuplicate.
std::vector<ExternalRating> read_external_ratings(std::istream& in, RatingFormat format,
                                                  const RatingScale& scale);

RatingStore parse_ratings(std::istream& in, RatingFormat format, const RatingScale& scale = RatingScale{});

/// Sorted "user,item,rating" CSV with LF line endings.
void write_canonical_csv(const RatingStore& store, std::ostream& out);

/// 64-bit FNV-1a hash of the canonical CSV export.
std::uint64_t content_hash(const RatingStore& store);

/// Keeps users with more than min_user_ratings ratings and items with more
/// than min_item_ratings ratings, iterated to a fixed point.
RatingStore filter_min_counts(const RatingStore& store, int min_user_ratings, int min_item_ratings);

struct DataSplit {
  RatingStore train;
  RatingStore test;
  std::uint64_t seed = 0;
};

/// Per-user random split. Both halves keep the source id maps.
DataSplit split_per_user(const RatingStore& store, double train_fraction, std::uint64_t seed);

}  // namespace obm
