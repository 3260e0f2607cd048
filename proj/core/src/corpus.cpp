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

#include "obm/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "obm/error.hpp"

namespace obm {

RatingScale::RatingScale(int n_levels) {
  if (n_levels < 2) throw Error(ErrorCode::kRange, "rating scale needs at least 2 levels");
  values_.resize(static_cast<std::size_t>(n_levels));
  std::iota(values_.begin(), values_.end(), 1.0);
}

RatingScale::RatingScale(std::vector<double> level_values) : values_(std::move(level_values)) {
  if (values_.size() < 2) throw Error(ErrorCode::kRange, "rating scale needs at least 2 levels");
  for (std::size_t s = 1; s < values_.size(); ++s) {
    if (!(values_[s - 1] < values_[s])) {
      throw Error(ErrorCode::kRange, "rating scale labels must be strictly increasing");
    }
  }
}

IdMap::IdMap(std::vector<std::int64_t> sorted_ids) : ids_(std::move(sorted_ids)) {
  lookup_.reserve(ids_.size());
  for (std::size_t k = 0; k < ids_.size(); ++k) {
    if (k > 0 && !(ids_[k - 1] < ids_[k])) {
      throw Error(ErrorCode::kIndex, "id map must be strictly increasing");
    }
    lookup_.emplace(ids_[k], static_cast<std::int32_t>(k));
  }
}

std::optional<std::int32_t> IdMap::find(std::int64_t external) const {
  auto it = lookup_.find(external);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

RatingFormat parse_format_tag(std::string_view tag) {
  if (tag == "ml100k_tab") return RatingFormat::kMl100kTab;
  if (tag == "ml1m_coloncolon") return RatingFormat::kMl1mColonColon;
  if (tag == "csv") return RatingFormat::kCsv;
  throw Error(ErrorCode::kUsage, "unknown rating format '" + std::string(tag) + "'");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_int(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

[[noreturn]] void parse_failure(std::size_t line_no, std::string_view line) {
  throw Error(ErrorCode::kParse,
              "malformed rating line " + std::to_string(line_no) + ": '" + std::string(line) + "'");
}

struct PairHash {
  std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& p) const noexcept {
    return std::hash<std::int64_t>{}(p.first) * 1000003u ^ std::hash<std::int64_t>{}(p.second);
  }
};

void build_index(const std::vector<RatingTriple>& triples, std::size_t n_rows, bool by_user,
                 std::vector<std::size_t>& offsets, std::vector<Entry>& entries) {
  offsets.assign(n_rows + 1, 0);
  for (const auto& t : triples) ++offsets[static_cast<std::size_t>(by_user ? t.user : t.item) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  entries.resize(triples.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  // triples are sorted by (user, item), so both sides come out sorted.
  for (const auto& t : triples) {
    auto row = static_cast<std::size_t>(by_user ? t.user : t.item);
    entries[cursor[row]++] = Entry{by_user ? t.item : t.user, t.level};
  }
}

IdMap sorted_map(std::vector<std::int64_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return IdMap(std::move(ids));
}

}  // namespace

std::vector<ExternalRating> read_external_ratings(std::istream& in, RatingFormat format,
                                                  const RatingScale& scale) {
  std::vector<ExternalRating> out;
  std::unordered_set<std::pair<std::int64_t, std::int64_t>, PairHash> seen;
  std::string raw;
  std::size_t line_no = 0;
  bool header_pending = format == RatingFormat::kCsv;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (header_pending) {
      auto head = split_fields(line, ",");
      if (head.size() < 3 || trim(head[0]) != "user" || trim(head[1]) != "item" ||
          trim(head[2]) != "rating") {
        throw Error(ErrorCode::kParse, "line 1: expected csv header 'user,item,rating'");
      }
      header_pending = false;
      continue;
    }
    std::vector<std::string_view> fields;
    switch (format) {
      case RatingFormat::kMl100kTab: fields = split_fields(line, "\t"); break;
      case RatingFormat::kMl1mColonColon: fields = split_fields(line, "::"); break;
      case RatingFormat::kCsv: fields = split_fields(line, ","); break;
    }
    if (fields.size() < 3 || fields.size() > 4) parse_failure(line_no, line);
    ExternalRating r;
    if (!parse_int(fields[0], r.user) || !parse_int(fields[1], r.item) || !parse_int(fields[2], r.level)) {
      parse_failure(line_no, line);
    }
    if (!scale.contains(r.level)) {
      throw Error(ErrorCode::kRange, "rating " + std::to_string(r.level) + " outside 1.." +
                                         std::to_string(scale.n_levels()) + " at line " +
                                         std::to_string(line_no));
    }
    if (!seen.emplace(r.user, r.item).second) {
      throw Error(ErrorCode::kDuplicate, "duplicate rating for user " + std::to_string(r.user) +
                                             ", item " + std::to_string(r.item) + " at line " +
                                             std::to_string(line_no));
    }
    out.push_back(r);
  }
  if (header_pending) throw Error(ErrorCode::kParse, "line 1: missing csv header");
  return out;
}

RatingStore RatingStore::from_external(std::span<const ExternalRating> ratings, const RatingScale& scale) {
  std::vector<std::int64_t> users;
  std::vector<std::int64_t> items;
  users.reserve(ratings.size());
  items.reserve(ratings.size());
  for (const auto& r : ratings) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  return from_external(ratings, scale, sorted_map(std::move(users)), sorted_map(std::move(items)), nullptr);
}

RatingStore RatingStore::from_external(std::span<const ExternalRating> ratings, const RatingScale& scale,
                                       const IdMap& users, const IdMap& items, std::size_t* dropped) {
  std::vector<RatingTriple> triples;
  triples.reserve(ratings.size());
  std::size_t skipped = 0;
  for (const auto& r : ratings) {
    auto u = users.find(r.user);
    auto i = items.find(r.item);
    if (!u || !i) {
      ++skipped;
      continue;
    }
    triples.push_back(RatingTriple{*u, *i, r.level});
  }
  if (dropped != nullptr) *dropped = skipped;
  return from_triples(std::move(triples), scale, users, items);
}

RatingStore RatingStore::from_triples(std::vector<RatingTriple> triples, const RatingScale& scale,
                                      IdMap users, IdMap items) {
  RatingStore store;
  store.scale_ = scale;
  store.users_ = std::move(users);
  store.items_ = std::move(items);
  for (const auto& t : triples) {
    if (t.user < 0 || t.user >= store.n_users() || t.item < 0 || t.item >= store.n_items()) {
      throw Error(ErrorCode::kIndex, "rating references an index outside the id maps");
    }
    if (!scale.contains(t.level)) {
      throw Error(ErrorCode::kRange, "rating level " + std::to_string(t.level) + " outside scale");
    }
  }
  std::sort(triples.begin(), triples.end(), [](const RatingTriple& a, const RatingTriple& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t k = 1; k < triples.size(); ++k) {
    if (triples[k].user == triples[k - 1].user && triples[k].item == triples[k - 1].item) {
      throw Error(ErrorCode::kDuplicate,
                  "duplicate rating for user " + std::to_string(store.users_.external(triples[k].user)) +
                      ", item " + std::to_string(store.items_.external(triples[k].item)));
    }
  }
  store.triples_ = std::move(triples);
  build_index(store.triples_, store.users_.size(), true, store.user_offsets_, store.user_entries_);
  build_index(store.triples_, store.items_.size(), false, store.item_offsets_, store.item_entries_);
  return store;
}

std::span<const Entry> RatingStore::by_user(std::int32_t u) const {
  if (u < 0 || u >= n_users()) throw Error(ErrorCode::kIndex, "user index out of range");
  auto k = static_cast<std::size_t>(u);
  return {user_entries_.data() + user_offsets_[k], user_offsets_[k + 1] - user_offsets_[k]};
}

std::span<const Entry> RatingStore::by_item(std::int32_t i) const {
  if (i < 0 || i >= n_items()) throw Error(ErrorCode::kIndex, "item index out of range");
  auto k = static_cast<std::size_t>(i);
  return {item_entries_.data() + item_offsets_[k], item_offsets_[k + 1] - item_offsets_[k]};
}

std::optional<int> RatingStore::level(std::int32_t u, std::int32_t i) const {
  auto row = by_user(u);
  auto it = std::lower_bound(row.begin(), row.end(), i,
                             [](const Entry& e, std::int32_t key) { return e.index < key; });
  if (it == row.end() || it->index != i) return std::nullopt;
  return it->level;
}

RatingStore parse_ratings(std::istream& in, RatingFormat format, const RatingScale& scale) {
  auto raw = read_external_ratings(in, format, scale);
  return RatingStore::from_external(raw, scale);
}

void write_canonical_csv(const RatingStore& store, std::ostream& out) {
  // Dense order already follows ascending external ids.
  out << "user,item,rating\n";
  for (const auto& t : store.triples()) {
    out << store.user_ids().external(t.user) << ',' << store.item_ids().external(t.item) << ','
        << t.level << '\n';
  }
}

std::uint64_t content_hash(const RatingStore& store) {
  std::ostringstream os;
  write_canonical_csv(store, os);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

RatingStore filter_min_counts(const RatingStore& store, int min_user_ratings, int min_item_ratings) {
  if (min_user_ratings < 0 || min_item_ratings < 0) {
    throw Error(ErrorCode::kRange, "filter thresholds must be non-negative");
  }
  std::vector<char> keep_user(static_cast<std::size_t>(store.n_users()), 1);
  std::vector<char> keep_item(static_cast<std::size_t>(store.n_items()), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> user_count(keep_user.size(), 0);
    std::vector<int> item_count(keep_item.size(), 0);
    for (const auto& t : store.triples()) {
      if (keep_user[static_cast<std::size_t>(t.user)] && keep_item[static_cast<std::size_t>(t.item)]) {
        ++user_count[static_cast<std::size_t>(t.user)];
        ++item_count[static_cast<std::size_t>(t.item)];
      }
    }
    for (std::size_t u = 0; u < keep_user.size(); ++u) {
      if (keep_user[u] && user_count[u] <= min_user_ratings) {
        keep_user[u] = 0;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < keep_item.size(); ++i) {
      if (keep_item[i] && item_count[i] <= min_item_ratings) {
        keep_item[i] = 0;
        changed = true;
      }
    }
  }
  std::vector<ExternalRating> kept;
  for (const auto& t : store.triples()) {
    if (keep_user[static_cast<std::size_t>(t.user)] && keep_item[static_cast<std::size_t>(t.item)]) {
      kept.push_back(ExternalRating{store.user_ids().external(t.user), store.item_ids().external(t.item), t.level});
    }
  }
  if (kept.empty()) throw Error(ErrorCode::kEmptyCorpus, "filtering removed every rating");
  return RatingStore::from_external(kept, store.scale());
}

DataSplit split_per_user(const RatingStore& store, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kRange, "train fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<RatingTriple> train;
  std::vector<RatingTriple> test;
  train.reserve(store.size());
  for (std::int32_t u = 0; u < store.n_users(); ++u) {
    auto row = store.by_user(u);
    if (row.empty()) continue;
    if (row.size() < 2) {
      throw Error(ErrorCode::kSplit, "user " + std::to_string(store.user_ids().external(u)) +
                                         " has a single rating and cannot be split");
    }
    std::vector<Entry> shuffled(row.begin(), row.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto n = static_cast<long>(shuffled.size());
    long n_train = std::lround(train_fraction * static_cast<double>(n));
    n_train = std::clamp(n_train, 1L, n - 1);
    for (long k = 0; k < n; ++k) {
      RatingTriple t{u, shuffled[static_cast<std::size_t>(k)].index, shuffled[static_cast<std::size_t>(k)].level};
      (k < n_train ? train : test).push_back(t);
    }
  }
  DataSplit split;
  split.train = RatingStore::from_triples(std::move(train), store.scale(), store.user_ids(), store.item_ids());
  split.test = RatingStore::from_triples(std::move(test), store.scale(), store.user_ids(), store.item_ids());
  split.seed = seed;
  return split;
}

}  // namespace obm
