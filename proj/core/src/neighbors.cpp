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

#include "obm/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "obm/error.hpp"

namespace obm {

std::string_view axis_name(Axis axis) noexcept { return axis == Axis::kUser ? "user" : "item"; }

std::span<const Neighbor> NeighborGraph::neighbors(std::int32_t id) const {
  if (id < 0 || id >= size()) throw Error(ErrorCode::kIndex, "neighbour graph id out of range");
  return lists[static_cast<std::size_t>(id)];
}

namespace {

std::span<const Entry> row_of(const RatingStore& store, Axis axis, std::int32_t id) {
  return axis == Axis::kUser ? store.by_user(id) : store.by_item(id);
}

std::int32_t axis_size(const RatingStore& store, Axis axis) {
  return axis == Axis::kUser ? store.n_users() : store.n_items();
}

std::optional<double> correlate(std::span<const Entry> a, std::span<const Entry> b, int min_overlap,
                                std::vector<double>& xs, std::vector<double>& ys) {
  xs.clear();
  ys.clear();
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->index < ib->index) {
      ++ia;
    } else if (ib->index < ia->index) {
      ++ib;
    } else {
      xs.push_back(ia->level);
      ys.push_back(ib->level);
      ++ia;
      ++ib;
    }
  }
  if (static_cast<int>(xs.size()) < min_overlap) return std::nullopt;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double dx = xs[k] - mx;
    const double dy = ys[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void sort_and_truncate(std::vector<Neighbor>& list, int k_top) {
  std::sort(list.begin(), list.end(), [](const Neighbor& x, const Neighbor& y) {
    return x.corr != y.corr ? x.corr > y.corr : x.id < y.id;
  });
  if (static_cast<int>(list.size()) > k_top) list.resize(static_cast<std::size_t>(k_top));
}

}  // namespace

std::optional<double> pearson(const RatingStore& store, Axis axis, std::int32_t a, std::int32_t b,
                              int min_overlap) {
  if (a == b) throw Error(ErrorCode::kIndex, "pearson requires two distinct entities");
  if (min_overlap < 2) throw Error(ErrorCode::kRange, "min_overlap must be at least 2");
  std::vector<double> xs;
  std::vector<double> ys;
  return correlate(row_of(store, axis, a), row_of(store, axis, b), min_overlap, xs, ys);
}

NeighborGraph build_topk(const RatingStore& store, Axis axis, int k_top, int min_overlap) {
  if (k_top < 1) throw Error(ErrorCode::kRange, "K_top must be at least 1");
  if (min_overlap < 2) throw Error(ErrorCode::kRange, "min_overlap must be at least 2");
  NeighborGraph graph;
  graph.axis = axis;
  graph.k_top = k_top;
  graph.min_overlap = min_overlap;
  const std::int32_t n = axis_size(store, axis);
  graph.lists.resize(static_cast<std::size_t>(n));
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::int32_t a = 0; a < n; ++a) {
    auto row_a = row_of(store, axis, a);
    if (static_cast<int>(row_a.size()) < min_overlap) continue;
    for (std::int32_t b = a + 1; b < n; ++b) {
      auto row_b = row_of(store, axis, b);
      if (static_cast<int>(row_b.size()) < min_overlap) continue;
      auto c = correlate(row_a, row_b, min_overlap, xs, ys);
      if (c && *c > 0.0) {
        graph.lists[static_cast<std::size_t>(a)].push_back({b, *c});
        graph.lists[static_cast<std::size_t>(b)].push_back({a, *c});
      }
    }
    sort_and_truncate(graph.lists[static_cast<std::size_t>(a)], k_top);
  }
  return graph;
}

NeighborGraph empty_graph(Axis axis, std::int32_t size) {
  NeighborGraph graph;
  graph.axis = axis;
  graph.k_top = 0;
  graph.lists.resize(static_cast<std::size_t>(size));
  return graph;
}

void write_graph_csv(const NeighborGraph& graph, const RatingStore& store, std::ostream& out) {
  const IdMap& ids = graph.axis == Axis::kUser ? store.user_ids() : store.item_ids();
  out << "axis,id,neighbor,corr\n";
  char buf[64];
  for (std::int32_t a = 0; a < graph.size(); ++a) {
    for (const auto& nb : graph.neighbors(a)) {
      std::snprintf(buf, sizeof buf, "%.17g", nb.corr);
      out << axis_name(graph.axis) << ',' << ids.external(a) << ',' << ids.external(nb.id) << ',' << buf
          << '\n';
    }
  }
}

NeighborGraph read_graph_csv(std::istream& in, const RatingStore& store, Axis axis, int k_top,
                             int min_overlap) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("axis,id,neighbor,corr", 0) != 0) {
    throw Error(ErrorCode::kParse, "graph csv: missing header");
  }
  NeighborGraph graph;
  graph.axis = axis;
  graph.k_top = k_top;
  graph.min_overlap = min_overlap;
  graph.lists.resize(static_cast<std::size_t>(axis_size(store, axis)));
  const IdMap& ids = axis == Axis::kUser ? store.user_ids() : store.item_ids();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string axis_field, id_field, nb_field, corr_field;
    if (!std::getline(fields, axis_field, ',') || !std::getline(fields, id_field, ',') ||
        !std::getline(fields, nb_field, ',') || !std::getline(fields, corr_field)) {
      throw Error(ErrorCode::kParse, "graph csv: malformed line " + std::to_string(line_no));
    }
    if (axis_field != axis_name(axis)) {
      throw Error(ErrorCode::kCompatibility, "graph csv: unexpected axis '" + axis_field + "'");
    }
    try {
      auto a = ids.find(std::stoll(id_field));
      auto b = ids.find(std::stoll(nb_field));
      if (!a || !b) throw Error(ErrorCode::kCompatibility, "graph csv references unknown id");
      graph.lists[static_cast<std::size_t>(*a)].push_back({*b, std::stod(corr_field)});
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, "graph csv: malformed line " + std::to_string(line_no));
    }
  }
  return graph;
}

}  // namespace obm
