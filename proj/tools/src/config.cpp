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

#include "obm_tools/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "obm/error.hpp"

namespace obm::tools {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kUsage, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

template <class T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, value);
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

std::string_view format_tag(RatingFormat f) {
  switch (f) {
    case RatingFormat::kMl100kTab:
      return "ml100k_tab";
    case RatingFormat::kMl1mColonColon:
      return "ml1m_coloncolon";
    case RatingFormat::kCsv:
      return "csv";
  }
  return "csv";
}

// Shortest text that reads back to the same double.
std::string real(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string_view variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::kUser:
      return "user";
    case Variant::kUserCorr:
      return "user_corr";
    case Variant::kUserItem:
      return "user_item";
    case Variant::kUserItemCorr:
      return "user_item_corr";
    case Variant::kSvd:
      return "svd";
  }
  return "user";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kUser, Variant::kUserCorr, Variant::kUserItem, Variant::kUserItemCorr, Variant::kSvd}) {
    if (variant_name(v) == name) return v;
  }
  throw Error(ErrorCode::kUsage, "unknown variant '" + std::string(name) + "'");
}

bool uses_item_side(Variant v) noexcept { return v == Variant::kUserItem || v == Variant::kUserItemCorr; }
bool uses_correlations(Variant v) noexcept { return v == Variant::kUserCorr || v == Variant::kUserItemCorr; }

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "data.path") {
    data_path = value;
  } else if (key == "data.format") {
    data_format = parse_format_tag(value);
  } else if (key == "data.levels") {
    levels = parse_integer<int>(key, value);
  } else if (key == "filter.min_user_ratings") {
    min_user_ratings = parse_integer<int>(key, value);
  } else if (key == "filter.min_item_ratings") {
    min_item_ratings = parse_integer<int>(key, value);
  } else if (key == "split.train_fraction") {
    train_fraction = parse_real(key, value);
  } else if (key == "split.seed") {
    split_seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "split.validation_fraction") {
    validation_fraction = parse_real(key, value);
  } else if (key == "model.variant") {
    variant = parse_variant(value);
  } else if (key == "model.scheme") {
    scheme = parse_scheme_kind(value);
  } else if (key == "model.d") {
    d = parse_integer<int>(key, value);
  } else if (key == "model.d_prime") {
    d_prime = parse_integer<int>(key, value);
  } else if (key == "graph.k_top") {
    k_top = parse_integer<int>(key, value);
  } else if (key == "graph.min_overlap") {
    min_overlap = parse_integer<int>(key, value);
  } else if (key == "train.method") {
    train.method = parse_train_method(value);
  } else if (key == "train.cd_steps") {
    train.cd_steps = parse_integer<int>(key, value);
  } else if (key == "train.learning_rate") {
    train.learning_rate = parse_real(key, value);
  } else if (key == "train.block_size") {
    train.block_size = parse_integer<int>(key, value);
  } else if (key == "train.max_epochs") {
    train.max_epochs = parse_integer<int>(key, value);
  } else if (key == "train.init_sigma") {
    train.init_sigma = parse_real(key, value);
  } else if (key == "train.seed") {
    train.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "train.l2") {
    train.l2 = parse_real(key, value);
  } else if (key == "train.patience") {
    train.patience = parse_integer<int>(key, value);
  } else if (key == "train.epochs_per_phase") {
    epochs_per_phase = parse_integer<int>(key, value);
  } else if (key == "svd.rank") {
    svd.rank = parse_integer<int>(key, value);
  } else if (key == "svd.learning_rate") {
    svd.learning_rate = parse_real(key, value);
  } else if (key == "svd.epochs") {
    svd.epochs = parse_integer<int>(key, value);
  } else if (key == "svd.l2") {
    svd.l2 = parse_real(key, value);
  } else if (key == "svd.init_sigma") {
    svd.init_sigma = parse_real(key, value);
  } else if (key == "svd.seed") {
    svd.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "predict.read_out") {
    read_out = parse_read_out(value);
  } else if (key == "eval.metrics") {
    metrics = split_list(value);
    for (const auto& m : metrics) {
      if (m != "mae" && m != "ranking") bad_value(key, value);
    }
  } else if (key == "eval.n_similar") {
    n_similar = parse_integer<int>(key, value);
  } else if (key == "eval.half_life") {
    half_life = parse_real(key, value);
  } else if (key == "eval.rank_invert") {
    rank_invert = parse_bool(key, value);
  } else if (key == "eval.cutoffs") {
    cutoffs.clear();
    for (const auto& c : split_list(value)) cutoffs.push_back(parse_integer<int>(key, c));
  } else if (key == "output.dir") {
    output_dir = value;
  } else if (key == "train.item_side") {
    item_side = parse_bool(key, value);
  } else {
    throw Error(ErrorCode::kUsage, "unknown config key '" + std::string(key) + "'");
  }
}

void ExperimentConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::kUsage, "expected key=value, got '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kUsage, what);
  };
  require(levels >= 2, "data.levels must be at least 2");
  require(min_user_ratings >= 0 && min_item_ratings >= 0, "filter thresholds must be non-negative");
  require(train_fraction > 0.0 && train_fraction < 1.0, "split.train_fraction must lie in (0, 1)");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, "split.validation_fraction must lie in [0, 1)");
  require(d >= 1, "model.d must be positive");
  require(d_prime >= 0, "model.d_prime must be non-negative");
  require(k_top >= 1, "graph.k_top must be positive");
  require(min_overlap >= 2, "graph.min_overlap must be at least 2");
  require(epochs_per_phase >= 1, "train.epochs_per_phase must be positive");
  require(n_similar >= 1, "eval.n_similar must be positive");
  require(half_life > 1.0, "eval.half_life must exceed 1");
  for (int c : cutoffs) require(c >= 1, "eval.cutoffs must be positive");
  require(!(train.method == TrainMethod::kGaussianPl && scheme != SchemeKind::kGaussian),
          "train.method=gaussian_pl requires model.scheme=gaussian");
  require(!(uses_item_side(variant) && item_side && d_prime < 1), "joint variants need model.d_prime >= 1");
  train.validate();
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  auto line = [&](std::string_view k, const std::string& v) { os << k << '=' << v << '\n'; };
  std::string joined;
  line("data.path", data_path);
  line("data.format", std::string(format_tag(data_format)));
  line("data.levels", std::to_string(levels));
  line("filter.min_user_ratings", std::to_string(min_user_ratings));
  line("filter.min_item_ratings", std::to_string(min_item_ratings));
  line("split.train_fraction", real(train_fraction));
  line("split.seed", std::to_string(split_seed));
  line("split.validation_fraction", real(validation_fraction));
  line("model.variant", std::string(variant_name(variant)));
  line("model.scheme", std::string(scheme_name(scheme)));
  line("model.d", std::to_string(d));
  line("model.d_prime", std::to_string(d_prime));
  line("graph.k_top", std::to_string(k_top));
  line("graph.min_overlap", std::to_string(min_overlap));
  line("train.method", std::string(method_name(train.method)));
  line("train.cd_steps", std::to_string(train.cd_steps));
  line("train.learning_rate", real(train.learning_rate));
  line("train.block_size", std::to_string(train.block_size));
  line("train.max_epochs", std::to_string(train.max_epochs));
  line("train.init_sigma", real(train.init_sigma));
  line("train.seed", std::to_string(train.seed));
  line("train.l2", real(train.l2));
  line("train.patience", std::to_string(train.patience));
  line("train.epochs_per_phase", std::to_string(epochs_per_phase));
  line("train.item_side", item_side ? "true" : "false");
  line("svd.rank", std::to_string(svd.rank));
  line("svd.learning_rate", real(svd.learning_rate));
  line("svd.epochs", std::to_string(svd.epochs));
  line("svd.l2", real(svd.l2));
  line("svd.init_sigma", real(svd.init_sigma));
  line("svd.seed", std::to_string(svd.seed));
  line("predict.read_out", std::string(read_out_name(read_out)));
  joined.clear();
  for (const auto& m : metrics) joined += (joined.empty() ? "" : ",") + m;
  line("eval.metrics", joined);
  line("eval.n_similar", std::to_string(n_similar));
  line("eval.half_life", real(half_life));
  line("eval.rank_invert", rank_invert ? "true" : "false");
  joined.clear();
  for (int c : cutoffs) joined += (joined.empty() ? "" : ",") + std::to_string(c);
  line("eval.cutoffs", joined);
  line("output.dir", output_dir);
  return os.str();
}

ExperimentConfig load_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      config.set_assignment(t);
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file " + path);
  return load_config(in);
}

}  // namespace obm::tools
