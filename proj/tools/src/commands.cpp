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

#include "obm_tools/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "obm/baselines.hpp"
#include "obm/eval.hpp"
#include "obm/inference.hpp"
#include "obm/joint_bm.hpp"

namespace obm::tools {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUsage:
      return kExitUsage;
    case ErrorCode::kDivergence:
    case ErrorCode::kDegenerateData:
    case ErrorCode::kEnumerationTooLarge:
      return kExitNumeric;
    default:
      return kExitIo;
  }
}

namespace {

// Exclusive marker file for the lifetime of a command that writes outputs.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".obm.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (f == nullptr) throw Error(ErrorCode::kIo, "output directory is locked by another run: " + dir.string());
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
};

fs::path data_dir(const ExperimentConfig& config) { return fs::path(config.output_dir) / "data"; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

void echo_config(const ExperimentConfig& config) {
  auto out = open_out(fs::path(config.output_dir) / "config.txt");
  out << config.to_text();
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

RatingScale scale_of(const ExperimentConfig& config) { return RatingScale(config.levels); }

FeatureScheme scheme_for(const ExperimentConfig& config, const RatingStore& train) {
  if (config.scheme == SchemeKind::kGaussian) {
    return FeatureScheme::gaussian(train.scale(), fit_gaussian_normalizer(train));
  }
  return make_scheme(config.scheme, train.scale());
}

// Everything needed to answer queries with a loaded archive.
class LoadedModel {
 public:
  LoadedModel(ModelArchive archive, const PreparedData& data)
      : archive_(std::move(archive)), scheme_(archive_.feature_scheme()), data_(&data) {
    if (archive_.dataset_hash != data.train_hash || !(archive_.users == data.train.user_ids()) ||
        !(archive_.items == data.train.item_ids())) {
      throw Error(ErrorCode::kCompatibility, "archive was trained on a different dataset (hash " +
                                                 hex(archive_.dataset_hash) + ", prepared " + hex(data.train_hash) +
                                                 ")");
    }
    if (archive_.user_side && archive_.item_side) {
      joint_.user_side = *archive_.user_side;
      joint_.item_side = *archive_.item_side;
      posteriors_ = compute_joint_posteriors(joint_, scheme_, data.train);
    }
  }

  bool is_svd() const { return archive_.svd.has_value(); }
  bool is_joint() const { return archive_.item_side.has_value(); }
  const ModelArchive& archive() const { return archive_; }
  const FeatureScheme& scheme() const { return scheme_; }

  Prediction predict(std::int32_t u, std::int32_t i) const {
    if (archive_.svd) {
      const double v = svd_predict(*archive_.svd, u, i);
      Prediction p;
      const RatingScale& scale = archive_.scale;
      int best = 1;
      for (int s = 2; s <= scale.n_levels(); ++s) {
        if (std::abs(scale.value(s) - v) < std::abs(scale.value(best) - v)) best = s;
      }
      p.level = best;
      p.expected_value = v;
      p.confidence = std::numeric_limits<double>::quiet_NaN();
      return p;
    }
    if (is_joint()) return predict_joint(joint_, scheme_, data_->train, u, i, &posteriors_);
    if (u < 0 || u >= data_->train.n_users()) throw Error(ErrorCode::kColdStart, "unknown user");
    return predict_meanfield(*archive_.user_side, scheme_, data_->train.by_user(u), i);
  }

 private:
  ModelArchive archive_;
  FeatureScheme scheme_;
  const PreparedData* data_;
  JointModelParams joint_;
  JointPosteriors posteriors_;
};

double user_validation_mae(const BmParams& params, const FeatureScheme& scheme, const RatingStore& fit,
                           const RatingStore& held_out, ReadOut read_out) {
  std::vector<double> predicted;
  std::vector<double> truth;
  for (std::int32_t u = 0; u < held_out.n_users(); ++u) {
    const auto targets = held_out.by_user(u);
    if (targets.empty() || fit.by_user(u).empty()) continue;
    const UserPredictor predictor(params, scheme, fit.by_user(u));
    for (const Entry& e : targets) {
      try {
        predicted.push_back(read_value(predictor.meanfield(e.index), read_out, fit.scale()));
        truth.push_back(fit.scale().value(e.level));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kColdStart) throw;
      }
    }
  }
  return predicted.empty() ? std::numeric_limits<double>::quiet_NaN() : mae(predicted, truth);
}

double joint_validation_mae(const JointModelParams& joint, const FeatureScheme& scheme, const RatingStore& fit,
                            const RatingStore& held_out, ReadOut read_out) {
  const JointPosteriors post = compute_joint_posteriors(joint, scheme, fit);
  std::vector<double> predicted;
  std::vector<double> truth;
  for (const auto& t : held_out.triples()) {
    try {
      predicted.push_back(read_value(predict_joint(joint, scheme, fit, t.user, t.item, &post), read_out, fit.scale()));
      truth.push_back(fit.scale().value(t.level));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kColdStart) throw;
    }
  }
  return predicted.empty() ? std::numeric_limits<double>::quiet_NaN() : mae(predicted, truth);
}

std::int32_t dense_id(const IdMap& map, std::int64_t external, const char* what) {
  const auto id = map.find(external);
  if (!id) throw Error(ErrorCode::kColdStart, std::string(what) + " " + std::to_string(external) + " is not in the training data");
  return *id;
}

void write_prediction_header(std::ostream& out) { out << "user,item,true_level,map_level,expected,confidence\n"; }

void write_prediction_row(std::ostream& out, std::int64_t user, std::int64_t item, std::optional<int> truth,
                          const Prediction& p) {
  out << user << ',' << item << ',' << (truth ? std::to_string(*truth) : std::string()) << ',' << p.level << ','
      << real(p.expected_value) << ',' << real(p.confidence) << '\n';
}

}  // namespace

std::string cache_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kCacheEnv); env != nullptr && *env != '\0') return env;
  return (fs::path(config.output_dir) / "cache").string();
}

PreparedData load_prepared(const ExperimentConfig& config) {
  const RatingScale scale = scale_of(config);
  PreparedData data;
  {
    auto in = open_in(data_dir(config) / "train.csv");
    const auto ratings = read_external_ratings(in, RatingFormat::kCsv, scale);
    data.train = RatingStore::from_external(ratings, scale);
  }
  {
    auto in = open_in(data_dir(config) / "test.csv");
    const auto ratings = read_external_ratings(in, RatingFormat::kCsv, scale);
    data.test = RatingStore::from_external(ratings, scale, data.train.user_ids(), data.train.item_ids(),
                                           &data.dropped_test);
  }
  data.train_hash = content_hash(data.train);
  return data;
}

NeighborGraph cached_graph(const ExperimentConfig& config, const RatingStore& train, std::uint64_t train_hash,
                           Axis axis) {
  const fs::path dir = cache_dir(config);
  const fs::path file = dir / ("graph_" + hex(train_hash) + "_" + std::string(axis_name(axis)) + "_k" +
                               std::to_string(config.k_top) + "_o" + std::to_string(config.min_overlap) + ".csv");
  if (fs::exists(file)) {
    auto in = open_in(file);
    return read_graph_csv(in, train, axis, config.k_top, config.min_overlap);
  }
  NeighborGraph graph = build_topk(train, axis, config.k_top, config.min_overlap);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create cache directory " + dir.string());
  const fs::path tmp = file.string() + ".tmp";
  {
    auto out = open_out(tmp);
    write_graph_csv(graph, train, out);
  }
  fs::rename(tmp, file, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot write cache file " + file.string());
  return graph;
}

void cmd_prepare(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  if (config.data_path.empty()) throw Error(ErrorCode::kUsage, "data.path is not set");
  DirectoryLock lock(config.output_dir);
  echo_config(config);
  std::ifstream in(config.data_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open dataset " + config.data_path);
  const RatingStore raw = parse_ratings(in, config.data_format, scale_of(config));
  const RatingStore filtered = filter_min_counts(raw, config.min_user_ratings, config.min_item_ratings);
  const DataSplit split = split_per_user(filtered, config.train_fraction, config.split_seed);

  fs::create_directories(data_dir(config));
  {
    auto f = open_out(data_dir(config) / "train.csv");
    write_canonical_csv(split.train, f);
  }
  {
    auto f = open_out(data_dir(config) / "test.csv");
    write_canonical_csv(split.test, f);
  }
  const PreparedData data = load_prepared(config);
  cached_graph(config, data.train, data.train_hash, Axis::kUser);
  cached_graph(config, data.train, data.train_hash, Axis::kItem);

  std::ostringstream stats;
  stats << "users=" << filtered.n_users() << '\n'
        << "items=" << filtered.n_items() << '\n'
        << "ratings=" << filtered.size() << '\n'
        << "raw_users=" << raw.n_users() << '\n'
        << "raw_items=" << raw.n_items() << '\n'
        << "raw_ratings=" << raw.size() << '\n'
        << "train_ratings=" << split.train.size() << '\n'
        << "test_ratings=" << split.test.size() << '\n'
        << "train_hash=" << hex(data.train_hash) << '\n';
  auto f = open_out(data_dir(config) / "stats.txt");
  f << stats.str();
  out << stats.str();
}

void cmd_train(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  DirectoryLock lock(config.output_dir);
  echo_config(config);
  const PreparedData data = load_prepared(config);
  const FeatureScheme scheme = scheme_for(config, data.train);

  ModelArchive archive;
  archive.variant = std::string(variant_name(config.variant));
  archive.scheme = config.scheme;
  archive.normalizer = scheme.normalizer();
  archive.scale = data.train.scale();
  archive.dataset_hash = data.train_hash;
  archive.k_top = config.k_top;
  archive.min_overlap = config.min_overlap;
  archive.users = data.train.user_ids();
  archive.items = data.train.item_ids();

  auto log = open_out(fs::path(config.output_dir) / "train_log.csv");
  log << "epoch,objective_estimate,val_mae,seconds\n";

  if (config.variant == Variant::kSvd) {
    archive.svd = svd_train(data.train, config.svd);
    out << "trained svd rank=" << config.svd.rank << '\n';
  } else {
    // Optional validation carve-out for early stopping.
    RatingStore fit = data.train;
    std::optional<RatingStore> held_out;
    if (config.validation_fraction > 0.0) {
      DataSplit v = split_per_user(data.train, 1.0 - config.validation_fraction, config.split_seed + 1);
      fit = std::move(v.train);
      held_out = std::move(v.test);
    }
    const bool corr = uses_correlations(config.variant);
    const NeighborGraph item_graph = corr ? cached_graph(config, data.train, data.train_hash, Axis::kItem)
                                          : empty_graph(Axis::kItem, data.train.n_items());
    TrainConfig tc = config.train;
    tc.hidden_units = config.d;
    std::vector<EpochReport> reports;
    if (uses_item_side(config.variant)) {
      const NeighborGraph user_graph = corr ? cached_graph(config, data.train, data.train_hash, Axis::kUser)
                                            : empty_graph(Axis::kUser, data.train.n_users());
      JointTrainConfig jc;
      jc.base = tc;
      jc.item_hidden = config.d_prime;
      jc.alternations = tc.max_epochs;
      jc.epochs_per_phase = config.epochs_per_phase;
      jc.item_side = config.item_side;
      JointValidator validator;
      if (held_out) {
        validator = [&](const JointModelParams& j) {
          return joint_validation_mae(j, scheme, fit, *held_out, config.read_out);
        };
      }
      JointTrainResult result = alternating_train(jc, fit, scheme, item_graph, user_graph, validator);
      archive.user_side = std::move(result.params.user_side);
      archive.item_side = std::move(result.params.item_side);
      reports = std::move(result.log);
    } else {
      Validator validator;
      if (held_out) {
        validator = [&](const BmParams& p) { return user_validation_mae(p, scheme, fit, *held_out, config.read_out); };
      }
      TrainResult result = sgd_train(tc, fit, scheme, item_graph, validator);
      archive.user_side = std::move(result.params);
      reports = std::move(result.log);
    }
    for (const auto& r : reports) log << format_epoch_csv(r) << '\n';
    out << "trained " << archive.variant << ' ' << scheme_name(config.scheme) << " epochs=" << reports.size() << '\n';
  }
  const fs::path model = fs::path(config.output_dir) / "model.obm";
  save_model(archive, model.string());
  out << "model=" << model.string() << '\n';
}

void cmd_evaluate(const ExperimentConfig& config, const std::string& archive_path, std::ostream& out) {
  config.validate();
  DirectoryLock lock(config.output_dir);
  echo_config(config);
  const PreparedData data = load_prepared(config);
  if (data.test.empty()) throw Error(ErrorCode::kEmptyTest, "the test split is empty");
  const LoadedModel model(load_model(archive_path), data);
  MetricsReport report;
  report.add("variant", model.archive().variant);
  report.add("scheme", std::string(scheme_name(model.archive().scheme)));
  report.add("read_out", std::string(read_out_name(config.read_out)));

  const bool want_mae = std::find(config.metrics.begin(), config.metrics.end(), "mae") != config.metrics.end();
  const bool want_ranking =
      std::find(config.metrics.begin(), config.metrics.end(), "ranking") != config.metrics.end();

  if (want_mae) {
    auto pred_out = open_out(fs::path(config.output_dir) / "predictions.csv");
    write_prediction_header(pred_out);
    std::vector<double> predicted;
    std::vector<double> truth;
    std::size_t cold = 0;
    for (const auto& t : data.test.triples()) {
      Prediction p;
      try {
        p = model.predict(t.user, t.item);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kColdStart) throw;
        ++cold;
        continue;
      }
      const double value = model.is_svd() ? p.expected_value : read_value(p, config.read_out, data.train.scale());
      predicted.push_back(value);
      truth.push_back(data.train.scale().value(t.level));
      write_prediction_row(pred_out, data.train.user_ids().external(t.user), data.train.item_ids().external(t.item),
                           t.level, p);
    }
    if (predicted.empty()) throw Error(ErrorCode::kEmptyTest, "no test rating could be predicted");
    report.add("mae", mae(predicted, truth));
    report.add("predicted", std::to_string(predicted.size()));
    report.add("cold_start", std::to_string(cold + data.dropped_test));
  }

  if (want_ranking) {
    const NeighborGraph user_graph = cached_graph(config, data.train, data.train_hash, Axis::kUser);
    const bool model_ranks = !model.is_svd() && !model.is_joint();
    std::vector<std::vector<std::int32_t>> ranked;
    std::vector<std::vector<std::int32_t>> popular;
    std::vector<std::vector<std::int32_t>> tests;
    for (std::int32_t u = 0; u < data.test.n_users(); ++u) {
      const auto test_items = data.test.by_user(u);
      if (test_items.empty() || data.train.by_user(u).empty()) continue;
      const auto candidates = candidate_items(data.train, user_graph, u, config.n_similar);
      std::vector<std::int32_t> t;
      for (const Entry& e : test_items) t.push_back(e.index);
      tests.push_back(std::move(t));
      auto to_ids = [](const RankedList& list) {
        std::vector<std::int32_t> ids;
        ids.reserve(list.size());
        for (const auto& r : list) ids.push_back(r.item);
        return ids;
      };
      popular.push_back(to_ids(popularity_rank(data.train, user_graph, u, candidates, config.n_similar)));
      if (model_ranks) {
        ranked.push_back(to_ids(rank_items(*model.archive().user_side, model.scheme(), data.train.by_user(u), candidates,
                                       config.rank_invert)));
      }
    }
    const RankingUtilityConfig ucfg{config.half_life};
    report.add("popularity_utility", ranking_utility(popular, tests, ucfg));
    {
      auto f = open_out(fs::path(config.output_dir) / "popularity_curves.csv");
      write_curve_csv(ranking_curve(popular, tests, config.cutoffs, ucfg), f);
    }
    if (model_ranks) {
      report.add("utility", ranking_utility(ranked, tests, ucfg));
      const auto curve = ranking_curve(ranked, tests, config.cutoffs, ucfg);
      for (const auto& p : curve) {
        report.add("precision@" + std::to_string(p.n), p.precision);
        report.add("recall@" + std::to_string(p.n), p.recall);
      }
      auto f = open_out(fs::path(config.output_dir) / "curves.csv");
      write_curve_csv(curve, f);
    }
    report.add("ranked_users", std::to_string(tests.size()));
  }

  std::ostringstream text;
  report.write(text);
  auto f = open_out(fs::path(config.output_dir) / "metrics.txt");
  f << text.str();
  out << text.str();
}

void cmd_predict(const ExperimentConfig& config, const std::string& archive_path, std::optional<std::int64_t> user,
                 std::optional<std::int64_t> item, std::ostream& out) {
  config.validate();
  if (user.has_value() != item.has_value()) throw Error(ErrorCode::kUsage, "--user and --item go together");
  const PreparedData data = load_prepared(config);
  const LoadedModel model(load_model(archive_path), data);
  write_prediction_header(out);
  if (user) {
    const std::int32_t u = dense_id(data.train.user_ids(), *user, "user");
    const std::int32_t i = dense_id(data.train.item_ids(), *item, "item");
    write_prediction_row(out, *user, *item, data.train.level(u, i), model.predict(u, i));
    return;
  }
  for (const auto& t : data.test.triples()) {
    try {
      write_prediction_row(out, data.train.user_ids().external(t.user), data.train.item_ids().external(t.item),
                           t.level, model.predict(t.user, t.item));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kColdStart) throw;
    }
  }
}

void cmd_rank(const ExperimentConfig& config, const std::string& archive_path, std::int64_t user, int top,
              std::ostream& out) {
  config.validate();
  if (top < 1) throw Error(ErrorCode::kUsage, "--top must be positive");
  const PreparedData data = load_prepared(config);
  const LoadedModel model(load_model(archive_path), data);
  if (!model.archive().user_side) throw Error(ErrorCode::kUsage, "ranking needs a Boltzmann machine archive");
  const std::int32_t u = dense_id(data.train.user_ids(), user, "user");
  const NeighborGraph user_graph = cached_graph(config, data.train, data.train_hash, Axis::kUser);
  const auto candidates = candidate_items(data.train, user_graph, u, config.n_similar);
  const RankedList list =
      rank_items(*model.archive().user_side, model.scheme(), data.train.by_user(u), candidates, config.rank_invert);
  out << "rank,item,score\n";
  for (std::size_t k = 0; k < list.size() && k < static_cast<std::size_t>(top); ++k) {
    out << k + 1 << ',' << data.train.item_ids().external(list[k].item) << ',' << real(list[k].score) << '\n';
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ordinal Boltzmann machine recommender"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key=value configuration file");
    sub->add_option("-s,--set", overrides, "override one config key (key=value); repeatable");
  };
  std::string archive_path;
  std::optional<std::int64_t> user;
  std::optional<std::int64_t> item;
  int top = 10;

  auto* prepare = app.add_subcommand("prepare", "filter, split and build neighbourhoods");
  common(prepare);
  auto* train = app.add_subcommand("train", "train the configured variant");
  common(train);
  auto* evaluate = app.add_subcommand("evaluate", "score a model on the test split");
  common(evaluate);
  evaluate->add_option("-m,--model", archive_path, "model archive (default <output.dir>/model.obm)");
  auto* predict = app.add_subcommand("predict", "predict one rating or the whole test split");
  common(predict);
  predict->add_option("-m,--model", archive_path, "model archive");
  predict->add_option("--user", user, "external user id");
  predict->add_option("--item", item, "external item id");
  auto* rank = app.add_subcommand("rank", "rank candidate items for one user");
  common(rank);
  rank->add_option("-m,--model", archive_path, "model archive");
  rank->add_option("--user", user, "external user id")->required();
  rank->add_option("--top", top, "list length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << error_code_name(ErrorCode::kUsage) << ": " << msg << '\n';
    return kExitUsage;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config_file(config_path);
    for (const auto& o : overrides) config.set_assignment(o);
    if (archive_path.empty()) archive_path = (fs::path(config.output_dir) / "model.obm").string();
    if (prepare->parsed()) {
      cmd_prepare(config, out);
    } else if (train->parsed()) {
      cmd_train(config, out);
    } else if (evaluate->parsed()) {
      cmd_evaluate(config, archive_path, out);
    } else if (predict->parsed()) {
      cmd_predict(config, archive_path, user, item, out);
    } else if (rank->parsed()) {
      cmd_rank(config, archive_path, *user, top, out);
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << error_code_name(e.code()) << ": " << msg << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << error_code_name(ErrorCode::kIo) << ": " << e.what() << '\n';
    return kExitIo;
  } catch (const std::bad_alloc&) {
    err << "error: " << error_code_name(ErrorCode::kIo) << ": out of memory\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace obm::tools
