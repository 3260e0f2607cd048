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

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "obm/baselines.hpp"
#include "obm/corpus.hpp"
#include "obm/features.hpp"
#include "obm/inference.hpp"
#include "obm/learning.hpp"
#include "obm/user_bm.hpp"

namespace {

using namespace obm;

const FeatureScheme kOrdinal = FeatureScheme::ordinal(RatingScale(5));

struct Instance {
  BmParams params;
  std::vector<Entry> ratings;
};

// A user with `rated` ratings over `items` items and fully linked neighbours.
Instance make_instance(int items, int hidden, int rated, int links) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> w(0.0, 0.05);
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (int i = 0; i < items; ++i) {
    for (int k = 1; k <= links; ++k) pairs.emplace_back(i, (i + k) % items);
  }
  Instance in;
  in.params = BmParams::zeros(items, hidden, kOrdinal, PairSet::from_pairs(items, pairs));
  for (double& v : in.params.alpha) v = w(rng);
  for (double& v : in.params.beta) v = w(rng);
  for (double& v : in.params.gamma) v = w(rng);
  for (double& v : in.params.lambda) v = w(rng);
  std::fill(in.params.observed.begin(), in.params.observed.end(), 1);
  std::uniform_int_distribution<int> level(1, 5);
  for (int k = 0; k < rated; ++k) in.ratings.push_back({static_cast<std::int32_t>(k * (items / rated)), level(rng)});
  return in;
}

void BM_PlGradient(benchmark::State& state) {
  const Instance in = make_instance(1000, 20, static_cast<int>(state.range(0)), 10);
  const Evidence ev{in.ratings};
  for (auto _ : state) benchmark::DoNotOptimize(pl_gradient(in.params, kOrdinal, ev));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlGradient)->Arg(20)->Arg(100)->Arg(400);

void BM_CdGradient(benchmark::State& state) {
  const Instance in = make_instance(1000, 20, 100, 10);
  const Evidence ev{in.ratings};
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cd_gradient(in.params, kOrdinal, ev, static_cast<int>(state.range(0)), rng));
  }
}
BENCHMARK(BM_CdGradient)->Arg(1)->Arg(5);

void BM_MeanField(benchmark::State& state) {
  const Instance in = make_instance(1000, 20, 100, 10);
  const UserPredictor pred(in.params, kOrdinal, in.ratings);
  std::int32_t item = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pred.meanfield(item));
    item = (item + 1) % 1000;
  }
}
BENCHMARK(BM_MeanField);

void BM_SvdEpoch(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> user(0, 899);
  std::uniform_int_distribution<int> item(0, 899);
  std::uniform_int_distribution<int> level(1, 5);
  std::set<std::pair<int, int>> seen;
  std::vector<RatingTriple> triples;
  while (triples.size() < 80000) {
    const int u = user(rng);
    const int i = item(rng);
    if (seen.emplace(u, i).second) triples.push_back({u, i, level(rng)});
  }
  std::vector<std::int64_t> ids(900);
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  const RatingStore store = RatingStore::from_triples(triples, RatingScale(5), IdMap(ids), IdMap(ids));
  SvdConfig config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(svd_train(store, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(store.size()));
}
BENCHMARK(BM_SvdEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
