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

#include "obm/error.hpp"
#include "obm/neighbors.hpp"
#include "obm_tools/archive.hpp"
#include "obm_tools/config.hpp"

namespace obm::tools {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitNumeric = 3 };

int exit_code_for(ErrorCode code) noexcept;

/// Environment variable naming the neighbour-graph cache directory.
inline constexpr const char* kCacheEnv = "OBM_CACHE_DIR";

/// Train/test stores as written by prepare, sharing the train id maps.
struct PreparedData {
  RatingStore train;
  RatingStore test;
  std::size_t dropped_test = 0;  // test ratings whose user or item is not in train
  std::uint64_t train_hash = 0;
};

PreparedData load_prepared(const ExperimentConfig& config);

/// Reads the cached graph for (train hash, axis, k_top, min_overlap) or builds
/// and caches it.
NeighborGraph cached_graph(const ExperimentConfig& config, const RatingStore& train, std::uint64_t train_hash,
                           Axis axis);

std::string cache_dir(const ExperimentConfig& config);

void cmd_prepare(const ExperimentConfig& config, std::ostream& out);
void cmd_train(const ExperimentConfig& config, std::ostream& out);
void cmd_evaluate(const ExperimentConfig& config, const std::string& archive_path, std::ostream& out);
/// One prediction when both ids are given, otherwise the whole test split.
void cmd_predict(const ExperimentConfig& config, const std::string& archive_path, std::optional<std::int64_t> user,
                 std::optional<std::int64_t> item, std::ostream& out);
void cmd_rank(const ExperimentConfig& config, const std::string& archive_path, std::int64_t user, int top,
              std::ostream& out);

/// Parses arguments, runs a command and maps failures to exit codes. Errors
/// are reported as a single "error: <code>: <message>" line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace obm::tools
