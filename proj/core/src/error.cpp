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

#include "obm/error.hpp"

namespace obm {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kRange: return "range_error";
    case ErrorCode::kDuplicate: return "duplicate_error";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kSplit: return "split_error";
    case ErrorCode::kDegenerateData: return "degenerate_data";
    case ErrorCode::kIndex: return "index_error";
    case ErrorCode::kEnumerationTooLarge: return "enumeration_too_large";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kColdStart: return "cold_start";
    case ErrorCode::kShape: return "shape_error";
    case ErrorCode::kVersion: return "version_error";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kCompatibility: return "compatibility_error";
    case ErrorCode::kEmptyTest: return "empty_test";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kUsage: return "usage_error";
  }
  return "unknown_error";
}

}  // namespace obm
