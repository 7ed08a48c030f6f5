// Copyright 2026 The gckit Authors.
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

#include <stdexcept>
#include <string>

namespace gckit {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kMalformedHeader,
  kDimensionMismatch,
  kNonFinite,
  kPositiveLogProb,
  kLogOfZero,
  kOverflow,
  kUnderflow,
  kAbsoluteContinuity,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kPositiveLogProb: return "positive log-probability";
    case ErrorCode::kLogOfZero: return "log of zero";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kUnderflow: return "underflow";
    case ErrorCode::kAbsoluteContinuity: return "absolute continuity violated";
  }
  return "unknown";
}

/// All library failures are reported through this exception; `code()` tells
/// callers which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Configuration problems, as opposed to problems with the data itself.
  bool is_config_error() const noexcept {
    return code_ == ErrorCode::kInvalidArgument;
  }

 private:
  ErrorCode code_;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace gckit
