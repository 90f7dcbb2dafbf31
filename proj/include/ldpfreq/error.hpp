// Copyright 2026 The ldpfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldpfreq {

enum class ErrorCode {
  kNonPrimeModulus,
  kModulusTooLarge,
  kZeroInverse,
  kIndexOutOfRange,
  kNotCanonical,
  kZeroVector,
  kParameterOverflow,
  kInvalidArgument,
  kInputOutOfRange,
  kTooLargeForExactMode,
  kUniverseMismatch,
  kDegenerateIntersection,
  kNoFeasibleParams,
  kBlockMismatch,
  kInputNotStarCanonical,
  kMalformedMessage,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPrimeModulus: return "NonPrimeModulus";
    case ErrorCode::kModulusTooLarge: return "ModulusTooLarge";
    case ErrorCode::kZeroInverse: return "ZeroInverse";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kNotCanonical: return "NotCanonical";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kParameterOverflow: return "ParameterOverflow";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInputOutOfRange: return "InputOutOfRange";
    case ErrorCode::kTooLargeForExactMode: return "TooLargeForExactMode";
    case ErrorCode::kUniverseMismatch: return "UniverseMismatch";
    case ErrorCode::kDegenerateIntersection: return "DegenerateIntersection";
    case ErrorCode::kNoFeasibleParams: return "NoFeasibleParams";
    case ErrorCode::kBlockMismatch: return "BlockMismatch";
    case ErrorCode::kInputNotStarCanonical: return "InputNotStarCanonical";
    case ErrorCode::kMalformedMessage: return "MalformedMessage";
  }
  return "Unknown";
}

// All library failures are reported as Error. The code is stable and meant
// for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for failures that stem from parameter derivation rather than from
  // malformed caller input.
  bool is_derivation_failure() const noexcept {
    return code_ == ErrorCode::kNoFeasibleParams ||
           code_ == ErrorCode::kParameterOverflow ||
           code_ == ErrorCode::kNonPrimeModulus ||
           code_ == ErrorCode::kModulusTooLarge;
  }

 private:
  ErrorCode code_;
};

}  // namespace ldpfreq
