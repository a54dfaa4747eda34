/******************************************************************************
 * Copyright 2026 The trackvel Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace trackvel {

enum class ErrorCode {
  kInvalidInput,
  kDegenerateTrack,
  kNoSolution,
  kAmbiguousSign,
  kInsufficientData,
  kOracleTooLarge,
  kUnderconstrained,
  kScaleUnobservable,
  kSingularSystem,
  kGenerationFailed,
  kExperimentFailed,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kDegenerateTrack: return "degenerate track";
    case ErrorCode::kNoSolution: return "no solution";
    case ErrorCode::kAmbiguousSign: return "ambiguous sign";
    case ErrorCode::kInsufficientData: return "insufficient data";
    case ErrorCode::kOracleTooLarge: return "oracle too large";
    case ErrorCode::kUnderconstrained: return "underconstrained";
    case ErrorCode::kScaleUnobservable: return "scale unobservable";
    case ErrorCode::kSingularSystem: return "singular system";
    case ErrorCode::kGenerationFailed: return "generation failed";
    case ErrorCode::kExperimentFailed: return "experiment failed";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trackvel
