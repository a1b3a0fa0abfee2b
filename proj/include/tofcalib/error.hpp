// Copyright 2026 The tofcalib Authors
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
#include <string_view>

namespace tofcalib {

enum class ErrorCode {
  PointBehindCamera,
  NoConvergence,
  NotARotation,
  InvalidArgument,
  DegenerateConfiguration,
  NumericalFailure,
  GridIncomplete,
  InsufficientInliers,
  PlaneFitFailed,
  RayParallelToPlane,
  NegativeIntersection,
  MissingDepth,
  RejectionExhausted,
  SubsetTooLarge,
  MissingGroundtruth,
  ParseError,
  SchemaVersionMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  /// The description without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& what);

}  // namespace tofcalib
