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

#include "tofcalib/error.hpp"

namespace tofcalib {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PointBehindCamera: return "PointBehindCamera";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::GridIncomplete: return "GridIncomplete";
    case ErrorCode::InsufficientInliers: return "InsufficientInliers";
    case ErrorCode::PlaneFitFailed: return "PlaneFitFailed";
    case ErrorCode::RayParallelToPlane: return "RayParallelToPlane";
    case ErrorCode::NegativeIntersection: return "NegativeIntersection";
    case ErrorCode::MissingDepth: return "MissingDepth";
    case ErrorCode::RejectionExhausted: return "RejectionExhausted";
    case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
    case ErrorCode::MissingGroundtruth: return "MissingGroundtruth";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace tofcalib
