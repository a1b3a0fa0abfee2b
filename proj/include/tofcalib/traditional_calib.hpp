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

// Baseline checkerboard calibration from 2D corners only: homography
// bootstrap, per-image pose refinement, then a bundle over every parameter
// minimizing the summed squared reprojection error.

#include <span>
#include <vector>

#include "tofcalib/dataset.hpp"
#include "tofcalib/objective.hpp"
#include "tofcalib/solvers.hpp"

namespace tofcalib {

struct InitOptions {
  /// When the closed-form intrinsics fail, or put the principal point outside
  /// the image, restart from the image centre and estimate focal lengths only.
  bool centre_fallback = true;
};

/// kc = 0, K from the plane homographies, poses by decomposition.
/// Throws DegenerateConfiguration for fewer than two images or four corners.
CalibParams init_params(const CalibrationDataset& data, const InitOptions& opts = {});

/// Focal lengths from homographies with the principal point held at (cx, cy).
Intrinsics focal_from_homographies(std::span<const Homography> homographies, double cx, double cy);

/// Refines one image's pose against its corners with K and kc held fixed.
Pose local_optimize(std::span<const Point2> image_corners, const BoardGeometry& board,
                    const Intrinsics& K, const Distortion& kc, const Pose& pose0,
                    const LmOptions& opts = {}, LmReport* report = nullptr);

/// Minimizes the reprojection objective over every parameter.
SolveResult global_optimize(const CalibrationDataset& data, const CalibParams& start,
                            const LmOptions& opts = {});

/// Stacked (projected - measured) pixel residuals, image-major, corner-minor,
/// (x, y) innermost: 2 * M * N entries.
Eigen::VectorXd reprojection_residuals(const CalibParams& params, const CalibrationDataset& data);

struct TraditionalOptions {
  InitOptions init;
  LmOptions local;
  LmOptions global;
};

struct TraditionalResult {
  CalibParams params;
  CalibParams initial;
  std::vector<LmReport> local_reports;
  LmReport global_report;
};

/// init_params -> local_optimize per image -> global_optimize.
TraditionalResult traditional_calibrate(const CalibrationDataset& data,
                                        const TraditionalOptions& opts = {});

}  // namespace tofcalib
