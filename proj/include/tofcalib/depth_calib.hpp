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

// Depth-assisted calibration. Denoised corner depths first re-estimate K by
// forcing back-projected neighbouring corners to sit one square apart; poses
// and distortion are then re-initialized and everything is refined jointly on
// reprojection and depth residuals.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tofcalib/dataset.hpp"
#include "tofcalib/depth_denoise.hpp"
#include "tofcalib/error.hpp"
#include "tofcalib/objective.hpp"
#include "tofcalib/traditional_calib.hpp"

namespace tofcalib {

/// Depth per corner, per image (mm).
using CornerDepths = std::vector<std::vector<double>>;

struct KUpdateState {
  int iteration = 0;
  Intrinsics K;
  std::vector<double> epsilon;  // per image, mm
  double median_epsilon = 0.0;
  double cost = 0.0;  // square-size objective after the update
  bool converged = false;
};

/// One residual ||x_c^i - x_c^l|| - square_size per horizontally or vertically
/// adjacent corner pair, image-major. NaN where a corner cannot be undistorted.
Eigen::VectorXd square_size_residuals(const CalibrationDataset& data, const CornerDepths& depths,
                                      const Intrinsics& K, const Distortion& kc);

/// d(residuals)/d(fx, fy, cx, cy).
Eigen::MatrixXd square_size_jacobian(const CalibrationDataset& data, const CornerDepths& depths,
                                     const Intrinsics& K, const Distortion& kc);

struct KUpdateResult {
  Intrinsics K;
  LmReport report;
};

/// Minimizes the squared square_size_residuals over (fx, fy, cx, cy).
KUpdateResult update_K(const CalibrationDataset& data, const CornerDepths& depths, const Intrinsics& K0,
                       const Distortion& kc, const LmOptions& opts = {});

/// Mean |residual| over each image's neighbour pairs (mm); +inf for an image
/// whose corners cannot be back-projected.
std::vector<double> error_in_3d(const CalibrationDataset& data, const CornerDepths& depths,
                                const Intrinsics& K, const Distortion& kc);

/// At least half of the images (rounded up) within 20% of the square size.
bool k_update_converged(std::span<const double> epsilon, double square_size);

/// Per-image RMS of the pixel residual components and of the depth residuals
/// under `params`, each floored at 1e-3. Throws NumericalFailure when a
/// residual is not finite.
VarianceWeights estimate_variances(const CalibrationDataset& data, const CornerDepths& depths,
                                   const CalibParams& params);

/// Joint residual vector, 3 * M * N entries.
Eigen::VectorXd depth_residuals(const CalibParams& params, const CalibrationDataset& data,
                                const CornerDepths& depths, const VarianceWeights& weights);

/// Joint objective over the distortion coefficients only.
SolveResult update_distortion(const CalibrationDataset& data, const CornerDepths& depths,
                              const CalibParams& params, const VarianceWeights& weights,
                              const LmOptions& opts = {});

/// Joint objective over every parameter, weights held fixed.
SolveResult global_optimize_depth(const CalibrationDataset& data, const CornerDepths& depths,
                                  const CalibParams& start, const VarianceWeights& weights,
                                  const LmOptions& opts = {});

/// Planarized depths for every image; images whose plane fit fails keep their
/// raw corner depths. `fell_back[j]` counts image j's corners on raw depth.
CornerDepths planarize_all(const CalibrationDataset& data, const Intrinsics& K, const Distortion& kc,
                           const RansacOptions& opts, std::vector<std::size_t>* fell_back = nullptr,
                           unsigned jobs = 0);

struct DepthCalibOptions {
  TraditionalOptions traditional;
  RansacOptions ransac;
  int max_k_iterations = 10;
  LmOptions k_update;
  LmOptions local;
  LmOptions distortion;
  LmOptions global;
  unsigned jobs = 0;  // worker threads for per-image stages, 0 = all cores
};

struct StageCost {
  std::string stage;
  double cost = 0.0;
};

struct DepthCalibDiagnostics {
  CalibParams traditional;
  std::vector<StageCost> stages;
  std::vector<KUpdateState> k_trace;
  bool k_converged = false;
  std::vector<std::size_t> planarize_fallbacks;  // per image, after the K loop
  VarianceWeights weights;
  std::vector<LmReport> local_reports;
  LmReport distortion_report;
  LmReport global_report;
  /// K loop converged, every solve stopped on a tolerance, and the result is
  /// finite with positive focal lengths.
  bool converged = false;
};

struct DepthCalibResult {
  CalibParams params;
  DepthCalibDiagnostics diagnostics;
};

/// A pipeline stage failed. Carries the stage name and everything recorded
/// before the failure.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause, DepthCalibDiagnostics diagnostics);
  const std::string& stage() const { return stage_; }
  const DepthCalibDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  std::string stage_;
  DepthCalibDiagnostics diagnostics_;
};

DepthCalibResult depth_based_calib(const CalibrationDataset& data, const DepthCalibOptions& opts = {});

}  // namespace tofcalib
