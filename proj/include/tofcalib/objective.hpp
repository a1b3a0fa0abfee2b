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

// Least-squares objectives over CalibParams. Two flavours share one
// residual layout (image-major, corner-minor):
//   reprojection: per corner (dx, dy) in pixels;
//   joint:        per corner (dx / sx_j, dy / sx_j, dd / sd_j), where dd is the
//                 model depth minus the measured (denoised) depth.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tofcalib/dataset.hpp"
#include "tofcalib/solvers.hpp"

namespace tofcalib {

/// Per-image noise scales of the joint objective.
struct VarianceWeights {
  std::vector<double> sigma_x;  // pixels
  std::vector<double> sigma_d;  // mm
};

class CalibObjective {
 public:
  static CalibObjective reprojection(const CalibrationDataset& data);
  static CalibObjective joint(const CalibrationDataset& data, std::vector<std::vector<double>> depths,
                              VarianceWeights weights);

  /// Same objective, summed over `images` only.
  CalibObjective restricted_to(std::vector<std::size_t> images) const;

  bool has_depth() const { return !depths_.empty(); }
  int rows_per_corner() const { return has_depth() ? 3 : 2; }
  Eigen::Index residual_count() const;

  /// Residuals of a point that ends up behind the camera are NaN.
  Eigen::VectorXd residuals(const CalibParams& params) const;
  /// Dense Jacobian with one column per packed parameter of `params`.
  Eigen::MatrixXd jacobian(const CalibParams& params) const;
  double cost(const CalibParams& params) const { return residuals(params).squaredNorm(); }

 private:
  CalibObjective(const CalibrationDataset& data, std::vector<std::vector<double>> depths,
                 VarianceWeights weights, std::vector<std::size_t> images);
  void evaluate(const CalibParams& params, Eigen::VectorXd* r, Eigen::MatrixXd* J) const;

  const CalibrationDataset* data_;
  std::vector<std::vector<double>> depths_;
  VarianceWeights weights_;
  std::vector<std::size_t> images_;
};

struct SolveResult {
  CalibParams params;
  LmReport report;
};

/// Levenberg-Marquardt over the packed parameters listed in `free`; all
/// others stay at their values in `start`.
SolveResult minimize(const CalibObjective& objective, const CalibParams& start,
                     std::span<const Eigen::Index> free, const LmOptions& opts);

std::vector<Eigen::Index> all_parameters(const CalibParams& params);
std::vector<Eigen::Index> pose_parameters(std::size_t image);
std::vector<Eigen::Index> distortion_parameters();
std::vector<Eigen::Index> intrinsic_parameters();

}  // namespace tofcalib
