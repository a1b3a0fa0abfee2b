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

// Generic numerical machinery: planar homographies, the zero-skew Zhang
// intrinsics bootstrap, homography-to-pose decomposition and a dense
// Levenberg-Marquardt engine driven by caller-supplied Jacobians.

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tofcalib/camera_model.hpp"

namespace tofcalib {

/// Maps board-plane coordinates (X, Y, 1) to homogeneous pixels. Stored with
/// H(2,2) = 1 whenever that entry is non-zero.
struct Homography {
  Matrix3 H = Matrix3::Identity();

  Point2 map(const Point2& board) const;
};

/// Normalized DLT. Throws DegenerateConfiguration for fewer than four
/// correspondences or collinear point sets.
Homography estimate_homography(std::span<const Point2> board_pts, std::span<const Point2> image_pts);

/// Closed-form intrinsics from >= 2 plane homographies with skew fixed at
/// zero (five-unknown image-of-absolute-conic system). Throws
/// DegenerateConfiguration when the system is rank deficient or yields no
/// positive-definite conic.
Intrinsics intrinsics_from_homographies(std::span<const Homography> homographies);

/// Pose of the board plane given K. The rotation is projected onto SO(3) and
/// the sign chosen so the board lies in front of the camera.
Pose decompose_homography(const Homography& homography, const Intrinsics& K);

struct LmOptions {
  int max_iterations = 100;  // Jacobian evaluations; rejected trials do not count
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double gradient_tol = 1e-10;  // on max |J^T r|
  double step_tol = 1e-12;      // relative to |x|
  double cost_tol = 1e-12;      // relative cost decrease of an accepted step
};

enum class LmTermination { Gradient, Step, Cost, MaxIterations };

std::string_view to_string(LmTermination reason);

struct LmReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;  // Jacobian evaluations
  LmTermination termination = LmTermination::MaxIterations;
  /// Cost after every accepted step, starting with the initial cost.
  std::vector<double> cost_trace;

  bool converged() const { return termination != LmTermination::MaxIterations; }
};

struct LmResult {
  Eigen::VectorXd x;
  LmReport report;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Minimizes |r(x)|^2. A trial point whose residual is non-finite is treated
/// as a rejected step; a non-finite residual at x0 or a non-finite Jacobian
/// throws NumericalFailure.
LmResult lm_solve(const ResidualFn& residual, const JacobianFn& jacobian, Eigen::VectorXd x0,
                  const LmOptions& opts = {});

/// Largest |J_analytic - J_fd| / max(1, |J_analytic|, |J_fd|) over all
/// entries, with central differences of step `step * max(1, |x_i|)`.
double check_jacobian(const ResidualFn& residual, const JacobianFn& jacobian,
                      const Eigen::VectorXd& x, double step);

}  // namespace tofcalib
