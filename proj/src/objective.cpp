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

#include "tofcalib/objective.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "tofcalib/error.hpp"

namespace tofcalib {

CalibObjective::CalibObjective(const CalibrationDataset& data, std::vector<std::vector<double>> depths,
                               VarianceWeights weights, std::vector<std::size_t> images)
    : data_(&data), depths_(std::move(depths)), weights_(std::move(weights)), images_(std::move(images)) {}

CalibObjective CalibObjective::reprojection(const CalibrationDataset& data) {
  std::vector<std::size_t> images(data.image_count());
  std::iota(images.begin(), images.end(), 0);
  return CalibObjective(data, {}, {}, std::move(images));
}

CalibObjective CalibObjective::joint(const CalibrationDataset& data, std::vector<std::vector<double>> depths,
                                     VarianceWeights weights) {
  const std::size_t n = data.image_count();
  if (depths.size() != n || weights.sigma_x.size() != n || weights.sigma_d.size() != n) {
    raise(ErrorCode::InvalidArgument, "joint objective needs depths and weights for every image");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (depths[j].size() != data.board.corner_count()) {
      raise(ErrorCode::InvalidArgument, "joint objective needs one depth per corner");
    }
    if (!(weights.sigma_x[j] > 0.0) || !(weights.sigma_d[j] > 0.0)) {
      raise(ErrorCode::InvalidArgument, "variance weights must be positive");
    }
  }
  std::vector<std::size_t> images(n);
  std::iota(images.begin(), images.end(), 0);
  return CalibObjective(data, std::move(depths), std::move(weights), std::move(images));
}

CalibObjective CalibObjective::restricted_to(std::vector<std::size_t> images) const {
  CalibObjective copy = *this;
  copy.images_ = std::move(images);
  return copy;
}

Eigen::Index CalibObjective::residual_count() const {
  return static_cast<Eigen::Index>(images_.size() * data_->board.corner_count()) * rows_per_corner();
}

Eigen::VectorXd CalibObjective::residuals(const CalibParams& params) const {
  Eigen::VectorXd r;
  evaluate(params, &r, nullptr);
  return r;
}

Eigen::MatrixXd CalibObjective::jacobian(const CalibParams& params) const {
  Eigen::MatrixXd J;
  evaluate(params, nullptr, &J);
  return J;
}

void CalibObjective::evaluate(const CalibParams& params, Eigen::VectorXd* r, Eigen::MatrixXd* J) const {
  if (params.poses.size() != data_->image_count()) {
    raise(ErrorCode::InvalidArgument, "parameter pose count does not match the dataset");
  }
  const Eigen::Index rows = residual_count();
  const int per = rows_per_corner();
  if (r) r->resize(rows);
  if (J) J->setZero(rows, params.parameter_count());
  const auto& board = data_->board;
  const std::size_t m = board.corner_count();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  Eigen::Index row = 0;
  for (std::size_t j : images_) {
    const Pose& pose = params.poses[j];
    const Matrix3 R = pose.rotation();
    const double wx = has_depth() ? 1.0 / weights_.sigma_x[j] : 1.0;
    const double wd = has_depth() ? 1.0 / weights_.sigma_d[j] : 1.0;
    const Eigen::Index pcol = CalibParams::pose_offset(j);
    for (std::size_t i = 0; i < m; ++i, row += per) {
      const Point3 x_w = board.corner(i);
      const Point3 x_c = R * x_w + pose.t;
      if (!(x_c.z() > 1e-9)) {
        if (r) r->segment(row, per).setConstant(nan);
        continue;
      }
      const Point2& measured = data_->images[j].corners_px[i];
      if (J) {
        ProjectionJacobian pj;
        const Point2 p = project(x_w, pose, params.K, params.kc, pj);
        if (r) r->segment<2>(row) = wx * (p - measured);
        J->block<2, 4>(row, CalibParams::kIntrinsicOffset) = wx * pj.d_intrinsics;
        J->block<2, 4>(row, CalibParams::kDistortionOffset) = wx * pj.d_distortion;
        J->block<2, 3>(row, pcol) = wx * pj.d_rvec;
        J->block<2, 3>(row, pcol + 3) = wx * pj.d_t;
      } else {
        const Point2 p = project(x_w, pose, params.K, params.kc);
        r->segment<2>(row) = wx * (p - measured);
      }
      if (has_depth()) {
        if (r) (*r)(row + 2) = wd * (depth_of(x_w, pose) - depths_[j][i]);
        if (J) {
          const Eigen::RowVector3d dd_dc = x_c.transpose() / x_c.norm();
          J->block<1, 3>(row + 2, pcol) = wd * dd_dc * rotated_point_jacobian(pose.rvec, x_w);
          J->block<1, 3>(row + 2, pcol + 3) = wd * dd_dc;
        }
      }
    }
  }
}

SolveResult minimize(const CalibObjective& objective, const CalibParams& start,
                     std::span<const Eigen::Index> free, const LmOptions& opts) {
  const Eigen::VectorXd base = start.pack();
  auto expand = [&](const Eigen::VectorXd& sub) {
    Eigen::VectorXd full = base;
    for (std::size_t k = 0; k < free.size(); ++k) full(free[k]) = sub(static_cast<Eigen::Index>(k));
    return full;
  };
  Eigen::VectorXd x0(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) x0(static_cast<Eigen::Index>(k)) = base(free[k]);

  auto residual = [&](const Eigen::VectorXd& sub) {
    return objective.residuals(CalibParams::unpack(expand(sub)));
  };
  auto jacobian = [&](const Eigen::VectorXd& sub) {
    const Eigen::MatrixXd full = objective.jacobian(CalibParams::unpack(expand(sub)));
    Eigen::MatrixXd out(full.rows(), static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = full.col(free[k]);
    return out;
  };
  LmResult lm = lm_solve(residual, jacobian, x0, opts);
  return {CalibParams::unpack(expand(lm.x)), std::move(lm.report)};
}

std::vector<Eigen::Index> all_parameters(const CalibParams& params) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(params.parameter_count()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

std::vector<Eigen::Index> pose_parameters(std::size_t image) {
  std::vector<Eigen::Index> idx(6);
  std::iota(idx.begin(), idx.end(), CalibParams::pose_offset(image));
  return idx;
}

std::vector<Eigen::Index> distortion_parameters() {
  return {CalibParams::kDistortionOffset, CalibParams::kDistortionOffset + 1,
          CalibParams::kDistortionOffset + 2, CalibParams::kDistortionOffset + 3};
}

std::vector<Eigen::Index> intrinsic_parameters() { return {0, 1, 2, 3}; }

}  // namespace tofcalib
