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

#include "tofcalib/traditional_calib.hpp"

#include <cmath>

#include <Eigen/QR>

#include "tofcalib/error.hpp"

namespace tofcalib {

namespace {

std::vector<Point2> board_plane_points(const BoardGeometry& board) {
  std::vector<Point2> pts;
  pts.reserve(board.corner_count());
  for (const auto& p : board.world_corners()) pts.emplace_back(p.x(), p.y());
  return pts;
}

bool principal_point_inside(const Intrinsics& K, int width, int height) {
  return K.cx >= 0.0 && K.cy >= 0.0 && K.cx <= width - 1 && K.cy <= height - 1;
}

}  // namespace

Intrinsics focal_from_homographies(std::span<const Homography> homographies, double cx, double cy) {
  if (homographies.empty()) raise(ErrorCode::DegenerateConfiguration, "no homographies");
  Matrix3 T;
  T << 1.0, 0.0, -cx, 0.0, 1.0, -cy, 0.0, 0.0, 1.0;
  const auto m = static_cast<Eigen::Index>(homographies.size());
  // Unknowns (1/fx^2, 1/fy^2) of the conic diag(1/fx^2, 1/fy^2, 1).
  Eigen::MatrixXd A(2 * m, 2);
  Eigen::VectorXd b(2 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    Matrix3 H = T * homographies[static_cast<std::size_t>(k)].H;
    H /= H.norm();
    const Vector3 h1 = H.col(0), h2 = H.col(1);
    A.row(2 * k) << h1(0) * h2(0), h1(1) * h2(1);
    b(2 * k) = -h1(2) * h2(2);
    A.row(2 * k + 1) << h1(0) * h1(0) - h2(0) * h2(0), h1(1) * h1(1) - h2(1) * h2(1);
    b(2 * k + 1) = -(h1(2) * h1(2) - h2(2) * h2(2));
  }
  const Eigen::Vector2d inv_f2 = A.colPivHouseholderQr().solve(b);
  if (!(inv_f2(0) > 0.0) || !(inv_f2(1) > 0.0) || !inv_f2.allFinite()) {
    raise(ErrorCode::DegenerateConfiguration, "focal-length system has no positive solution");
  }
  return {1.0 / std::sqrt(inv_f2(0)), 1.0 / std::sqrt(inv_f2(1)), cx, cy};
}

CalibParams init_params(const CalibrationDataset& data, const InitOptions& opts) {
  data.validate();
  if (data.image_count() < 2) raise(ErrorCode::DegenerateConfiguration, "calibration needs at least two images");
  if (data.board.corner_count() < 4) raise(ErrorCode::DegenerateConfiguration, "calibration needs at least four corners");

  const std::vector<Point2> board_pts = board_plane_points(data.board);
  std::vector<Homography> hs;
  hs.reserve(data.image_count());
  for (const auto& img : data.images) hs.push_back(estimate_homography(board_pts, img.corners_px));

  const bool have_size = data.image_width > 0 && data.image_height > 0;
  CalibParams params;
  try {
    params.K = intrinsics_from_homographies(hs);
    if (opts.centre_fallback && have_size &&
        !principal_point_inside(params.K, data.image_width, data.image_height)) {
      raise(ErrorCode::DegenerateConfiguration, "principal point outside the image");
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateConfiguration || !opts.centre_fallback || !have_size) throw;
    params.K = focal_from_homographies(hs, 0.5 * (data.image_width - 1), 0.5 * (data.image_height - 1));
  }
  params.kc = Distortion{};
  params.poses.reserve(hs.size());
  for (const auto& H : hs) params.poses.push_back(decompose_homography(H, params.K));
  return params;
}

Pose local_optimize(std::span<const Point2> image_corners, const BoardGeometry& board,
                    const Intrinsics& K, const Distortion& kc, const Pose& pose0,
                    const LmOptions& opts, LmReport* report) {
  if (!pose0.finite()) raise(ErrorCode::InvalidArgument, "initial pose is not finite");
  CalibrationDataset single;
  single.board = board;
  single.images.resize(1);
  single.images[0].corners_px.assign(image_corners.begin(), image_corners.end());
  CalibParams start{K, kc, {pose0}};
  const auto objective = CalibObjective::reprojection(single);
  const auto free = pose_parameters(0);
  SolveResult solved = minimize(objective, start, free, opts);
  if (report) *report = solved.report;
  return solved.params.poses[0];
}

SolveResult global_optimize(const CalibrationDataset& data, const CalibParams& start, const LmOptions& opts) {
  if (!start.finite()) raise(ErrorCode::InvalidArgument, "initial parameters are not finite");
  const auto objective = CalibObjective::reprojection(data);
  const auto free = all_parameters(start);
  return minimize(objective, start, free, opts);
}

Eigen::VectorXd reprojection_residuals(const CalibParams& params, const CalibrationDataset& data) {
  return CalibObjective::reprojection(data).residuals(params);
}

TraditionalResult traditional_calibrate(const CalibrationDataset& data, const TraditionalOptions& opts) {
  TraditionalResult result;
  result.initial = init_params(data, opts.init);
  CalibParams params = result.initial;
  result.local_reports.resize(data.image_count());
  for (std::size_t j = 0; j < data.image_count(); ++j) {
    params.poses[j] = local_optimize(data.images[j].corners_px, data.board, params.K, params.kc,
                                     params.poses[j], opts.local, &result.local_reports[j]);
  }
  SolveResult global = global_optimize(data, params, opts.global);
  result.params = std::move(global.params);
  result.global_report = std::move(global.report);
  return result;
}

}  // namespace tofcalib
