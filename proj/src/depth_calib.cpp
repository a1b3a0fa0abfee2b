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

#include "tofcalib/depth_calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/LU>

#include "tofcalib/detail/parallel.hpp"

namespace tofcalib {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kVarianceFloor = 1e-3;

struct LiftedCorner {
  Point3 x;
  Eigen::Matrix<double, 3, 4> dK;
  bool ok = false;
};

// Corner pixel scaled onto its viewing ray at range d, with the derivative of
// the 3D point with respect to (fx, fy, cx, cy) through the lens inversion.
LiftedCorner lift_corner(const Point2& px, double d, const Intrinsics& K, const Distortion& kc, bool jac) {
  LiftedCorner out;
  if (!std::isfinite(d) || !(d > 0.0)) return out;
  const Point2 xd = distorted_from_pixel(px, K);
  Point2 xn;
  try {
    xn = undistort(xd, kc);
  } catch (const Error&) {
    return out;
  }
  const Vector3 v(xn.x(), xn.y(), 1.0);
  const double norm = v.norm();
  const Vector3 w = v / norm;
  out.x = d * w;
  out.ok = true;
  if (!jac) return out;

  Eigen::Matrix<double, 2, 4> dxd = Eigen::Matrix<double, 2, 4>::Zero();
  dxd(0, 0) = -xd.x() / K.fx;
  dxd(0, 2) = -1.0 / K.fx;
  dxd(1, 1) = -xd.y() / K.fy;
  dxd(1, 3) = -1.0 / K.fy;
  DistortionJacobian dj;
  distort(xn, kc, dj);
  const Eigen::Matrix<double, 2, 4> dxn = dj.d_point.inverse() * dxd;
  const Matrix3 dw = (Matrix3::Identity() - w * w.transpose()) / norm;
  out.dK = d * dw.leftCols<2>() * dxn;
  return out;
}

struct NeighbourPair {
  std::size_t a, b;
};

std::vector<NeighbourPair> neighbour_pairs(const BoardGeometry& board) {
  std::vector<NeighbourPair> pairs;
  for (int r = 0; r < board.rows; ++r) {
    for (int c = 0; c < board.cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * board.cols + c;
      if (c + 1 < board.cols) pairs.push_back({i, i + 1});
      if (r + 1 < board.rows) pairs.push_back({i, i + static_cast<std::size_t>(board.cols)});
    }
  }
  return pairs;
}

void check_depths(const CalibrationDataset& data, const CornerDepths& depths) {
  if (depths.size() != data.image_count()) raise(ErrorCode::InvalidArgument, "need depths for every image");
  for (const auto& d : depths)
    if (d.size() != data.board.corner_count()) raise(ErrorCode::InvalidArgument, "need one depth per corner");
}

void eval_square_size(const CalibrationDataset& data, const CornerDepths& depths, const Intrinsics& K,
                      const Distortion& kc, Eigen::VectorXd* r, Eigen::MatrixXd* J) {
  check_depths(data, depths);
  const auto pairs = neighbour_pairs(data.board);
  const double s = data.board.square_size;
  const auto n = static_cast<Eigen::Index>(pairs.size() * data.image_count());
  if (r) r->resize(n);
  if (J) J->setZero(n, 4);
  Eigen::Index row = 0;
  std::vector<LiftedCorner> lifted(data.board.corner_count());
  for (std::size_t j = 0; j < data.image_count(); ++j) {
    const auto& corners = data.images[j].corners_px;
    for (std::size_t i = 0; i < lifted.size(); ++i) lifted[i] = lift_corner(corners[i], depths[j][i], K, kc, J);
    for (const auto& p : pairs) {
      const auto& a = lifted[p.a];
      const auto& b = lifted[p.b];
      if (!a.ok || !b.ok) {
        if (r) (*r)(row) = kNaN;
        if (J) J->row(row).setConstant(kNaN);
        ++row;
        continue;
      }
      const Vector3 diff = a.x - b.x;
      const double len = diff.norm();
      if (r) (*r)(row) = len - s;
      if (J && len > 0.0) J->row(row) = (diff / len).transpose() * (a.dK - b.dK);
      ++row;
    }
  }
}

VarianceWeights unit_weights(std::size_t n) { return {std::vector<double>(n, 1.0), std::vector<double>(n, 1.0)}; }

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace

Eigen::VectorXd square_size_residuals(const CalibrationDataset& data, const CornerDepths& depths,
                                      const Intrinsics& K, const Distortion& kc) {
  Eigen::VectorXd r;
  eval_square_size(data, depths, K, kc, &r, nullptr);
  return r;
}

Eigen::MatrixXd square_size_jacobian(const CalibrationDataset& data, const CornerDepths& depths,
                                     const Intrinsics& K, const Distortion& kc) {
  Eigen::MatrixXd J;
  eval_square_size(data, depths, K, kc, nullptr, &J);
  return J;
}

KUpdateResult update_K(const CalibrationDataset& data, const CornerDepths& depths, const Intrinsics& K0,
                       const Distortion& kc, const LmOptions& opts) {
  auto to_k = [](const Eigen::VectorXd& x) { return Intrinsics{x(0), x(1), x(2), x(3)}; };
  auto residual = [&](const Eigen::VectorXd& x) { return square_size_residuals(data, depths, to_k(x), kc); };
  auto jacobian = [&](const Eigen::VectorXd& x) { return square_size_jacobian(data, depths, to_k(x), kc); };
  LmResult lm = lm_solve(residual, jacobian, Eigen::Vector4d(K0.fx, K0.fy, K0.cx, K0.cy), opts);
  return {to_k(lm.x), std::move(lm.report)};
}

std::vector<double> error_in_3d(const CalibrationDataset& data, const CornerDepths& depths,
                                const Intrinsics& K, const Distortion& kc) {
  const Eigen::VectorXd r = square_size_residuals(data, depths, K, kc);
  const auto per_image = static_cast<Eigen::Index>(neighbour_pairs(data.board).size());
  std::vector<double> eps(data.image_count());
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const auto seg = r.segment(static_cast<Eigen::Index>(j) * per_image, per_image);
    eps[j] = seg.allFinite() && per_image > 0 ? seg.cwiseAbs().mean() : std::numeric_limits<double>::infinity();
  }
  return eps;
}

bool k_update_converged(std::span<const double> epsilon, double square_size) {
  const auto good = static_cast<std::size_t>(
      std::count_if(epsilon.begin(), epsilon.end(), [&](double e) { return e <= 0.2 * square_size; }));
  return good >= (epsilon.size() + 1) / 2;
}

VarianceWeights estimate_variances(const CalibrationDataset& data, const CornerDepths& depths,
                                   const CalibParams& params) {
  const std::size_t n = data.image_count();
  const Eigen::VectorXd r = CalibObjective::joint(data, depths, unit_weights(n)).residuals(params);
  if (!r.allFinite()) raise(ErrorCode::NumericalFailure, "non-finite residual while estimating variances");
  const auto m = static_cast<Eigen::Index>(data.board.corner_count());
  VarianceWeights w;
  for (std::size_t j = 0; j < n; ++j) {
    double sx = 0.0, sd = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index base = 3 * (static_cast<Eigen::Index>(j) * m + i);
      sx += r(base) * r(base) + r(base + 1) * r(base + 1);
      sd += r(base + 2) * r(base + 2);
    }
    const double cnt = static_cast<double>(std::max<Eigen::Index>(m, 1));
    w.sigma_x.push_back(std::max(std::sqrt(sx / (2.0 * cnt)), kVarianceFloor));
    w.sigma_d.push_back(std::max(std::sqrt(sd / cnt), kVarianceFloor));
  }
  return w;
}

Eigen::VectorXd depth_residuals(const CalibParams& params, const CalibrationDataset& data,
                                const CornerDepths& depths, const VarianceWeights& weights) {
  return CalibObjective::joint(data, depths, weights).residuals(params);
}

SolveResult update_distortion(const CalibrationDataset& data, const CornerDepths& depths,
                              const CalibParams& params, const VarianceWeights& weights, const LmOptions& opts) {
  const auto objective = CalibObjective::joint(data, depths, weights);
  const auto free = distortion_parameters();
  return minimize(objective, params, free, opts);
}

SolveResult global_optimize_depth(const CalibrationDataset& data, const CornerDepths& depths,
                                  const CalibParams& start, const VarianceWeights& weights,
                                  const LmOptions& opts) {
  const auto objective = CalibObjective::joint(data, depths, weights);
  const auto free = all_parameters(start);
  return minimize(objective, start, free, opts);
}

CornerDepths planarize_all(const CalibrationDataset& data, const Intrinsics& K, const Distortion& kc,
                           const RansacOptions& opts, std::vector<std::size_t>* fell_back, unsigned jobs) {
  const std::size_t n = data.image_count();
  CornerDepths depths(n);
  std::vector<std::size_t> fallbacks(n, 0);
  detail::parallel_for(
      n,
      [&](std::size_t j) {
        const auto& img = data.images[j];
        try {
          PlanarizeResult p = planarize_depth(img, data.board, K, kc, opts, j);
          fallbacks[j] = static_cast<std::size_t>(std::count(p.fell_back.begin(), p.fell_back.end(), true));
          depths[j] = std::move(p.depths);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::MissingDepth && e.code() != ErrorCode::PlaneFitFailed &&
              e.code() != ErrorCode::GridIncomplete) {
            throw;
          }
          depths[j] = raw_corner_depths(img);
          fallbacks[j] = depths[j].size();
        }
      },
      jobs);
  if (fell_back) *fell_back = std::move(fallbacks);
  return depths;
}

StageError::StageError(std::string stage, const Error& cause, DepthCalibDiagnostics diagnostics)
    : Error(cause.code(), stage + ": " + cause.message()),
      stage_(std::move(stage)),
      diagnostics_(std::move(diagnostics)) {}

DepthCalibResult depth_based_calib(const CalibrationDataset& data, const DepthCalibOptions& opts) {
  data.validate();
  DepthCalibResult out;
  DepthCalibDiagnostics& diag = out.diagnostics;
  const std::size_t n = data.image_count();
  std::string stage;
  auto record = [&](std::string name, double cost) { diag.stages.push_back({std::move(name), cost}); };

  try {
    stage = "colorCalib";
    const TraditionalResult trad = traditional_calibrate(data, opts.traditional);
    diag.traditional = trad.params;
    record(stage, trad.global_report.final_cost);
    CalibParams V = trad.params;

    stage = "planarizeDepth";
    CornerDepths depths = planarize_all(data, V.K, V.kc, opts.ransac, &diag.planarize_fallbacks, opts.jobs);

    // The loop guard needs epsilon before the first pass; it is measured
    // under the colour-calibration K, so a K that already passes the rule is
    // kept as is.
    stage = "errorIn3D";
    Intrinsics K = V.K;
    auto measure = [&](int iteration) {
      KUpdateState st;
      st.iteration = iteration;
      st.K = K;
      st.epsilon = error_in_3d(data, depths, K, V.kc);
      st.median_epsilon = median(st.epsilon);
      st.cost = square_size_residuals(data, depths, K, V.kc).squaredNorm();
      st.converged = k_update_converged(st.epsilon, data.board.square_size);
      diag.k_trace.push_back(st);
      diag.k_converged = st.converged;
    };
    measure(0);
    for (int count = 0; count < opts.max_k_iterations && !diag.k_converged;) {
      stage = "updateK";
      K = update_K(data, depths, K, V.kc, opts.k_update).K;
      stage = "planarizeDepth";
      depths = planarize_all(data, K, V.kc, opts.ransac, &diag.planarize_fallbacks, opts.jobs);
      stage = "errorIn3D";
      measure(++count);
    }
    record("updateK", diag.k_trace.back().cost);

    stage = "reinitPoses";
    V.K = K;
    std::vector<Point2> board_pts;
    for (const auto& c : data.board.world_corners()) board_pts.emplace_back(c.x(), c.y());
    for (std::size_t j = 0; j < n; ++j)
      V.poses[j] = decompose_homography(estimate_homography(board_pts, data.images[j].corners_px), K);

    stage = "localOptim";
    {
      // Provisional weights come from the colour calibration, the last
      // solution whose poses were fitted with distortion.
      const auto provisional = estimate_variances(data, depths, diag.traditional);
      const auto objective = CalibObjective::joint(data, depths, provisional);
      std::vector<Pose> poses(n);
      diag.local_reports.assign(n, {});
      detail::parallel_for(
          n,
          [&](std::size_t j) {
            const auto free = pose_parameters(j);
            SolveResult s = minimize(objective.restricted_to({j}), V, free, opts.local);
            poses[j] = s.params.poses[j];
            diag.local_reports[j] = std::move(s.report);
          },
          opts.jobs);
      V.poses = std::move(poses);
    }

    stage = "estimateVariances";
    diag.weights = estimate_variances(data, depths, V);
    record("localOptim", depth_residuals(V, data, depths, diag.weights).squaredNorm());

    stage = "updateDistortion";
    SolveResult dist = update_distortion(data, depths, V, diag.weights, opts.distortion);
    V = dist.params;
    diag.distortion_report = dist.report;
    record(stage, dist.report.final_cost);

    stage = "globalOptim";
    SolveResult global = global_optimize_depth(data, depths, V, diag.weights, opts.global);
    out.params = std::move(global.params);
    diag.global_report = global.report;
    record(stage, global.report.final_cost);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e, diag);
  }

  bool solves_ok = diag.global_report.converged() && diag.distortion_report.converged();
  for (const auto& r : diag.local_reports) solves_ok = solves_ok && r.converged();
  diag.converged = diag.k_converged && solves_ok && out.params.finite() && out.params.K.fx > 0.0 &&
                   out.params.K.fy > 0.0;
  return out;
}

}  // namespace tofcalib
