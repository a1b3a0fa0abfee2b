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

#include "tofcalib/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "tofcalib/error.hpp"

namespace tofcalib {

namespace {

/// Hartley conditioning: centroid to the origin, mean distance sqrt(2).
Matrix3 conditioning_transform(std::span<const Point2> pts) {
  Point2 centroid = Point2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Matrix3 T;
  T << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return T;
}

bool collinear(std::span<const Point2> pts) {
  Point2 centroid = Point2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) scatter += (p - centroid) * (p - centroid).transpose();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(scatter);
  const auto s = svd.singularValues();
  return !(s(0) > 0.0) || s(1) <= 1e-18 * s(0);
}

}  // namespace

Point2 Homography::map(const Point2& board) const {
  const Eigen::Vector3d p = H * Eigen::Vector3d(board.x(), board.y(), 1.0);
  return p.hnormalized();
}

Homography estimate_homography(std::span<const Point2> board_pts, std::span<const Point2> image_pts) {
  if (board_pts.size() != image_pts.size()) {
    raise(ErrorCode::InvalidArgument, "homography needs matching point lists");
  }
  const std::size_t n = board_pts.size();
  if (n < 4) raise(ErrorCode::DegenerateConfiguration, "homography needs at least 4 points");
  if (collinear(board_pts) || collinear(image_pts)) {
    raise(ErrorCode::DegenerateConfiguration, "homography points are collinear");
  }

  const Matrix3 Tb = conditioning_transform(board_pts);
  const Matrix3 Ti = conditioning_transform(image_pts);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 9);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector3d b = Tb * board_pts[k].homogeneous();
    const Eigen::Vector3d m = Ti * image_pts[k].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * k);
    A.row(r) << -b.x(), -b.y(), -1.0, 0.0, 0.0, 0.0, m.x() * b.x(), m.x() * b.y(), m.x();
    A.row(r + 1) << 0.0, 0.0, 0.0, -b.x(), -b.y(), -1.0, m.y() * b.x(), m.y() * b.y(), m.y();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // With exactly four points A is 8x9 and has only 8 singular values.
  const Eigen::Index last = sv.size() - 1;
  const Eigen::Index null_rank_probe = std::min<Eigen::Index>(7, last);
  if (sv(null_rank_probe) <= 1e-12 * sv(0)) {
    raise(ErrorCode::DegenerateConfiguration, "homography system is rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Matrix3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Matrix3 H = Ti.inverse() * Hn * Tb;
  if (std::abs(H(2, 2)) > 1e-12 * H.norm()) {
    H /= H(2, 2);
  } else {
    H /= H.norm();
  }
  const double det = H.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-14 * std::pow(H.norm(), 3)) {
    raise(ErrorCode::DegenerateConfiguration, "homography is singular");
  }
  return Homography{H};
}

Intrinsics intrinsics_from_homographies(std::span<const Homography> homographies) {
  if (homographies.size() < 2) {
    raise(ErrorCode::DegenerateConfiguration, "intrinsics need at least two homographies");
  }
  // Unknowns b = (B11, B22, B13, B23, B33) of B ~ K^-T K^-1 with B12 = 0.
  auto v = [](const Matrix3& H, int i, int j) {
    Eigen::Matrix<double, 1, 5> row;
    row << H(0, i) * H(0, j), H(1, i) * H(1, j), H(0, i) * H(2, j) + H(2, i) * H(0, j),
        H(1, i) * H(2, j) + H(2, i) * H(1, j), H(2, i) * H(2, j);
    return row;
  };
  const auto m = static_cast<Eigen::Index>(homographies.size());
  Eigen::MatrixXd A(2 * m, 5);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Matrix3 H = homographies[static_cast<std::size_t>(k)].H / homographies[static_cast<std::size_t>(k)].H.norm();
    A.row(2 * k) = v(H, 0, 1);
    A.row(2 * k + 1) = v(H, 0, 0) - v(H, 1, 1);
  }
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const double nrm = A.row(r).norm();
    if (nrm > 0.0) A.row(r) /= nrm;
  }
  // Column equilibration: the entries of b span several orders of magnitude.
  Eigen::Matrix<double, 5, 1> scale;
  for (int c = 0; c < 5; ++c) {
    const double nrm = A.col(c).norm();
    scale(c) = nrm > 0.0 ? 1.0 / nrm : 1.0;
    A.col(c) *= scale(c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() < 5 || !(sv(3) > 1e-9 * sv(0))) {
    raise(ErrorCode::DegenerateConfiguration, "absolute-conic system is rank deficient");
  }
  Eigen::Matrix<double, 5, 1> b = svd.matrixV().col(4).cwiseProduct(scale);
  if (b(0) < 0.0) b = -b;
  const double B11 = b(0), B22 = b(1), B13 = b(2), B23 = b(3), B33 = b(4);
  if (!(B11 > 0.0) || !(B22 > 0.0)) {
    raise(ErrorCode::DegenerateConfiguration, "absolute-conic estimate is not positive definite");
  }
  Intrinsics K;
  K.cx = -B13 / B11;
  K.cy = -B23 / B22;
  const double lambda = B33 - K.cx * K.cx * B11 - K.cy * K.cy * B22;
  if (!(lambda > 0.0)) {
    raise(ErrorCode::DegenerateConfiguration, "absolute-conic estimate is not positive definite");
  }
  K.fx = std::sqrt(lambda / B11);
  K.fy = std::sqrt(lambda / B22);
  if (!K.valid()) raise(ErrorCode::DegenerateConfiguration, "intrinsics estimate is not finite");
  return K;
}

Pose decompose_homography(const Homography& homography, const Intrinsics& K) {
  if (!K.valid()) raise(ErrorCode::InvalidArgument, "invalid intrinsics");
  const Matrix3 A = K.matrix().inverse() * homography.H;
  const double n1 = A.col(0).norm();
  if (!(n1 > 0.0) || !A.allFinite()) {
    raise(ErrorCode::DegenerateConfiguration, "homography has a null first column");
  }
  double lambda = 1.0 / n1;
  if (A(2, 2) * lambda < 0.0) lambda = -lambda;
  const Vector3 r1 = lambda * A.col(0);
  const Vector3 r2 = lambda * A.col(1);
  const Vector3 t = lambda * A.col(2);
  Matrix3 R;
  R << r1, r2, r1.cross(r2);
  Eigen::JacobiSVD<Matrix3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 D = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Matrix3 Rn = svd.matrixU() * D * svd.matrixV().transpose();
  if (!Rn.allFinite() || svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0)) {
    raise(ErrorCode::DegenerateConfiguration, "homography does not describe a plane pose");
  }
  return Pose{rodrigues_inv(Rn), t};
}

std::string_view to_string(LmTermination reason) {
  switch (reason) {
    case LmTermination::Gradient: return "gradient";
    case LmTermination::Step: return "step";
    case LmTermination::Cost: return "cost";
    case LmTermination::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

LmResult lm_solve(const ResidualFn& residual, const JacobianFn& jacobian, Eigen::VectorXd x0,
                  const LmOptions& opts) {
  LmResult result;
  result.x = std::move(x0);
  LmReport& report = result.report;

  Eigen::VectorXd r = residual(result.x);
  if (!r.allFinite()) raise(ErrorCode::NumericalFailure, "non-finite residual at the initial point");
  double cost = r.squaredNorm();
  report.initial_cost = cost;
  report.cost_trace.push_back(cost);

  double mu = opts.initial_damping;
  bool need_jacobian = true;
  Eigen::MatrixXd J;
  Eigen::MatrixXd JtJ;
  Eigen::VectorXd g;
  report.termination = LmTermination::MaxIterations;

  // An iteration is one Jacobian evaluation; rejected trials retry inside it
  // with heavier damping.
  for (;;) {
    if (need_jacobian) {
      if (report.iterations == opts.max_iterations) break;
      ++report.iterations;
      J = jacobian(result.x);
      if (!J.allFinite()) raise(ErrorCode::NumericalFailure, "non-finite Jacobian");
      JtJ = J.transpose() * J;
      g = J.transpose() * r;
      need_jacobian = false;
      if (g.lpNorm<Eigen::Infinity>() <= opts.gradient_tol) {
        report.termination = LmTermination::Gradient;
        break;
      }
    }
    // Marquardt scaling by diag(J^T J), floored so unobserved parameters
    // still receive damping.
    Eigen::VectorXd diag = JtJ.diagonal();
    const double floor = std::max(1e-12 * diag.maxCoeff(), std::numeric_limits<double>::min());
    diag = diag.cwiseMax(floor);
    Eigen::MatrixXd A = JtJ;
    A.diagonal() += mu * diag;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success) step = -ldlt.solve(g);
    if (step.size() == 0 || !step.allFinite() || ldlt.info() != Eigen::Success) {
      mu = std::max(mu, 1e-15) * opts.damping_up;
      continue;
    }
    if (step.norm() <= opts.step_tol * (result.x.norm() + opts.step_tol)) {
      report.termination = LmTermination::Step;
      break;
    }
    const Eigen::VectorXd x_trial = result.x + step;
    const Eigen::VectorXd r_trial = residual(x_trial);
    const double cost_trial = r_trial.allFinite() ? r_trial.squaredNorm()
                                                  : std::numeric_limits<double>::infinity();
    if (cost_trial < cost) {
      const double decrease = cost - cost_trial;
      result.x = x_trial;
      r = r_trial;
      cost = cost_trial;
      report.cost_trace.push_back(cost);
      mu = std::max(mu / opts.damping_down, 1e-15);
      need_jacobian = true;
      if (cost == 0.0 || decrease <= opts.cost_tol * (cost + decrease)) {
        report.termination = LmTermination::Cost;
        break;
      }
    } else {
      mu = std::max(mu, 1e-15) * opts.damping_up;
      if (mu > 1e32) {
        report.termination = LmTermination::Step;
        break;
      }
    }
  }
  report.final_cost = cost;
  return result;
}

double check_jacobian(const ResidualFn& residual, const JacobianFn& jacobian,
                      const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) raise(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  const Eigen::MatrixXd J = jacobian(x);
  double worst = 0.0;
  Eigen::VectorXd xp = x;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    const double h = step * std::max(1.0, std::abs(x(c)));
    xp(c) = x(c) + h;
    const Eigen::VectorXd rp = residual(xp);
    xp(c) = x(c) - h;
    const Eigen::VectorXd rm = residual(xp);
    xp(c) = x(c);
    const Eigen::VectorXd fd = (rp - rm) / (2.0 * h);
    for (Eigen::Index r = 0; r < fd.size(); ++r) {
      const double a = J(r, c);
      const double n = fd(r);
      const double denom = std::max({1.0, std::abs(a), std::abs(n)});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
  }
  return worst;
}

}  // namespace tofcalib
