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

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>
#include <doctest.h>

#include "test_support.hpp"
#include "tofcalib/solvers.hpp"

using namespace tofcalib;
using namespace tofcalib::testing;

namespace {

Matrix3 homography_from(const Intrinsics& K, const Pose& pose) {
  const Matrix3 R = pose.rotation();
  Matrix3 M;
  M << R.col(0), R.col(1), pose.t;
  return K.matrix() * M;
}

std::vector<Point2> grid(int n, double step) {
  std::vector<Point2> pts;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) pts.emplace_back(c * step, r * step);
  return pts;
}

Point2 apply(const Matrix3& H, const Point2& p) { return (H * p.homogeneous()).hnormalized(); }

double max_transfer(const Homography& h, const Matrix3& H, const std::vector<Point2>& pts) {
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, (h.map(p) - apply(H, p)).norm());
  return worst;
}

Pose random_board_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {random_rvec(rng, 0.6), {-100 + 40 * u(rng), -100 + 40 * u(rng), 900 + 200 * u(rng)}};
}

double rotation_angle_between(const Matrix3& A, const Matrix3& B) { return rodrigues_inv(A.transpose() * B).norm(); }

}  // namespace

TEST_CASE("homography of the identity map") {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const Homography h = estimate_homography(pts, pts);
  CHECK((h.H - Matrix3::Identity()).norm() < 1e-10);
}

TEST_CASE("homography recovery from noiseless correspondences") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix3 H = homography_from(default_intrinsics(), random_board_pose(rng));
    const auto board = grid(3, 50.0);
    std::vector<Point2> img;
    for (const auto& p : board) img.push_back(apply(H, p));
    const Homography h = estimate_homography(board, img);
    CHECK(max_transfer(h, H, board) < 1e-8);
    CHECK(h.H(2, 2) == 1.0);
  }
}

TEST_CASE("homography estimation is similarity invariant") {
  std::mt19937_64 rng(2);
  const Matrix3 H = homography_from(default_intrinsics(), random_board_pose(rng));
  const auto board = grid(4, 50.0);
  std::vector<Point2> img;
  for (const auto& p : board) img.push_back(apply(H, p));
  Matrix3 S;
  const double a = 0.7, s = 3.5;
  S << s * std::cos(a), -s * std::sin(a), 1200.0, s * std::sin(a), s * std::cos(a), -800.0, 0, 0, 1;
  std::vector<Point2> moved;
  for (const auto& p : img) moved.push_back(apply(S, p));
  const Homography h = estimate_homography(board, moved);
  CHECK(max_transfer(h, S * H, board) < 1e-9 * s * 100);
}

TEST_CASE("homography degeneracies") {
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_ERROR_CODE(estimate_homography(line, line), ErrorCode::DegenerateConfiguration);
  const std::vector<Point2> three{{0, 0}, {1, 0}, {0, 1}};
  CHECK_ERROR_CODE(estimate_homography(three, three), ErrorCode::DegenerateConfiguration);
}

TEST_CASE("zero-skew intrinsics from homographies") {
  std::mt19937_64 rng(3);
  SUBCASE("default camera, three views") {
    std::vector<Homography> hs;
    for (int i = 0; i < 3; ++i) hs.push_back({homography_from(default_intrinsics(), random_board_pose(rng))});
    const Intrinsics K = intrinsics_from_homographies(hs);
    CHECK(K.fx == doctest::Approx(284.4).epsilon(1e-6));
    CHECK(K.fy == doctest::Approx(284.4).epsilon(1e-6));
    CHECK(K.cx == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(K.cy == doctest::Approx(100.0).epsilon(1e-6));
  }
  SUBCASE("random cameras, five views") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      const Intrinsics truth{200 + 400 * u(rng), 200 + 400 * u(rng), 80 + 40 * u(rng), 80 + 40 * u(rng)};
      std::vector<Homography> hs;
      for (int i = 0; i < 5; ++i) hs.push_back({homography_from(truth, random_board_pose(rng))});
      const Intrinsics K = intrinsics_from_homographies(hs);
      CHECK(K.fx == doctest::Approx(truth.fx).epsilon(1e-6));
      CHECK(K.fy == doctest::Approx(truth.fy).epsilon(1e-6));
      CHECK(K.cx == doctest::Approx(truth.cx).epsilon(1e-6));
      CHECK(K.cy == doctest::Approx(truth.cy).epsilon(1e-6));
    }
  }
  SUBCASE("parallel boards are degenerate") {
    const Homography h{homography_from(default_intrinsics(), random_board_pose(rng))};
    const std::vector<Homography> hs{h, h};
    CHECK_ERROR_CODE(intrinsics_from_homographies(hs), ErrorCode::DegenerateConfiguration);
  }
}

TEST_CASE("homography decomposition") {
  std::mt19937_64 rng(4);
  const Intrinsics K = default_intrinsics();
  for (int i = 0; i < 50; ++i) {
    const Pose truth = random_board_pose(rng);
    const Pose p = decompose_homography({homography_from(K, truth)}, K);
    CHECK(rotation_angle_between(p.rotation(), truth.rotation()) < 1e-6);
    CHECK((p.t - truth.t).norm() < 1e-6 * truth.t.norm());
    const Pose flipped = decompose_homography({-homography_from(K, truth)}, K);
    CHECK((flipped.t - truth.t).norm() < 1e-6 * truth.t.norm());
  }
  const Pose frontal{{0, 0, 0}, {0, 0, 1000}};
  const Pose p = decompose_homography({homography_from(K, frontal)}, K);
  CHECK(p.rvec.norm() < 1e-12);
  CHECK((p.t - frontal.t).norm() < 1e-9);
}

TEST_CASE("LM on a consistent linear system") {
  Eigen::MatrixXd A(5, 3);
  A << 1, 2, 0, 0, 1, 1, 3, 0, 1, 1, 1, 1, 2, -1, 4;
  const Eigen::Vector3d x_true(0.5, -2.0, 3.0);
  const Eigen::VectorXd y = A * x_true;
  auto r = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x - y; };
  auto J = [&](const Eigen::VectorXd&) -> Eigen::MatrixXd { return A; };
  SUBCASE("undamped first step is the Gauss-Newton solution") {
    LmOptions opts;
    opts.initial_damping = 0.0;
    const LmResult res = lm_solve(r, J, Eigen::Vector3d::Zero(), opts);
    CHECK((res.x - x_true).norm() < 1e-12);
    CHECK(res.report.iterations <= 2);
  }
  SUBCASE("default damping contracts the error by about the damping factor") {
    LmOptions opts;
    opts.max_iterations = 2;
    const LmResult two = lm_solve(r, J, Eigen::Vector3d::Zero(), opts);
    CHECK((two.x - x_true).norm() < 1e-6 * x_true.norm());
    const LmResult res = lm_solve(r, J, Eigen::Vector3d::Zero());
    CHECK(res.report.converged());
    CHECK((res.x - x_true).norm() < 1e-12);
  }
}

TEST_CASE("LM on Rosenbrock") {
  auto r = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::Vector2d(10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0));
  };
  auto J = [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    Eigen::Matrix2d j;
    j << -20.0 * x(0), 10.0, -1.0, 0.0;
    return j;
  };
  const LmResult res = lm_solve(r, J, Eigen::Vector2d(-1.2, 1.0));
  CHECK(std::abs(res.x(0) - 1.0) < 1e-6);
  CHECK(std::abs(res.x(1) - 1.0) < 1e-6);
  CHECK(res.report.converged());
  for (std::size_t i = 1; i < res.report.cost_trace.size(); ++i) {
    CHECK(res.report.cost_trace[i] <= res.report.cost_trace[i - 1]);
  }
  CHECK(res.report.final_cost <= res.report.initial_cost);
}

TEST_CASE("LM numerical failures") {
  auto J = [](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(1, 1); };
  auto nan_r = [](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(1, std::nan("")); };
  CHECK_ERROR_CODE(lm_solve(nan_r, J, Eigen::VectorXd::Zero(1)), ErrorCode::NumericalFailure);
  auto r = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
  auto nan_J = [](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Constant(1, 1, std::nan("")); };
  CHECK_ERROR_CODE(lm_solve(r, nan_J, Eigen::VectorXd::Ones(1)), ErrorCode::NumericalFailure);
}

TEST_CASE("LM treats a non-finite trial as a rejected step") {
  // Residual undefined for x > 1.5; the minimum sits at the boundary side.
  auto r = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd out(1);
    out(0) = x(0) > 1.5 ? std::nan("") : x(0) - 1.0;
    return out;
  };
  auto J = [](const Eigen::VectorXd&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Ones(1, 1); };
  const LmResult res = lm_solve(r, J, Eigen::VectorXd::Constant(1, -40.0));
  CHECK(std::abs(res.x(0) - 1.0) < 1e-8);
}

TEST_CASE("check_jacobian") {
  Eigen::MatrixXd A(3, 2);
  A << 1, 2, 3, 4, 5, 6;
  auto lin = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; };
  auto linJ = [&](const Eigen::VectorXd&) -> Eigen::MatrixXd { return A; };
  CHECK(check_jacobian(lin, linJ, Eigen::Vector2d(0.3, -0.7), 1e-6) < 1e-10);

  auto f = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return Eigen::Vector2d(std::sin(x(0)) * x(1), std::exp(0.5 * x(1)));
  };
  auto fJ = [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    Eigen::Matrix2d j;
    j << std::cos(x(0)) * x(1), std::sin(x(0)), 0.0, 0.5 * std::exp(0.5 * x(1));
    return j;
  };
  const Eigen::Vector2d x(0.4, 1.3);
  CHECK(check_jacobian(f, fJ, x, 1e-6) < 1e-8);
  auto wrong = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
    Eigen::MatrixXd j = fJ(v);
    j(0, 0) *= 2.0;
    return j;
  };
  CHECK(check_jacobian(f, wrong, x, 1e-6) > 1e-2);
}
