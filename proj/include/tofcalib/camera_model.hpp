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

// Pinhole camera with the four-coefficient radial/tangential lens model used
// throughout the library. Units: millimetres for anything 3D, pixels for
// image coordinates, radians for rotations.

#include <array>

#include <Eigen/Core>

namespace tofcalib {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Focal lengths and principal point in pixels. Skew is always zero.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  bool valid() const;
  Matrix3 matrix() const;
  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// k1, k2 radial; k3, k4 tangential. All-zero means a distortion-free lens.
struct Distortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;

  std::array<double, 4> coefficients() const { return {k1, k2, k3, k4}; }
  static Distortion from(const std::array<double, 4>& c) { return {c[0], c[1], c[2], c[3]}; }
  bool finite() const;
  friend bool operator==(const Distortion&, const Distortion&) = default;
};

/// Board-to-camera rigid transform: x_c = R(rvec) x_w + t.
struct Pose {
  Vector3 rvec = Vector3::Zero();
  Vector3 t = Vector3::Zero();

  Matrix3 rotation() const;
  bool finite() const;
  friend bool operator==(const Pose&, const Pose&) = default;
};

Matrix3 skew(const Vector3& v);

Matrix3 rodrigues(const Vector3& rvec);

/// Inverse of rodrigues(). Throws NotARotation unless R is orthonormal with
/// determinant +1 to within 1e-6.
Vector3 rodrigues_inv(const Matrix3& R);

/// d(R(rvec) x)/d(rvec).
Matrix3 rotated_point_jacobian(const Vector3& rvec, const Vector3& x);

Point3 world_to_camera(const Point3& x_w, const Pose& pose);

/// Perspective division. Throws PointBehindCamera when z <= 1e-9.
Point2 normalize(const Point3& x_c);

struct DistortionJacobian {
  Eigen::Matrix2d d_point;
  Eigen::Matrix<double, 2, 4> d_coeffs;
};

/// Forward lens model:
///   x_d = x (1 + k1 r^2 + k2 r^4 + 2 k3 y) + k4 (r^2 + 2 x^2)
///   y_d = y (1 + k1 r^2 + k2 r^4 + 2 k4 x) + k3 (r^2 + 2 y^2)
Point2 distort(const Point2& x_n, const Distortion& kc);
Point2 distort(const Point2& x_n, const Distortion& kc, DistortionJacobian& jac);

/// Inverts distort() with Newton's method (20 iterations, 1e-12 step).
/// Throws NoConvergence when the iteration stalls or lands on a fold of the
/// lens polynomial.
Point2 undistort(const Point2& x_d, const Distortion& kc);

Point2 pixel_from_distorted(const Point2& x_d, const Intrinsics& K);
Point2 distorted_from_pixel(const Point2& x_p, const Intrinsics& K);

Point2 project(const Point3& x_w, const Pose& pose, const Intrinsics& K, const Distortion& kc);

struct ProjectionJacobian {
  Eigen::Matrix<double, 2, 4> d_intrinsics;  // fx, fy, cx, cy
  Eigen::Matrix<double, 2, 4> d_distortion;  // k1..k4
  Eigen::Matrix<double, 2, 3> d_rvec;
  Eigen::Matrix<double, 2, 3> d_t;
};

Point2 project(const Point3& x_w, const Pose& pose, const Intrinsics& K, const Distortion& kc,
               ProjectionJacobian& jac);

/// Euclidean camera-to-point distance, evaluated in the expanded form
/// sqrt(|x_w|^2 + |t|^2 + 2 t^T R x_w).
double depth_of(const Point3& x_w, const Pose& pose);

/// Unit-norm viewing ray through pixel x_p.
Vector3 pixel_ray(const Point2& x_p, const Intrinsics& K, const Distortion& kc);

/// Camera-frame point at Euclidean distance `depth` along the ray through x_p.
/// Throws InvalidArgument for depth <= 0.
Point3 back_project(const Point2& x_p, double depth, const Intrinsics& K, const Distortion& kc);

}  // namespace tofcalib
