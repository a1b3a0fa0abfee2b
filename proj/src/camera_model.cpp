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

#include "tofcalib/camera_model.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "tofcalib/detail/lens_kernels.hpp"
#include "tofcalib/error.hpp"

namespace tofcalib {

bool Intrinsics::valid() const {
  return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy) &&
         fx > 0.0 && fy > 0.0;
}

Matrix3 Intrinsics::matrix() const {
  Matrix3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

bool Distortion::finite() const {
  return std::isfinite(k1) && std::isfinite(k2) && std::isfinite(k3) && std::isfinite(k4);
}

Matrix3 Pose::rotation() const { return rodrigues(rvec); }

bool Pose::finite() const { return rvec.allFinite() && t.allFinite(); }

Matrix3 skew(const Vector3& v) {
  Matrix3 S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

Matrix3 rodrigues(const Vector3& rvec) {
  const double theta2 = rvec.squaredNorm();
  double a;  // sin(theta) / theta
  double b;  // (1 - cos(theta)) / theta^2
  if (theta2 < 1e-10) {
    a = 1.0 - theta2 / 6.0 * (1.0 - theta2 / 20.0);
    b = 0.5 - theta2 / 24.0 * (1.0 - theta2 / 30.0);
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Matrix3 W = skew(rvec);
  return Matrix3::Identity() + a * W + b * (W * W);
}

Vector3 rodrigues_inv(const Matrix3& R) {
  if (!R.allFinite() || (R.transpose() * R - Matrix3::Identity()).norm() > 1e-6 ||
      R.determinant() <= 0.0) {
    raise(ErrorCode::NotARotation, "matrix is not orthonormal with determinant +1");
  }
  const Eigen::AngleAxisd aa{Eigen::Quaterniond(R)};
  return aa.angle() * aa.axis();
}

Matrix3 rotated_point_jacobian(const Vector3& rvec, const Vector3& x) {
  const double theta2 = rvec.squaredNorm();
  const Matrix3 R = rodrigues(rvec);
  if (theta2 < 1e-14) {
    return -skew(R * x);
  }
  // d(Rx)/dv = -R [x]x (v v^T + (R^T - I)[v]x) / |v|^2
  const Matrix3 inner = rvec * rvec.transpose() + (R.transpose() - Matrix3::Identity()) * skew(rvec);
  return -R * skew(x) * inner / theta2;
}

Point3 world_to_camera(const Point3& x_w, const Pose& pose) {
  return pose.rotation() * x_w + pose.t;
}

Point2 normalize(const Point3& x_c) {
  if (!(x_c.z() > 1e-9)) {
    raise(ErrorCode::PointBehindCamera, "point has non-positive depth along the optical axis");
  }
  return {x_c.x() / x_c.z(), x_c.y() / x_c.z()};
}

Point2 distort(const Point2& x_n, const Distortion& kc) {
  Point2 out;
  detail::distort_point(x_n.x(), x_n.y(), kc.k1, kc.k2, kc.k3, kc.k4, out.x(), out.y());
  return out;
}

Point2 distort(const Point2& x_n, const Distortion& kc, DistortionJacobian& jac) {
  const double x = x_n.x();
  const double y = x_n.y();
  const double x2 = x * x;
  const double y2 = y * y;
  const double r2 = x2 + y2;
  const double r4 = r2 * r2;
  const double radial = 1.0 + kc.k1 * r2 + kc.k2 * r4;
  const double dr = kc.k1 + 2.0 * kc.k2 * r2;

  jac.d_point(0, 0) = radial + 2.0 * dr * x2 + 2.0 * kc.k3 * y + 6.0 * kc.k4 * x;
  jac.d_point(0, 1) = 2.0 * dr * x * y + 2.0 * kc.k3 * x + 2.0 * kc.k4 * y;
  jac.d_point(1, 0) = 2.0 * dr * x * y + 2.0 * kc.k4 * y + 2.0 * kc.k3 * x;
  jac.d_point(1, 1) = radial + 2.0 * dr * y2 + 2.0 * kc.k4 * x + 6.0 * kc.k3 * y;

  jac.d_coeffs << x * r2, x * r4, 2.0 * x * y, r2 + 2.0 * x2,  //
      y * r2, y * r4, r2 + 2.0 * y2, 2.0 * x * y;
  return distort(x_n, kc);
}

Point2 undistort(const Point2& x_d, const Distortion& kc) {
  Point2 out;
  if (!detail::undistort_point(x_d.x(), x_d.y(), kc.k1, kc.k2, kc.k3, kc.k4, out.x(), out.y())) {
    raise(ErrorCode::NoConvergence, "lens model inversion did not converge");
  }
  return out;
}

Point2 pixel_from_distorted(const Point2& x_d, const Intrinsics& K) {
  return {K.fx * x_d.x() + K.cx, K.fy * x_d.y() + K.cy};
}

Point2 distorted_from_pixel(const Point2& x_p, const Intrinsics& K) {
  return {(x_p.x() - K.cx) / K.fx, (x_p.y() - K.cy) / K.fy};
}

Point2 project(const Point3& x_w, const Pose& pose, const Intrinsics& K, const Distortion& kc) {
  return pixel_from_distorted(distort(normalize(world_to_camera(x_w, pose)), kc), K);
}

Point2 project(const Point3& x_w, const Pose& pose, const Intrinsics& K, const Distortion& kc,
               ProjectionJacobian& jac) {
  const Point3 x_c = world_to_camera(x_w, pose);
  const Point2 x_n = normalize(x_c);
  DistortionJacobian dj;
  const Point2 x_d = distort(x_n, kc, dj);

  const double iz = 1.0 / x_c.z();
  Eigen::Matrix<double, 2, 3> dn_dc;
  dn_dc << iz, 0.0, -x_n.x() * iz, 0.0, iz, -x_n.y() * iz;

  const Eigen::Matrix2d F = Eigen::Vector2d(K.fx, K.fy).asDiagonal();
  const Eigen::Matrix<double, 2, 3> dp_dc = F * dj.d_point * dn_dc;

  jac.d_intrinsics << x_d.x(), 0.0, 1.0, 0.0, 0.0, x_d.y(), 0.0, 1.0;
  jac.d_distortion = F * dj.d_coeffs;
  jac.d_rvec = dp_dc * rotated_point_jacobian(pose.rvec, x_w);
  jac.d_t = dp_dc;
  return pixel_from_distorted(x_d, K);
}

double depth_of(const Point3& x_w, const Pose& pose) {
  const double sq = x_w.squaredNorm() + pose.t.squaredNorm() +
                    2.0 * pose.t.dot(pose.rotation() * x_w);
  return std::sqrt(std::max(sq, 0.0));
}

Vector3 pixel_ray(const Point2& x_p, const Intrinsics& K, const Distortion& kc) {
  const Point2 x_n = undistort(distorted_from_pixel(x_p, K), kc);
  return Vector3(x_n.x(), x_n.y(), 1.0).normalized();
}

Point3 back_project(const Point2& x_p, double depth, const Intrinsics& K, const Distortion& kc) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    raise(ErrorCode::InvalidArgument, "back-projection depth must be positive");
  }
  Point3 out;
  if (!detail::back_project_point(x_p.x(), x_p.y(), depth, K.fx, K.fy, K.cx, K.cy, kc.k1, kc.k2,
                                  kc.k3, kc.k4, out.x(), out.y(), out.z())) {
    raise(ErrorCode::NoConvergence, "lens model inversion did not converge");
  }
  return out;
}

}  // namespace tofcalib
