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

// Scalar inner loops shared by the point-wise API and the batch kernels.
// The SIMD kernels replicate these operation for operation, so any change
// here has to be mirrored in src/simd/kernels_avx2.cpp.

#include <cmath>

namespace tofcalib::detail {

inline constexpr int kUndistortMaxIterations = 20;
inline constexpr double kUndistortStepTol = 1e-12;

inline void distort_point(double x, double y, double k1, double k2, double k3, double k4,
                          double& xd, double& yd) noexcept {
  const double x2 = x * x;
  const double y2 = y * y;
  const double r2 = x2 + y2;
  const double radial = 1.0 + k1 * r2 + k2 * (r2 * r2);
  xd = x * (radial + 2.0 * k3 * y) + k4 * (r2 + 2.0 * x2);
  yd = y * (radial + 2.0 * k4 * x) + k3 * (r2 + 2.0 * y2);
}

/// Newton iteration for distort(x) = (mx, my), starting at (mx, my).
/// Returns false on stall, non-finite values, or a non-positive Jacobian
/// determinant at the last evaluated iterate (wrong branch of a fold).
inline bool undistort_point(double mx, double my, double k1, double k2, double k3, double k4,
                            double& xo, double& yo) noexcept {
  double x = mx;
  double y = my;
  double det = 1.0;
  bool converged = false;
  for (int it = 0; it < kUndistortMaxIterations; ++it) {
    const double x2 = x * x;
    const double y2 = y * y;
    const double xy = x * y;
    const double r2 = x2 + y2;
    const double radial = 1.0 + k1 * r2 + k2 * (r2 * r2);
    const double xd = x * (radial + 2.0 * k3 * y) + k4 * (r2 + 2.0 * x2);
    const double yd = y * (radial + 2.0 * k4 * x) + k3 * (r2 + 2.0 * y2);
    // d(radial)/dr2
    const double dr = k1 + 2.0 * k2 * r2;
    const double a = radial + 2.0 * dr * x2 + 2.0 * k3 * y + 6.0 * k4 * x;
    const double b = 2.0 * dr * xy + 2.0 * k3 * x + 2.0 * k4 * y;
    const double c = 2.0 * dr * xy + 2.0 * k4 * y + 2.0 * k3 * x;
    const double d = radial + 2.0 * dr * y2 + 2.0 * k4 * x + 6.0 * k3 * y;
    det = a * d - b * c;
    const double ex = xd - mx;
    const double ey = yd - my;
    const double sx = (d * ex - b * ey) / det;
    const double sy = (a * ey - c * ex) / det;
    x = x - sx;
    y = y - sy;
    if (sx * sx + sy * sy < kUndistortStepTol * kUndistortStepTol) {
      converged = true;
      break;
    }
  }
  xo = x;
  yo = y;
  return converged && det > 0.0 && std::isfinite(x) && std::isfinite(y);
}

/// back_project() without argument checks: pixel -> normalized -> undistorted
/// -> scaled to Euclidean distance `depth`.
inline bool back_project_point(double u, double v, double depth, double fx, double fy, double cx,
                               double cy, double k1, double k2, double k3, double k4, double& X,
                               double& Y, double& Z) noexcept {
  const double mx = (u - cx) / fx;
  const double my = (v - cy) / fy;
  double xn = 0.0;
  double yn = 0.0;
  const bool ok = undistort_point(mx, my, k1, k2, k3, k4, xn, yn);
  const double norm = std::sqrt(xn * xn + yn * yn + 1.0);
  const double s = depth / norm;
  X = s * xn;
  Y = s * yn;
  Z = s;
  return ok;
}

}  // namespace tofcalib::detail
