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

#include "kernels_impl.hpp"

#include "tofcalib/detail/lens_kernels.hpp"

namespace tofcalib::simd::scalar {

void back_project(const LensParams& lens, const double* u, const double* v, const double* depth,
                  std::size_t n, double* x, double* y, double* z, std::uint8_t* ok) {
  for (std::size_t i = 0; i < n; ++i) {
    ok[i] = detail::back_project_point(u[i], v[i], depth[i], lens.fx, lens.fy, lens.cx, lens.cy,
                                       lens.k1, lens.k2, lens.k3, lens.k4, x[i], y[i], z[i])
                ? 1
                : 0;
  }
}

std::size_t count_plane_inliers(const double* normal, double offset, double threshold,
                                const double* x, const double* y, const double* z, std::size_t n) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    count += within_plane_band(normal[0], normal[1], normal[2], offset, threshold, x[i], y[i], z[i])
                 ? 1
                 : 0;
  }
  return count;
}

}  // namespace tofcalib::simd::scalar
