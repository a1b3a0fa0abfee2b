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

// AVX2 variants of the depth-pipeline kernels. Compiled with -mavx2 only (no
// FMA) and -ffp-contract=off so that every lane performs exactly the scalar
// operation sequence of detail/lens_kernels.hpp.

#include <immintrin.h>

#include <bit>

#include "kernels_impl.hpp"
#include "tofcalib/detail/lens_kernels.hpp"

namespace tofcalib::simd::avx2 {

namespace {

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline __m256d is_finite(__m256d v) {
  const __m256d abs = _mm256_andnot_pd(set1(-0.0), v);
  return _mm256_cmp_pd(abs, set1(__builtin_inf()), _CMP_LT_OQ);
}

}  // namespace

void back_project(const LensParams& lens, const double* u, const double* v, const double* depth,
                  std::size_t n, double* x_out, double* y_out, double* z_out, std::uint8_t* ok) {
  const __m256d fx = set1(lens.fx), fy = set1(lens.fy), cx = set1(lens.cx), cy = set1(lens.cy);
  const __m256d k1 = set1(lens.k1), k2 = set1(lens.k2), k3 = set1(lens.k3), k4 = set1(lens.k4);
  const __m256d one = set1(1.0), two = set1(2.0);
  const __m256d two_k2 = set1(2.0 * lens.k2);
  const __m256d two_k3 = set1(2.0 * lens.k3), two_k4 = set1(2.0 * lens.k4);
  const __m256d six_k3 = set1(6.0 * lens.k3), six_k4 = set1(6.0 * lens.k4);
  const __m256d tol2 = set1(detail::kUndistortStepTol * detail::kUndistortStepTol);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mx = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(u + i), cx), fx);
    const __m256d my = _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(v + i), cy), fy);
    __m256d x = mx, y = my;
    __m256d det_last = one;
    __m256d active = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    __m256d converged = zero;

    for (int it = 0; it < detail::kUndistortMaxIterations; ++it) {
      if (_mm256_movemask_pd(active) == 0) break;
      const __m256d x2 = _mm256_mul_pd(x, x);
      const __m256d y2 = _mm256_mul_pd(y, y);
      const __m256d xy = _mm256_mul_pd(x, y);
      const __m256d r2 = _mm256_add_pd(x2, y2);
      const __m256d radial = _mm256_add_pd(_mm256_add_pd(one, _mm256_mul_pd(k1, r2)),
                                           _mm256_mul_pd(k2, _mm256_mul_pd(r2, r2)));
      const __m256d xd = _mm256_add_pd(
          _mm256_mul_pd(x, _mm256_add_pd(radial, _mm256_mul_pd(two_k3, y))),
          _mm256_mul_pd(k4, _mm256_add_pd(r2, _mm256_mul_pd(two, x2))));
      const __m256d yd = _mm256_add_pd(
          _mm256_mul_pd(y, _mm256_add_pd(radial, _mm256_mul_pd(two_k4, x))),
          _mm256_mul_pd(k3, _mm256_add_pd(r2, _mm256_mul_pd(two, y2))));
      const __m256d dr = _mm256_add_pd(k1, _mm256_mul_pd(two_k2, r2));
      const __m256d two_dr = _mm256_mul_pd(two, dr);
      const __m256d a = _mm256_add_pd(
          _mm256_add_pd(_mm256_add_pd(radial, _mm256_mul_pd(two_dr, x2)), _mm256_mul_pd(two_k3, y)),
          _mm256_mul_pd(six_k4, x));
      const __m256d b = _mm256_add_pd(
          _mm256_add_pd(_mm256_mul_pd(two_dr, xy), _mm256_mul_pd(two_k3, x)),
          _mm256_mul_pd(two_k4, y));
      const __m256d c = _mm256_add_pd(
          _mm256_add_pd(_mm256_mul_pd(two_dr, xy), _mm256_mul_pd(two_k4, y)),
          _mm256_mul_pd(two_k3, x));
      const __m256d d = _mm256_add_pd(
          _mm256_add_pd(_mm256_add_pd(radial, _mm256_mul_pd(two_dr, y2)), _mm256_mul_pd(two_k4, x)),
          _mm256_mul_pd(six_k3, y));
      const __m256d det = _mm256_sub_pd(_mm256_mul_pd(a, d), _mm256_mul_pd(b, c));
      const __m256d ex = _mm256_sub_pd(xd, mx);
      const __m256d ey = _mm256_sub_pd(yd, my);
      const __m256d sx =
          _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(d, ex), _mm256_mul_pd(b, ey)), det);
      const __m256d sy =
          _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(a, ey), _mm256_mul_pd(c, ex)), det);

      x = _mm256_blendv_pd(x, _mm256_sub_pd(x, sx), active);
      y = _mm256_blendv_pd(y, _mm256_sub_pd(y, sy), active);
      det_last = _mm256_blendv_pd(det_last, det, active);

      const __m256d step2 = _mm256_add_pd(_mm256_mul_pd(sx, sx), _mm256_mul_pd(sy, sy));
      const __m256d done = _mm256_and_pd(active, _mm256_cmp_pd(step2, tol2, _CMP_LT_OQ));
      converged = _mm256_or_pd(converged, done);
      active = _mm256_andnot_pd(done, active);
    }

    const __m256d good = _mm256_and_pd(
        _mm256_and_pd(converged, _mm256_cmp_pd(det_last, zero, _CMP_GT_OQ)),
        _mm256_and_pd(is_finite(x), is_finite(y)));
    const __m256d norm = _mm256_sqrt_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y)), one));
    const __m256d s = _mm256_div_pd(_mm256_loadu_pd(depth + i), norm);
    _mm256_storeu_pd(x_out + i, _mm256_mul_pd(s, x));
    _mm256_storeu_pd(y_out + i, _mm256_mul_pd(s, y));
    _mm256_storeu_pd(z_out + i, s);
    const int mask = _mm256_movemask_pd(good);
    for (int lane = 0; lane < 4; ++lane) ok[i + lane] = (mask >> lane) & 1;
  }
  if (i < n) scalar::back_project(lens, u + i, v + i, depth + i, n - i, x_out + i, y_out + i,
                                  z_out + i, ok + i);
}

std::size_t count_plane_inliers(const double* normal, double offset, double threshold,
                                const double* x, const double* y, const double* z, std::size_t n) {
  const __m256d nx = set1(normal[0]), ny = set1(normal[1]), nz = set1(normal[2]);
  const __m256d off = set1(offset), thr = set1(threshold);
  const __m256d sign = set1(-0.0);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dist = _mm256_sub_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(nx, _mm256_loadu_pd(x + i)),
                                    _mm256_mul_pd(ny, _mm256_loadu_pd(y + i))),
                      _mm256_mul_pd(nz, _mm256_loadu_pd(z + i))),
        off);
    const __m256d inside = _mm256_cmp_pd(_mm256_andnot_pd(sign, dist), thr, _CMP_LT_OQ);
    count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(inside))));
  }
  return count + scalar::count_plane_inliers(normal, offset, threshold, x + i, y + i, z + i, n - i);
}

}  // namespace tofcalib::simd::avx2
