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

#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace tofcalib::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar, &scalar::back_project, &scalar::count_plane_inliers};
  return table;
}

const KernelTable* avx2_kernels() {
#if defined(TOFCALIB_HAVE_AVX2)
  static const KernelTable table{Isa::Avx2, &avx2::back_project, &avx2::count_plane_inliers};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable* const selected = [] {
    const char* env = std::getenv("TOFCALIB_ISA");
    if (env != nullptr && std::string(env) == "scalar") return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
  }();
  return *selected;
}

void back_project_batch(const LensParams& lens, std::span<const double> u,
                        std::span<const double> v, std::span<const double> depth,
                        PointCloud& out, std::vector<std::uint8_t>& ok,
                        const KernelTable& kernels) {
  const std::size_t n = u.size();
  out.resize(n);
  ok.resize(n);
  kernels.back_project(lens, u.data(), v.data(), depth.data(), n, out.x.data(), out.y.data(),
                       out.z.data(), ok.data());
}

std::size_t count_plane_inliers(const Eigen::Vector3d& normal, double offset, double threshold,
                                const PointCloud& points, const KernelTable& kernels) {
  const double n[3] = {normal.x(), normal.y(), normal.z()};
  return kernels.count_plane_inliers(n, offset, threshold, points.x.data(), points.y.data(),
                                     points.z.data(), points.size());
}

}  // namespace tofcalib::simd
