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

// Data-parallel inner loops of the depth pipeline. Every kernel has a scalar
// reference implementation; vector variants are selected at runtime from the
// host CPU and must reproduce the scalar results bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace tofcalib::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct LensParams {
  double fx, fy, cx, cy;
  double k1, k2, k3, k4;
};

/// Structure-of-arrays point set, the layout the kernels stream over.
struct PointCloud {
  std::vector<double> x, y, z;

  std::size_t size() const { return x.size(); }
  void resize(std::size_t n) {
    x.resize(n);
    y.resize(n);
    z.resize(n);
  }
  Eigen::Vector3d point(std::size_t i) const { return {x[i], y[i], z[i]}; }
  void push_back(const Eigen::Vector3d& p) {
    x.push_back(p.x());
    y.push_back(p.y());
    z.push_back(p.z());
  }
};

struct KernelTable {
  Isa isa;
  /// Back-projects n pixels at the given Euclidean depths. ok[i] is 1 when
  /// the lens inversion converged for pixel i, 0 otherwise.
  void (*back_project)(const LensParams& lens, const double* u, const double* v,
                       const double* depth, std::size_t n, double* x, double* y, double* z,
                       std::uint8_t* ok);
  /// Number of points with |n.p - offset| < threshold.
  std::size_t (*count_plane_inliers)(const double* normal, double offset, double threshold,
                                     const double* x, const double* y, const double* z,
                                     std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the build or the host CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Best table for this host. Setting TOFCALIB_ISA=scalar in the environment
/// forces the reference kernels.
const KernelTable& active_kernels();

void back_project_batch(const LensParams& lens, std::span<const double> u,
                        std::span<const double> v, std::span<const double> depth,
                        PointCloud& out, std::vector<std::uint8_t>& ok,
                        const KernelTable& kernels = active_kernels());

std::size_t count_plane_inliers(const Eigen::Vector3d& normal, double offset, double threshold,
                                const PointCloud& points,
                                const KernelTable& kernels = active_kernels());

/// Scalar distance test shared by every kernel and by callers that need the
/// inlier set itself rather than its size.
inline bool within_plane_band(double nx, double ny, double nz, double offset, double threshold,
                              double x, double y, double z) {
  const double dist = nx * x + ny * y + nz * z - offset;
  return (dist < 0.0 ? -dist : dist) < threshold;
}

}  // namespace tofcalib::simd
