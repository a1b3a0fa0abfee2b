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

// Board-plane depth denoising. White checker cells are cut out of the depth
// map using the corner grid, their pixels lifted to 3D, a plane fitted
// robustly, and every corner's depth replaced by the range at which its
// viewing ray meets that plane.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tofcalib/camera_model.hpp"
#include "tofcalib/dataset.hpp"
#include "tofcalib/depth_map.hpp"
#include "tofcalib/simd/kernels.hpp"

namespace tofcalib {

/// {x : normal . x = offset}, |normal| = 1, offset >= 0.
struct Plane {
  Vector3 normal = Vector3::UnitZ();
  double offset = 0.0;

  double signed_distance(const Point3& p) const { return normal.dot(p) - offset; }
  /// Flips the normal if needed so that offset >= 0.
  static Plane canonical(const Vector3& normal, double offset);
};

struct RansacOptions {
  int iterations = 200;
  double inlier_threshold = 15.0;      // mm
  double min_inlier_fraction = 0.5;
  double gradient_threshold = 20.0;    // mm per pixel
  /// Extra consensus rounds after the first refit: inliers are re-selected
  /// against the refit plane until the set stops changing. 0 keeps the
  /// consensus set of the winning hypothesis.
  int refit_rounds = 10;
  std::uint64_t seed = 0;
};

struct Pixel {
  int col = 0;
  int row = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// One checker cell, bounded by corners (r, c), (r, c+1), (r+1, c+1), (r+1, c)
/// and shrunk by `inset` (fraction of the cell edge) on every side in the
/// cell's bilinear parameterization.
struct CellRegion {
  int row = 0;
  int col = 0;
  std::array<Point2, 4> corners;
  double inset = 0.15;

  bool contains(const Point2& p) const;
  /// Pixel centres inside the region, clipped to a width x height image.
  std::vector<Pixel> pixels(int width, int height) const;
};

inline constexpr double kDefaultCellInset = 0.15;

/// Cells whose colour parity (row + col) % 2 equals `parity`. Throws
/// GridIncomplete when the corner list does not cover rows x cols.
std::vector<CellRegion> segment_white_squares(std::span<const Point2> corner_grid, int rows, int cols,
                                              int parity, double inset = kDefaultCellInset);

/// Keeps valid pixels whose forward-difference gradient magnitude is below
/// `threshold` (backward difference on the last row/column).
std::vector<Pixel> gradient_filter(const DepthMap& depth, std::span<const Pixel> region, double threshold);

/// Back-projects each pixel centre at its depth-map range. Throws
/// NoConvergence if the lens model cannot be inverted at some pixel.
simd::PointCloud lift_to_3d(std::span<const Pixel> pixels, const DepthMap& depth, const Intrinsics& K,
                            const Distortion& kc);

/// Total-least-squares plane. Throws DegenerateConfiguration for fewer than
/// three or collinear points.
Plane fit_plane_svd(const simd::PointCloud& points);
Plane fit_plane_svd(std::span<const Point3> points);

struct RansacResult {
  Plane plane;
  std::vector<std::size_t> inliers;  // support of the final refit
};

/// Hypothesize-and-verify over random point triples, refit by SVD on the best
/// consensus set, then on its own band inliers for up to opts.refit_rounds. Deterministic for a given seed. Throws InsufficientInliers
/// when the best consensus is below opts.min_inlier_fraction.
RansacResult ransac_plane(const simd::PointCloud& points, const RansacOptions& opts);

/// Range along the corner's viewing ray to the plane. Throws
/// RayParallelToPlane or NegativeIntersection.
double intersect_ray_plane(const Point2& corner_px, const Plane& plane, const Intrinsics& K,
                           const Distortion& kc);

struct PlanarizeResult {
  std::vector<double> depths;    // one per corner, mm
  std::vector<bool> fell_back;   // corner kept its raw measured depth
  Plane plane;
  std::size_t support_pixels = 0;
  std::size_t inliers = 0;
};

/// Full denoising pipeline for one image. `stream` (usually the image index)
/// is mixed into opts.seed so images can be processed in any order. Throws
/// MissingDepth without a depth map and PlaneFitFailed when no plane is
/// found; callers fall back to the raw corner depths in both cases.
PlanarizeResult planarize_depth(const ImageObservation& image, const BoardGeometry& board,
                                const Intrinsics& K, const Distortion& kc, const RansacOptions& opts,
                                std::uint64_t stream = 0);

/// Raw measured depth per corner: the corner depth list when present,
/// otherwise the nearest valid depth-map pixel. Throws MissingDepth.
std::vector<double> raw_corner_depths(const ImageObservation& image);

}  // namespace tofcalib
