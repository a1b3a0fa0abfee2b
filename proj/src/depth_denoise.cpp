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

#include "tofcalib/depth_denoise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "tofcalib/detail/seeding.hpp"
#include "tofcalib/error.hpp"

namespace tofcalib {

Plane Plane::canonical(const Vector3& normal, double offset) {
  const double n = normal.norm();
  Plane p{normal / n, offset / n};
  if (p.offset < 0.0) {
    p.normal = -p.normal;
    p.offset = -p.offset;
  }
  return p;
}

bool CellRegion::contains(const Point2& p) const {
  const Point2& p00 = corners[0];
  const Point2& p10 = corners[1];
  const Point2& p11 = corners[2];
  const Point2& p01 = corners[3];
  double s = 0.5, t = 0.5;
  for (int it = 0; it < 10; ++it) {
    const Point2 b = (1 - s) * (1 - t) * p00 + s * (1 - t) * p10 + s * t * p11 + (1 - s) * t * p01;
    Eigen::Matrix2d J;
    J.col(0) = (1 - t) * (p10 - p00) + t * (p11 - p01);
    J.col(1) = (1 - s) * (p01 - p00) + s * (p11 - p10);
    const Eigen::Vector2d step = J.inverse() * (b - p);
    s -= step.x();
    t -= step.y();
    if (step.squaredNorm() < 1e-24) break;
  }
  return s >= inset && s <= 1.0 - inset && t >= inset && t <= 1.0 - inset;
}

std::vector<Pixel> CellRegion::pixels(int width, int height) const {
  double umin = corners[0].x(), umax = umin, vmin = corners[0].y(), vmax = vmin;
  for (const auto& c : corners) {
    umin = std::min(umin, c.x());
    umax = std::max(umax, c.x());
    vmin = std::min(vmin, c.y());
    vmax = std::max(vmax, c.y());
  }
  const int c0 = std::max(0, static_cast<int>(std::ceil(umin)));
  const int c1 = std::min(width - 1, static_cast<int>(std::floor(umax)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(vmin)));
  const int r1 = std::min(height - 1, static_cast<int>(std::floor(vmax)));
  std::vector<Pixel> out;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (contains(Point2(c, r))) out.push_back({c, r});
  return out;
}

std::vector<CellRegion> segment_white_squares(std::span<const Point2> corner_grid, int rows, int cols,
                                              int parity, double inset) {
  if (rows < 2 || cols < 2 || corner_grid.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    raise(ErrorCode::GridIncomplete, "corner list does not cover the interior grid");
  }
  auto at = [&](int i, int j) { return corner_grid[static_cast<std::size_t>(i) * cols + j]; };
  std::vector<CellRegion> cells;
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      if ((r + c) % 2 != parity) continue;
      cells.push_back({r, c, {at(r, c), at(r, c + 1), at(r + 1, c + 1), at(r + 1, c)}, inset});
    }
  }
  return cells;
}

std::vector<Pixel> gradient_filter(const DepthMap& depth, std::span<const Pixel> region, double threshold) {
  std::vector<Pixel> kept;
  kept.reserve(region.size());
  for (const Pixel& p : region) {
    if (!depth.valid(p.col, p.row)) continue;
    const int cn = p.col + 1 < depth.width ? p.col + 1 : p.col - 1;
    const int rn = p.row + 1 < depth.height ? p.row + 1 : p.row - 1;
    if (!depth.valid(cn, p.row) || !depth.valid(p.col, rn)) continue;
    const double d = depth.at(p.col, p.row);
    const double gx = std::abs(depth.at(cn, p.row) - d);
    const double gy = std::abs(depth.at(p.col, rn) - d);
    if (std::sqrt(gx * gx + gy * gy) < threshold) kept.push_back(p);
  }
  return kept;
}

namespace {

simd::LensParams lens_of(const Intrinsics& K, const Distortion& kc) {
  return {K.fx, K.fy, K.cx, K.cy, kc.k1, kc.k2, kc.k3, kc.k4};
}

/// Lifts pixels, returning the per-pixel success mask instead of throwing.
simd::PointCloud lift_pixels(std::span<const Pixel> pixels, const DepthMap& depth, const Intrinsics& K,
                             const Distortion& kc, std::vector<std::uint8_t>& ok) {
  std::vector<double> u(pixels.size()), v(pixels.size()), d(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    u[i] = pixels[i].col;
    v[i] = pixels[i].row;
    d[i] = depth.at(pixels[i].col, pixels[i].row);
  }
  simd::PointCloud cloud;
  simd::back_project_batch(lens_of(K, kc), u, v, d, cloud, ok);
  return cloud;
}

Plane fit_centered(const Eigen::MatrixX3d& pts) {
  if (pts.rows() < 3) raise(ErrorCode::DegenerateConfiguration, "plane fit needs at least three points");
  const Eigen::RowVector3d centroid = pts.colwise().mean();
  const Eigen::MatrixX3d centered = pts.rowwise() - centroid;
  Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-9 * s(0)) {
    raise(ErrorCode::DegenerateConfiguration, "points are collinear");
  }
  const Vector3 n = svd.matrixV().col(2);
  return Plane::canonical(n, n.dot(centroid.transpose()));
}

}  // namespace

simd::PointCloud lift_to_3d(std::span<const Pixel> pixels, const DepthMap& depth, const Intrinsics& K,
                            const Distortion& kc) {
  for (const Pixel& p : pixels) {
    if (!depth.valid(p.col, p.row)) raise(ErrorCode::InvalidArgument, "pixel has no valid depth");
  }
  std::vector<std::uint8_t> ok;
  simd::PointCloud cloud = lift_pixels(pixels, depth, K, kc, ok);
  if (std::find(ok.begin(), ok.end(), 0) != ok.end()) {
    raise(ErrorCode::NoConvergence, "lens model inversion failed while lifting pixels");
  }
  return cloud;
}

Plane fit_plane_svd(const simd::PointCloud& points) {
  Eigen::MatrixX3d m(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Eigen::Index>(i)) << points.x[i], points.y[i], points.z[i];
  return fit_centered(m);
}

Plane fit_plane_svd(std::span<const Point3> points) {
  Eigen::MatrixX3d m(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return fit_centered(m);
}

RansacResult ransac_plane(const simd::PointCloud& points, const RansacOptions& opts) {
  const std::size_t n = points.size();
  if (n < 3) raise(ErrorCode::DegenerateConfiguration, "RANSAC needs at least three points");
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  Plane best;
  std::size_t best_count = 0;
  for (int it = 0; it < opts.iterations; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    std::size_t c = pick(rng);
    if (a == b || b == c || a == c) continue;
    const Point3 pa = points.point(a);
    const Vector3 normal = (points.point(b) - pa).cross(points.point(c) - pa);
    const double len = normal.norm();
    if (!(len > 1e-12)) continue;
    const Plane candidate = Plane::canonical(normal, normal.dot(pa));
    const std::size_t count = simd::count_plane_inliers(candidate.normal, candidate.offset,
                                                        opts.inlier_threshold, points);
    if (count > best_count) {
      best_count = count;
      best = candidate;
    }
  }
  if (best_count == 0 ||
      static_cast<double>(best_count) < opts.min_inlier_fraction * static_cast<double>(n)) {
    raise(ErrorCode::InsufficientInliers, "best plane consensus is " + std::to_string(best_count) +
                                              " of " + std::to_string(n) + " points");
  }
  auto band = [&](const Plane& plane, std::vector<std::size_t>& idx) {
    idx.clear();
    simd::PointCloud support;
    for (std::size_t i = 0; i < n; ++i) {
      if (simd::within_plane_band(plane.normal.x(), plane.normal.y(), plane.normal.z(), plane.offset,
                                  opts.inlier_threshold, points.x[i], points.y[i], points.z[i])) {
        idx.push_back(i);
        support.push_back(points.point(i));
      }
    }
    return support;
  };
  RansacResult result;
  result.plane = fit_plane_svd(band(best, result.inliers));
  // A band around a three-point hypothesis truncates the noise asymmetrically;
  // re-selecting around the refit removes most of that pull.
  std::vector<std::size_t> next;
  for (int round = 0; round < opts.refit_rounds; ++round) {
    const simd::PointCloud support = band(result.plane, next);
    if (next == result.inliers || next.size() < 3) break;
    result.plane = fit_plane_svd(support);
    result.inliers.swap(next);
  }
  return result;
}

double intersect_ray_plane(const Point2& corner_px, const Plane& plane, const Intrinsics& K,
                           const Distortion& kc) {
  const Vector3 ray = pixel_ray(corner_px, K, kc);
  const double denom = plane.normal.dot(ray);
  if (std::abs(denom) <= 1e-9) raise(ErrorCode::RayParallelToPlane, "viewing ray is parallel to the plane");
  const double s = plane.offset / denom;
  if (!(s > 0.0)) raise(ErrorCode::NegativeIntersection, "plane lies behind the camera");
  return s;
}

std::vector<double> raw_corner_depths(const ImageObservation& image) {
  if (image.corner_depths) return *image.corner_depths;
  if (!image.depth_map) raise(ErrorCode::MissingDepth, "image has neither corner depths nor a depth map");
  std::vector<double> out;
  out.reserve(image.corners_px.size());
  for (const auto& c : image.corners_px) {
    const int col = static_cast<int>(std::lround(c.x()));
    const int row = static_cast<int>(std::lround(c.y()));
    if (!image.depth_map->valid(col, row)) raise(ErrorCode::MissingDepth, "no valid depth at a corner pixel");
    out.push_back(image.depth_map->at(col, row));
  }
  return out;
}

PlanarizeResult planarize_depth(const ImageObservation& image, const BoardGeometry& board,
                                const Intrinsics& K, const Distortion& kc, const RansacOptions& opts,
                                std::uint64_t stream) {
  if (!image.depth_map) raise(ErrorCode::MissingDepth, "image has no depth map");
  const DepthMap& depth = *image.depth_map;

  const auto cells = segment_white_squares(image.corners_px, board.rows, board.cols, board.white_parity);
  std::vector<Pixel> support;
  for (const auto& cell : cells) {
    const auto px = cell.pixels(depth.width, depth.height);
    const auto kept = gradient_filter(depth, px, opts.gradient_threshold);
    support.insert(support.end(), kept.begin(), kept.end());
  }

  std::vector<std::uint8_t> ok;
  const simd::PointCloud lifted = lift_pixels(support, depth, K, kc, ok);
  simd::PointCloud cloud;
  for (std::size_t i = 0; i < lifted.size(); ++i)
    if (ok[i]) cloud.push_back(lifted.point(i));

  PlanarizeResult result;
  result.support_pixels = cloud.size();
  RansacOptions seeded = opts;
  seeded.seed = detail::mix_seed(opts.seed, stream);
  try {
    const RansacResult fit = ransac_plane(cloud, seeded);
    result.plane = fit.plane;
    result.inliers = fit.inliers.size();
  } catch (const Error& e) {
    raise(ErrorCode::PlaneFitFailed, e.what());
  }

  const std::size_t m = image.corners_px.size();
  result.depths.resize(m);
  result.fell_back.assign(m, false);
  std::vector<double> raw;
  for (std::size_t i = 0; i < m; ++i) {
    try {
      result.depths[i] = intersect_ray_plane(image.corners_px[i], result.plane, K, kc);
    } catch (const Error&) {
      if (raw.empty()) raw = raw_corner_depths(image);
      result.depths[i] = raw[i];
      result.fell_back[i] = true;
    }
  }
  return result;
}

}  // namespace tofcalib
