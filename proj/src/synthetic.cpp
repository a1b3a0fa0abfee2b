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

#include "tofcalib/synthetic.hpp"

#include <cmath>

#include "tofcalib/detail/seeding.hpp"
#include "tofcalib/error.hpp"
#include "tofcalib/simd/kernels.hpp"

namespace tofcalib {

void SynthConfig::validate() const {
  if (rows < 2 || cols < 2 || !(square_size > 0.0)) raise(ErrorCode::InvalidArgument, "invalid board size");
  if (!K.valid() || !kc.finite()) raise(ErrorCode::InvalidArgument, "invalid camera model");
  if (width <= 0 || height <= 0) raise(ErrorCode::InvalidArgument, "invalid image size");
  if (n_images < 1) raise(ErrorCode::InvalidArgument, "need at least one image");
  if (!(min_distance > 0.0) || max_distance < min_distance) raise(ErrorCode::InvalidArgument, "invalid distance range");
  if (!(max_tilt >= 0.0) || max_tilt >= std::numbers::pi / 2) raise(ErrorCode::InvalidArgument, "tilt must be below 90 degrees");
  if (!(noise_px >= 0.0) || !(noise_depth >= 0.0)) raise(ErrorCode::InvalidArgument, "noise must be non-negative");
}

GroundTruth GroundTruth::first_images(std::size_t n) const {
  GroundTruth out = *this;
  out.params.poses.resize(n);
  out.corners_px.resize(n);
  out.corner_depths.resize(n);
  out.planes.resize(n);
  return out;
}

BoardGeometry generate_board(int rows, int cols, double square_size, int white_parity) {
  BoardGeometry board{rows, cols, square_size, white_parity};
  board.validate();
  return board;
}

Pose sample_pose(std::mt19937_64& rng, const SynthConfig& config) {
  const BoardGeometry board{config.rows, config.cols, config.square_size, config.white_parity};
  const Point3 centre((config.cols - 1) * config.square_size / 2.0,
                      (config.rows - 1) * config.square_size / 2.0, 0.0);
  const double img_cx = 0.5 * (config.width - 1);
  const double img_cy = 0.5 * (config.height - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double tilt = config.max_tilt * unit(rng);
    const double tilt_dir = 2.0 * std::numbers::pi * unit(rng);
    const double spin = std::numbers::pi * (2.0 * unit(rng) - 1.0);
    const double distance = config.min_distance + (config.max_distance - config.min_distance) * unit(rng);
    const double u = img_cx + 0.6 * config.width * (unit(rng) - 0.5);
    const double v = img_cy + 0.6 * config.height * (unit(rng) - 0.5);

    const Matrix3 R = rodrigues(tilt * Vector3(std::cos(tilt_dir), std::sin(tilt_dir), 0.0)) *
                      rodrigues(Vector3(0.0, 0.0, spin));
    const Vector3 dir = Vector3((u - config.K.cx) / config.K.fx, (v - config.K.cy) / config.K.fy, 1.0).normalized();
    Pose pose{rodrigues_inv(R), distance * dir - R * centre};

    bool visible = true;
    for (std::size_t i = 0; i < board.corner_count() && visible; ++i) {
      const Point3 xc = R * board.corner(i) + pose.t;
      if (!(xc.z() > 1.0)) {
        visible = false;
        break;
      }
      const Point2 p = project(board.corner(i), pose, config.K, config.kc);
      visible = p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= config.width - 1 && p.y() <= config.height - 1;
    }
    if (!visible) continue;
    const Point2 c = project(centre, pose, config.K, config.kc);
    if (std::abs(c.x() - img_cx) > 0.3 * config.width || std::abs(c.y() - img_cy) > 0.3 * config.height) continue;
    return pose;
  }
  raise(ErrorCode::RejectionExhausted, "no admissible board pose in 1000 attempts");
}

namespace {

Plane board_plane(const Pose& pose) {
  const Matrix3 R = pose.rotation();
  return Plane::canonical(R.col(2), R.col(2).dot(pose.t));
}

std::optional<double> range_on_board(const Vector3& ray, const Plane& plane, const Pose& pose,
                                     const BoardGeometry& board) {
  const double denom = plane.normal.dot(ray);
  if (std::abs(denom) <= 1e-12) return std::nullopt;
  const double s = plane.offset / denom;
  if (!(s > 0.0)) return std::nullopt;
  const Point3 xb = pose.rotation().transpose() * (s * ray - pose.t);
  const double lo = -board.square_size;
  if (xb.x() < lo || xb.y() < lo || xb.x() > board.cols * board.square_size ||
      xb.y() > board.rows * board.square_size) {
    return std::nullopt;
  }
  return s;
}

}  // namespace

std::optional<double> board_range_at(const Point2& pixel, const Pose& pose, const BoardGeometry& board,
                                     const Intrinsics& K, const Distortion& kc) {
  Vector3 ray;
  try {
    ray = pixel_ray(pixel, K, kc);
  } catch (const Error&) {
    return std::nullopt;
  }
  return range_on_board(ray, board_plane(pose), pose, board);
}

DepthMap render_depth_map(const Pose& pose, const BoardGeometry& board, const Intrinsics& K,
                          const Distortion& kc, int width, int height) {
  DepthMap map(width, height);
  const std::size_t n = map.data.size();
  std::vector<double> u(n), v(n), ones(n, 1.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      u[static_cast<std::size_t>(r) * width + c] = c;
      v[static_cast<std::size_t>(r) * width + c] = r;
    }
  }
  // Unit-range back-projection is exactly the unit viewing ray.
  simd::PointCloud rays;
  std::vector<std::uint8_t> ok;
  simd::back_project_batch({K.fx, K.fy, K.cx, K.cy, kc.k1, kc.k2, kc.k3, kc.k4}, u, v, ones, rays, ok);
  const Plane plane = board_plane(pose);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    if (auto s = range_on_board(rays.point(i), plane, pose, board)) map.data[i] = *s;
  }
  return map;
}

SyntheticData render_dataset(const SynthConfig& config) {
  config.validate();
  SyntheticData out;
  CalibrationDataset& data = out.dataset;
  data.board = generate_board(config.rows, config.cols, config.square_size, config.white_parity);
  data.image_width = config.width;
  data.image_height = config.height;
  out.truth.params.K = config.K;
  out.truth.params.kc = config.kc;

  std::mt19937_64 rng(config.seed);
  const auto world = data.board.world_corners();
  for (int j = 0; j < config.n_images; ++j) {
    const Pose pose = sample_pose(rng, config);
    ImageObservation img;
    std::vector<double> depths;
    for (const auto& xw : world) {
      img.corners_px.push_back(project(xw, pose, config.K, config.kc));
      depths.push_back(depth_of(xw, pose));
    }
    img.corner_depths = depths;
    if (config.depth_maps) {
      img.depth_map = render_depth_map(pose, data.board, config.K, config.kc, config.width, config.height);
    }
    out.truth.params.poses.push_back(pose);
    out.truth.corners_px.push_back(img.corners_px);
    out.truth.corner_depths.push_back(std::move(depths));
    out.truth.planes.push_back(board_plane(pose));
    data.images.push_back(std::move(img));
  }
  return out;
}

CalibrationDataset add_noise(const CalibrationDataset& data, double sigma_px, double sigma_d,
                             std::uint64_t seed) {
  if (!(sigma_px >= 0.0) || !(sigma_d >= 0.0)) raise(ErrorCode::InvalidArgument, "noise must be non-negative");
  CalibrationDataset out = data;
  if (sigma_px == 0.0 && sigma_d == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> px(0.0, sigma_px > 0.0 ? sigma_px : 1.0);
  std::normal_distribution<double> dd(0.0, sigma_d > 0.0 ? sigma_d : 1.0);
  for (auto& img : out.images) {
    if (sigma_px > 0.0) {
      for (auto& c : img.corners_px) {
        c.x() += px(rng);
        c.y() += px(rng);
      }
    }
    if (sigma_d > 0.0) {
      if (img.corner_depths)
        for (double& d : *img.corner_depths) d += dd(rng);
      if (img.depth_map)
        for (double& d : img.depth_map->data)
          if (std::isfinite(d)) d += dd(rng);
    }
  }
  return out;
}

CalibrationDataset subset(const CalibrationDataset& data, std::size_t n_images, int k) {
  if (n_images > data.image_count() || k > data.board.rows || k > data.board.cols) {
    raise(ErrorCode::SubsetTooLarge, "requested subset exceeds the dataset");
  }
  if (k < 2 || n_images < 1) raise(ErrorCode::InvalidArgument, "subset needs at least one image and k >= 2");
  CalibrationDataset out;
  out.board = data.board;
  out.board.rows = k;
  out.board.cols = k;
  out.image_width = data.image_width;
  out.image_height = data.image_height;
  out.groundtruth_path = data.groundtruth_path;
  for (std::size_t j = 0; j < n_images; ++j) {
    const auto& src = data.images[j];
    ImageObservation img;
    img.depth_map = src.depth_map;
    img.depth_map_path = src.depth_map_path;
    if (src.corner_depths) img.corner_depths.emplace();
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) {
        const std::size_t idx = static_cast<std::size_t>(r) * data.board.cols + c;
        img.corners_px.push_back(src.corners_px[idx]);
        if (src.corner_depths) img.corner_depths->push_back((*src.corner_depths)[idx]);
      }
    }
    out.images.push_back(std::move(img));
  }
  return out;
}

SyntheticData synthesize(const SynthConfig& config) {
  SyntheticData out = render_dataset(config);
  out.dataset = add_noise(out.dataset, config.noise_px, config.noise_depth, detail::mix_seed(config.seed, 0xD1CE));
  return out;
}

}  // namespace tofcalib
