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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tofcalib/camera_model.hpp"
#include "tofcalib/depth_map.hpp"

namespace tofcalib {

/// Interior-corner grid of a checkerboard lying on the world z = 0 plane.
/// Corner (i, j) (row i, column j) sits at (j * square_size, i * square_size, 0)
/// and has flat index i * cols + j. Cell (r, c) is bounded by corners
/// (r, c) .. (r + 1, c + 1) and is white when (r + c) % 2 == white_parity.
struct BoardGeometry {
  int rows = 0;
  int cols = 0;
  double square_size = 0.0;  // mm
  int white_parity = 0;

  std::size_t corner_count() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  Point3 corner(int i, int j) const;
  Point3 corner(std::size_t index) const;
  std::vector<Point3> world_corners() const;
  void validate() const;

  friend bool operator==(const BoardGeometry&, const BoardGeometry&) = default;
};

struct ImageObservation {
  std::vector<Point2> corners_px;  // row-major over the board grid
  std::optional<std::vector<double>> corner_depths;  // mm, one per corner
  std::optional<DepthMap> depth_map;
  std::string depth_map_path;  // relative to the manifest, when loaded from disk
};

struct CalibrationDataset {
  BoardGeometry board;
  int image_width = 0;
  int image_height = 0;
  std::vector<ImageObservation> images;
  std::string groundtruth_path;

  std::size_t image_count() const { return images.size(); }
  /// Throws InvalidArgument when corner counts or depths are inconsistent.
  void validate() const;
};

/// The complete unknown vector: intrinsics, distortion and one pose per image.
/// Packed layout: [fx fy cx cy | k1 k2 k3 k4 | (rvec, t) per image].
struct CalibParams {
  Intrinsics K;
  Distortion kc;
  std::vector<Pose> poses;

  static constexpr Eigen::Index kIntrinsicOffset = 0;
  static constexpr Eigen::Index kDistortionOffset = 4;
  static constexpr Eigen::Index kPoseOffset = 8;
  static Eigen::Index pose_offset(std::size_t image) { return kPoseOffset + 6 * static_cast<Eigen::Index>(image); }

  Eigen::Index parameter_count() const { return kPoseOffset + 6 * static_cast<Eigen::Index>(poses.size()); }
  Eigen::VectorXd pack() const;
  static CalibParams unpack(const Eigen::VectorXd& v);
  bool finite() const;
};

}  // namespace tofcalib
