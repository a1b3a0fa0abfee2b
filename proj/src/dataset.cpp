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

#include "tofcalib/dataset.hpp"

#include <cmath>
#include <string>

#include "tofcalib/error.hpp"

namespace tofcalib {

Point3 BoardGeometry::corner(int i, int j) const {
  return {j * square_size, i * square_size, 0.0};
}

Point3 BoardGeometry::corner(std::size_t index) const {
  const auto c = static_cast<std::size_t>(cols);
  return corner(static_cast<int>(index / c), static_cast<int>(index % c));
}

std::vector<Point3> BoardGeometry::world_corners() const {
  std::vector<Point3> out;
  out.reserve(corner_count());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.push_back(corner(i, j));
  return out;
}

void BoardGeometry::validate() const {
  if (rows < 2 || cols < 2) raise(ErrorCode::InvalidArgument, "board needs at least 2x2 interior corners");
  if (!(square_size > 0.0) || !std::isfinite(square_size)) {
    raise(ErrorCode::InvalidArgument, "board square size must be positive");
  }
  if (white_parity != 0 && white_parity != 1) raise(ErrorCode::InvalidArgument, "white parity must be 0 or 1");
}

void CalibrationDataset::validate() const {
  board.validate();
  const std::size_t m = board.corner_count();
  for (std::size_t j = 0; j < images.size(); ++j) {
    const auto& img = images[j];
    const std::string tag = "image " + std::to_string(j);
    if (img.corners_px.size() != m) raise(ErrorCode::InvalidArgument, tag + ": corner count does not match board");
    for (const auto& p : img.corners_px) {
      if (!p.allFinite()) raise(ErrorCode::InvalidArgument, tag + ": non-finite corner");
    }
    if (img.corner_depths) {
      if (img.corner_depths->size() != m) raise(ErrorCode::InvalidArgument, tag + ": depth count does not match board");
      for (double d : *img.corner_depths) {
        if (!(d > 0.0) || !std::isfinite(d)) raise(ErrorCode::InvalidArgument, tag + ": non-positive corner depth");
      }
    }
  }
}

Eigen::VectorXd CalibParams::pack() const {
  Eigen::VectorXd v(parameter_count());
  v.segment<4>(kIntrinsicOffset) << K.fx, K.fy, K.cx, K.cy;
  v.segment<4>(kDistortionOffset) << kc.k1, kc.k2, kc.k3, kc.k4;
  for (std::size_t j = 0; j < poses.size(); ++j) {
    v.segment<3>(pose_offset(j)) = poses[j].rvec;
    v.segment<3>(pose_offset(j) + 3) = poses[j].t;
  }
  return v;
}

CalibParams CalibParams::unpack(const Eigen::VectorXd& v) {
  if (v.size() < kPoseOffset || (v.size() - kPoseOffset) % 6 != 0) {
    raise(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
  }
  CalibParams p;
  p.K = {v(0), v(1), v(2), v(3)};
  p.kc = {v(4), v(5), v(6), v(7)};
  const auto n = static_cast<std::size_t>((v.size() - kPoseOffset) / 6);
  p.poses.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    p.poses[j].rvec = v.segment<3>(pose_offset(j));
    p.poses[j].t = v.segment<3>(pose_offset(j) + 3);
  }
  return p;
}

bool CalibParams::finite() const {
  if (!std::isfinite(K.fx) || !std::isfinite(K.fy) || !std::isfinite(K.cx) || !std::isfinite(K.cy)) return false;
  if (!kc.finite()) return false;
  for (const auto& p : poses)
    if (!p.finite()) return false;
  return true;
}

}  // namespace tofcalib
