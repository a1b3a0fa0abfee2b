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

// Groundtruth-known checkerboard datasets: random board poses, exact corner
// projections and ranges, analytic depth maps, and Gaussian measurement noise.

#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "tofcalib/dataset.hpp"
#include "tofcalib/depth_denoise.hpp"

namespace tofcalib {

struct SynthConfig {
  int rows = 11;  // interior corners; 11 x 11 = 121
  int cols = 11;
  double square_size = 50.0;
  int white_parity = 0;
  Intrinsics K{284.4, 284.4, 100.0, 100.0};
  Distortion kc{0.1, -0.05, 0.001, 0.002};
  int width = 200;
  int height = 200;
  int n_images = 7;
  double min_distance = 600.0;  // mm, camera to board centre
  double max_distance = 1500.0;
  double max_tilt = 40.0 * std::numbers::pi / 180.0;
  double noise_px = 0.0;
  double noise_depth = 0.0;
  std::uint64_t seed = 1;
  bool depth_maps = true;

  void validate() const;
};

struct GroundTruth {
  CalibParams params;
  std::vector<std::vector<Point2>> corners_px;   // exact projections
  std::vector<std::vector<double>> corner_depths;  // exact ranges
  std::vector<Plane> planes;                     // board plane per image, camera frame

  GroundTruth first_images(std::size_t n) const;
};

struct SyntheticData {
  CalibrationDataset dataset;
  GroundTruth truth;
};

BoardGeometry generate_board(int rows, int cols, double square_size, int white_parity = 0);

/// Rejection-samples a pose with every corner inside the image and the board
/// centre inside the central 60% of it. Throws RejectionExhausted after 1000
/// attempts.
Pose sample_pose(std::mt19937_64& rng, const SynthConfig& config);

/// Range to the board along the ray through `pixel`, or nullopt when the ray
/// misses the physical board (one square wider than the corner grid).
std::optional<double> board_range_at(const Point2& pixel, const Pose& pose, const BoardGeometry& board,
                                     const Intrinsics& K, const Distortion& kc);

DepthMap render_depth_map(const Pose& pose, const BoardGeometry& board, const Intrinsics& K,
                          const Distortion& kc, int width, int height);

/// Noiseless dataset plus the groundtruth that generated it. Noise settings in
/// the config are ignored here; see synthesize().
SyntheticData render_dataset(const SynthConfig& config);

/// i.i.d. Gaussian noise on every corner coordinate (sigma_px) and every
/// depth value, corner depths and valid depth-map pixels alike (sigma_d).
CalibrationDataset add_noise(const CalibrationDataset& data, double sigma_px, double sigma_d,
                             std::uint64_t seed);

/// First n_images and the top-left k x k corner block.
/// Throws SubsetTooLarge when either exceeds the dataset.
CalibrationDataset subset(const CalibrationDataset& data, std::size_t n_images, int k);

/// render_dataset followed by add_noise with a seed derived from config.seed.
SyntheticData synthesize(const SynthConfig& config);

}  // namespace tofcalib
