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

// Accuracy metrics against synthetic groundtruth and the Monte-Carlo grid
// that compares the two calibration pipelines over image and corner counts.

#include <cstdint>
#include <string>
#include <vector>

#include "tofcalib/dataset.hpp"
#include "tofcalib/depth_calib.hpp"
#include "tofcalib/synthetic.hpp"
#include "tofcalib/traditional_calib.hpp"

namespace tofcalib {

/// Mean distance between the true board corners and the corners recovered by
/// back-projecting the measured pixels at their true depths under `estimate`
/// and mapping them through the estimated pose. Uses every image of
/// `estimate` against the leading images of `measured`, all corners.
/// Throws MissingGroundtruth when truth does not cover the images. Returns
/// +inf when a corner cannot be back-projected.
double mean_3d_error(const CalibParams& estimate, const CalibrationDataset& measured, const GroundTruth& truth);

/// (|dfx| + |dfy|) / (fx_g + fy_g).
double relative_focal_error(const Intrinsics& estimate, const Intrinsics& truth);

enum class Method { Traditional, Depth };
std::string_view to_string(Method m);

enum class RunStatus { Ok, Diverged, Failed };
std::string_view to_string(RunStatus s);

struct MethodRun {
  RunStatus status = RunStatus::Failed;
  double error_3d = 0.0;      // mm; +inf when failed
  double focal_error = 0.0;   // +inf when failed
  std::string failure;        // error text when failed
};

struct Dispersion {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Quartiles with linear interpolation between order statistics. +inf
/// entries sort last. Empty input gives NaN.
Dispersion dispersion(std::vector<double> values);

struct MethodStats {
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t divergences = 0;
  Dispersion error_3d;
  Dispersion focal_error;
};

struct BenchmarkCell {
  int n_images = 0;
  int corner_grid = 0;  // k for a k x k corner block
  std::vector<MethodRun> traditional;  // one per seed, in seed order
  std::vector<MethodRun> depth;
  MethodStats traditional_stats;
  MethodStats depth_stats;

  int corners() const { return corner_grid * corner_grid; }
  const MethodStats& stats(Method m) const { return m == Method::Traditional ? traditional_stats : depth_stats; }
};

struct BenchmarkConfig {
  SynthConfig synth;  // n_images is raised to the largest grid image count
  std::vector<int> image_counts{3, 4, 5, 6, 7};
  std::vector<int> corner_grids{2, 3, 4, 5, 6};
  TraditionalOptions traditional;
  DepthCalibOptions depth;
  unsigned jobs = 0;  // 0 = all cores; never changes the results
};

struct BenchmarkReport {
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  std::vector<BenchmarkCell> cells;  // image count major, corner grid minor

  const BenchmarkCell* find(int n_images, int corner_grid) const;
};

/// Canonical text form of the configuration, hashed into the report.
std::string canonical_config(const BenchmarkConfig& config);
std::string fnv1a_hex(const std::string& text);

/// Both pipelines on a subset, evaluated on the full board.
MethodRun run_method(Method method, const CalibrationDataset& full, const GroundTruth& truth, std::size_t n_images,
                     int corner_grid, const BenchmarkConfig& config);

/// One noisy dataset per seed (synth.seed replaced by the seed), every grid
/// cell and both methods. Cell failures are recorded, never thrown.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const std::vector<std::uint64_t>& seeds);

}  // namespace tofcalib
