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

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "test_support.hpp"
#include "tofcalib/synthetic.hpp"
#include "tofcalib/traditional_calib.hpp"

using namespace tofcalib;
using namespace tofcalib::testing;

TEST_CASE("board generation") {
  const BoardGeometry b = generate_board(2, 2, 50.0);
  const auto c = b.world_corners();
  REQUIRE(c.size() == 4);
  CHECK(c[0] == Point3(0, 0, 0));
  CHECK(c[1] == Point3(50, 0, 0));
  CHECK(c[2] == Point3(0, 50, 0));
  CHECK(c[3] == Point3(50, 50, 0));
  const BoardGeometry big = generate_board(11, 11, 50.0);
  CHECK(big.corner_count() == 121);
  CHECK(big.corner(3, 7) == Point3(350, 150, 0));
  CHECK_ERROR_CODE(generate_board(1, 4, 50.0), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(generate_board(3, 3, -1.0), ErrorCode::InvalidArgument);
}

TEST_CASE("sampled poses keep the whole board in view") {
  const SynthConfig cfg;
  const BoardGeometry board = generate_board(cfg.rows, cfg.cols, cfg.square_size);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const Pose p = sample_pose(rng, cfg);
    bool inside = true;
    for (const Point3& x : board.world_corners()) {
      const Point2 px = project(x, p, cfg.K, cfg.kc);
      inside = inside && px.x() >= 0 && px.y() >= 0 && px.x() <= cfg.width - 1 && px.y() <= cfg.height - 1;
    }
    CHECK_MESSAGE(inside, "seed ", seed);
    const double dist = (p.rotation() * board.corner(5, 5) + p.t).norm();
    CHECK(dist >= cfg.min_distance - 1e-9);
    CHECK(dist <= cfg.max_distance + 1e-9);
  }
  std::mt19937_64 a(7), b(7);
  CHECK(sample_pose(a, cfg) == sample_pose(b, cfg));
}

TEST_CASE("zero tilt gives a frontal board") {
  SynthConfig cfg;
  cfg.max_tilt = 0.0;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Matrix3 R = sample_pose(rng, cfg).rotation();
    CHECK((R.col(2) - Vector3::UnitZ()).norm() < 1e-12);
  }
}

TEST_CASE("rendered dataset is self-consistent") {
  SynthConfig cfg;
  cfg.n_images = 3;
  cfg.seed = 4;
  const SyntheticData s = render_dataset(cfg);
  const auto& t = s.truth;
  REQUIRE(s.dataset.image_count() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    const Pose& pose = t.params.poses[j];
    const DepthMap& map = *s.dataset.images[j].depth_map;
    for (std::size_t i = 0; i < s.dataset.board.corner_count(); ++i) {
      const Point3 x = s.dataset.board.corner(i);
      CHECK(s.dataset.images[j].corners_px[i] == project(x, pose, t.params.K, t.params.kc));
      CHECK((*s.dataset.images[j].corner_depths)[i] == depth_of(x, pose));
      // Depth at the pixel containing the corner, re-evaluated at that exact corner position.
      const auto at_corner = board_range_at(t.corners_px[j][i], pose, s.dataset.board, t.params.K, t.params.kc);
      REQUIRE(at_corner.has_value());
      CHECK(std::abs(*at_corner - depth_of(x, pose)) < 1e-9);
    }
    // Integer pixels agree with the analytic range.
    int checked = 0;
    for (int r = 0; r < map.height; r += 7) {
      for (int c = 0; c < map.width; c += 7) {
        const auto d = board_range_at({c, r}, pose, s.dataset.board, t.params.K, t.params.kc);
        CHECK(d.has_value() == map.valid(c, r));
        if (d && map.valid(c, r)) {
          CHECK(std::abs(*d - map.at(c, r)) < 1e-9);
          ++checked;
        }
      }
    }
    CHECK(checked > 50);
  }
  const SyntheticData again = render_dataset(cfg);
  CHECK(again.dataset.images[2].corners_px == s.dataset.images[2].corners_px);
  CHECK(*again.dataset.images[1].depth_map == *s.dataset.images[1].depth_map);
}

TEST_CASE("noiseless render calibrates back to the truth") {
  SynthConfig cfg;
  cfg.n_images = 3;
  cfg.seed = 5;
  cfg.depth_maps = false;
  const SyntheticData s = synthesize(cfg);
  const TraditionalResult r = traditional_calibrate(s.dataset);
  CHECK(std::abs(r.params.K.fx - 284.4) < 1e-6);
  CHECK(std::abs(r.params.kc.k1 - 0.1) < 1e-8);
}

TEST_CASE("noise injection") {
  SynthConfig cfg;
  cfg.n_images = 7;
  cfg.seed = 6;
  const SyntheticData s = render_dataset(cfg);
  CHECK(add_noise(s.dataset, 0.0, 0.0, 1).images[0].corners_px == s.dataset.images[0].corners_px);

  const double sigma = 0.01;
  const CalibrationDataset noisy = add_noise(s.dataset, sigma, 10.0, 2);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (int rep = 0; rep < 120; ++rep) {
    const CalibrationDataset d = rep == 0 ? noisy : add_noise(s.dataset, sigma, 0.0, 100 + rep);
    for (std::size_t j = 0; j < d.image_count(); ++j) {
      for (std::size_t i = 0; i < d.images[j].corners_px.size(); ++i) {
        const Point2 e = d.images[j].corners_px[i] - s.dataset.images[j].corners_px[i];
        sum += e.x() + e.y();
        sq += e.squaredNorm();
        n += 2;
      }
    }
  }
  REQUIRE(n >= 100000);
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(var / (sigma * sigma) - 1.0) < 0.02);

  const auto& raw = *s.dataset.images[0].depth_map;
  const auto& dirty = *noisy.images[0].depth_map;
  bool map_changed = false;
  for (std::size_t k = 0; k < raw.data.size(); ++k) {
    CHECK(std::isfinite(raw.data[k]) == std::isfinite(dirty.data[k]));
    map_changed = map_changed || (std::isfinite(raw.data[k]) && raw.data[k] != dirty.data[k]);
  }
  CHECK(map_changed);
  CHECK((*noisy.images[0].corner_depths)[0] != (*s.dataset.images[0].corner_depths)[0]);
  CHECK(add_noise(s.dataset, sigma, 10.0, 3).images[0].corners_px != noisy.images[0].corners_px);
}

TEST_CASE("subsets") {
  SynthConfig cfg;
  cfg.n_images = 7;
  cfg.seed = 8;
  cfg.depth_maps = false;
  const SyntheticData s = synthesize(cfg);
  const CalibrationDataset four = subset(s.dataset, 3, 2);
  CHECK(four.image_count() == 3);
  CHECK(four.board.corner_count() == 4);
  CHECK(four.images[2].corners_px[3] == s.dataset.images[2].corners_px[12]);
  const CalibrationDataset full = subset(s.dataset, 7, 6);
  CHECK(full.board.corner_count() == 36);
  CHECK((*full.images[6].corner_depths)[35] == (*s.dataset.images[6].corner_depths)[5 * 11 + 5]);
  for (std::size_t n = 3; n <= 7; ++n) CHECK(subset(s.dataset, n, 4).image_count() == n);
  CHECK_ERROR_CODE(subset(s.dataset, 8, 3), ErrorCode::SubsetTooLarge);
  CHECK_ERROR_CODE(subset(s.dataset, 3, 12), ErrorCode::SubsetTooLarge);
  CHECK_ERROR_CODE(subset(s.dataset, 3, 1), ErrorCode::InvalidArgument);
}

TEST_CASE("noise never touches the ground truth") {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.n_images = 2;
  cfg.noise_px = 0.5;
  cfg.noise_depth = 10.0;
  const SyntheticData s = synthesize(cfg);
  for (std::size_t i = 0; i < s.truth.corners_px[1].size(); ++i) {
    CHECK(s.truth.corners_px[1][i] == project(s.dataset.board.corner(i), s.truth.params.poses[1], cfg.K, cfg.kc));
  }
}
