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
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "test_support.hpp"
#include "tofcalib/evaluation.hpp"
#include "tofcalib/report.hpp"
#include "tofcalib/synthetic.hpp"

using namespace tofcalib;
using namespace tofcalib::testing;

namespace {

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

BenchmarkConfig small_config() {
  BenchmarkConfig cfg;
  cfg.synth.noise_px = 0.01;
  cfg.synth.noise_depth = 10.0;
  cfg.image_counts = {3, 4};
  cfg.corner_grids = {2, 4};
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST_CASE("relative focal error") {
  const Intrinsics g = default_intrinsics();
  CHECK(relative_focal_error(g, g) == 0.0);
  Intrinsics scaled = g;
  scaled.fx *= 1.1;
  scaled.fy *= 1.1;
  CHECK(relative_focal_error(scaled, g) == doctest::Approx(0.1).epsilon(1e-12));
  Intrinsics off = g;
  off.fx = 290.0;
  off.fy = 281.0;
  CHECK(relative_focal_error(off, g) == doctest::Approx(9.0 / 568.8).epsilon(1e-12));
  CHECK(relative_focal_error(off, g) == doctest::Approx(0.0158).epsilon(1e-2));
}

TEST_CASE("mean 3D error") {
  SynthConfig cfg;
  cfg.n_images = 3;
  cfg.seed = 31;
  cfg.depth_maps = false;
  const SyntheticData s = synthesize(cfg);
  CHECK(mean_3d_error(s.truth.params, s.dataset, s.truth) < 1e-12);

  SUBCASE("translation offset on a frontal board") {
    cfg.max_tilt = 0.0;
    const SyntheticData f = synthesize(cfg);
    CalibParams p = f.truth.params;
    p.poses.resize(1);
    p.poses[0].t.z() += 1.0;
    // Back-projection with the true range lands on the board; removing the
    // shifted translation moves every point 1 mm along the board normal.
    CHECK(mean_3d_error(p, f.dataset, f.truth) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("ground truth must cover the calibrated images") {
    const GroundTruth partial = s.truth.first_images(2);
    CHECK_ERROR_CODE(mean_3d_error(s.truth.params, s.dataset, partial), ErrorCode::MissingGroundtruth);
  }
}

TEST_CASE("dispersion") {
  const Dispersion d = dispersion({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(d.q1 == 2.0);
  CHECK(d.median == 3.0);
  CHECK(d.q3 == 4.0);
  const Dispersion even = dispersion({1.0, 2.0, 3.0, 4.0});
  CHECK(even.median == 2.5);
  CHECK(even.q1 == 1.75);
  const double inf = std::numeric_limits<double>::infinity();
  const Dispersion failed = dispersion({1.0, inf, inf});
  CHECK(std::isinf(failed.median));
  CHECK(std::isnan(dispersion({}).median));
}

TEST_CASE("benchmark report is deterministic and independent of parallelism") {
  const std::vector<std::uint64_t> seeds{1, 2};
  BenchmarkConfig cfg = small_config();
  const BenchmarkReport a = run_benchmark(cfg, seeds);
  cfg.jobs = 4;
  const BenchmarkReport b = run_benchmark(cfg, seeds);
  CHECK(a.config_hash == b.config_hash);
  CHECK(table_csv(a) == table_csv(b));
  CHECK(table_text(a) == table_text(b));
  CHECK(focal_error_csv(a) == focal_error_csv(b));
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  REQUIRE(a.cells.size() == 4);
  CHECK(a.find(4, 4) != nullptr);
  CHECK(a.find(7, 4) == nullptr);
  for (const auto& c : a.cells) {
    CHECK(c.traditional.size() == 2);
    CHECK(c.depth_stats.runs == 2);
  }

  const BenchmarkReport swapped = run_benchmark(small_config(), {2, 1});
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(swapped.cells[i].depth_stats.error_3d.median == a.cells[i].depth_stats.error_3d.median);
    CHECK(swapped.cells[i].traditional_stats.focal_error.q3 == a.cells[i].traditional_stats.focal_error.q3);
  }
}

TEST_CASE("benchmark config hash tracks the configuration") {
  BenchmarkConfig a = small_config();
  BenchmarkConfig b = small_config();
  CHECK(fnv1a_hex(canonical_config(a)) == fnv1a_hex(canonical_config(b)));
  b.synth.noise_depth = 5.0;
  CHECK(fnv1a_hex(canonical_config(a)) != fnv1a_hex(canonical_config(b)));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("benchmark rejects an empty seed list") {
  CHECK_ERROR_CODE(run_benchmark(small_config(), {}), ErrorCode::InvalidArgument);
}

TEST_CASE("report exports") {
  BenchmarkReport full;
  full.seeds = {1};
  full.config_hash = "0";
  for (int n = 3; n <= 7; ++n) {
    for (int k = 2; k <= 6; ++k) {
      BenchmarkCell c;
      c.n_images = n;
      c.corner_grid = k;
      c.traditional = {{RunStatus::Ok, 1.0, 0.01, ""}};
      c.depth = {{RunStatus::Ok, 0.5, 0.005, ""}};
      c.traditional_stats = {1, 0, 0, {1.0, 1.0, 1.0}, {0.01, 0.01, 0.01}};
      c.depth_stats = {1, 0, 0, {0.5, 0.5, 0.5}, {0.005, 0.005, 0.005}};
      full.cells.push_back(c);
    }
  }
  const std::string csv = table_csv(full);
  CHECK(line_count(csv) == 26);
  CHECK(table_csv(full) == csv);
  CHECK(table_text(full).find("36") != std::string::npos);

  const BenchmarkReport empty;
  CHECK(line_count(table_csv(empty)) == 1);
  CHECK(line_count(focal_error_csv(empty)) == 1);
}
