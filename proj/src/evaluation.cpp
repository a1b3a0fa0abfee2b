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

#include "tofcalib/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "tofcalib/detail/parallel.hpp"
#include "tofcalib/error.hpp"

namespace tofcalib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MethodStats summarize(const std::vector<MethodRun>& runs) {
  MethodStats s;
  s.runs = runs.size();
  std::vector<double> e3, ef;
  for (const auto& r : runs) {
    if (r.status == RunStatus::Failed) ++s.failures;
    if (r.status == RunStatus::Diverged) ++s.divergences;
    e3.push_back(r.error_3d);
    ef.push_back(r.focal_error);
  }
  s.error_3d = dispersion(std::move(e3));
  s.focal_error = dispersion(std::move(ef));
  return s;
}

void append(std::string& out, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
  out += buf;
}

void append_lm(std::string& out, const std::string& prefix, const LmOptions& o) {
  append(out, (prefix + ".max_iterations").c_str(), o.max_iterations);
  append(out, (prefix + ".initial_damping").c_str(), o.initial_damping);
  append(out, (prefix + ".damping_up").c_str(), o.damping_up);
  append(out, (prefix + ".damping_down").c_str(), o.damping_down);
  append(out, (prefix + ".gradient_tol").c_str(), o.gradient_tol);
  append(out, (prefix + ".step_tol").c_str(), o.step_tol);
  append(out, (prefix + ".cost_tol").c_str(), o.cost_tol);
}

}  // namespace

double mean_3d_error(const CalibParams& estimate, const CalibrationDataset& measured, const GroundTruth& truth) {
  const std::size_t n = estimate.poses.size();
  if (n > measured.image_count() || n > truth.corner_depths.size()) {
    raise(ErrorCode::MissingGroundtruth, "groundtruth does not cover the calibrated images");
  }
  const auto world = measured.board.world_corners();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& corners = measured.images[j].corners_px;
    const auto& depths = truth.corner_depths[j];
    if (depths.size() != corners.size()) raise(ErrorCode::MissingGroundtruth, "groundtruth depth count mismatch");
    const Matrix3 Rt = estimate.poses[j].rotation().transpose();
    for (std::size_t i = 0; i < corners.size(); ++i) {
      Point3 xc;
      try {
        xc = back_project(corners[i], depths[i], estimate.K, estimate.kc);
      } catch (const Error&) {
        return kInf;
      }
      sum += (Rt * (xc - estimate.poses[j].t) - world[i]).norm();
      ++count;
    }
  }
  if (count == 0) raise(ErrorCode::MissingGroundtruth, "no corners to evaluate");
  const double mean = sum / static_cast<double>(count);
  return std::isfinite(mean) ? mean : kInf;
}

double relative_focal_error(const Intrinsics& estimate, const Intrinsics& truth) {
  return (std::abs(estimate.fx - truth.fx) + std::abs(estimate.fy - truth.fy)) / (truth.fx + truth.fy);
}

std::string_view to_string(Method m) { return m == Method::Traditional ? "traditional" : "depth"; }

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::Failed: return "failed";
  }
  return "unknown";
}

Dispersion dispersion(std::vector<double> values) {
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  for (double& v : values)
    if (std::isnan(v)) v = kInf;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= values.size()) return values[lo];
    const double a = values[lo], b = values[lo + 1];
    if (std::isinf(b)) return kInf;
    return a + frac * (b - a);
  };
  return {quantile(0.25), quantile(0.5), quantile(0.75)};
}

const BenchmarkCell* BenchmarkReport::find(int n_images, int corner_grid) const {
  for (const auto& c : cells)
    if (c.n_images == n_images && c.corner_grid == corner_grid) return &c;
  return nullptr;
}

std::string canonical_config(const BenchmarkConfig& config) {
  std::string out;
  const SynthConfig& s = config.synth;
  append(out, "board.rows", s.rows);
  append(out, "board.cols", s.cols);
  append(out, "board.square_size", s.square_size);
  append(out, "board.white_parity", s.white_parity);
  append(out, "camera.fx", s.K.fx);
  append(out, "camera.fy", s.K.fy);
  append(out, "camera.cx", s.K.cx);
  append(out, "camera.cy", s.K.cy);
  for (int i = 0; i < 4; ++i) append(out, ("camera.k" + std::to_string(i + 1)).c_str(), s.kc.coefficients()[static_cast<std::size_t>(i)]);
  append(out, "camera.width", s.width);
  append(out, "camera.height", s.height);
  append(out, "pose.min_distance", s.min_distance);
  append(out, "pose.max_distance", s.max_distance);
  append(out, "pose.max_tilt", s.max_tilt);
  append(out, "noise.px", s.noise_px);
  append(out, "noise.depth", s.noise_depth);
  for (int n : config.image_counts) append(out, "grid.images", n);
  for (int k : config.corner_grids) append(out, "grid.corners", k);
  append(out, "traditional.centre_fallback", config.traditional.init.centre_fallback);
  append_lm(out, "traditional.local", config.traditional.local);
  append_lm(out, "traditional.global", config.traditional.global);
  const DepthCalibOptions& d = config.depth;
  append(out, "depth.max_k_iterations", d.max_k_iterations);
  append(out, "ransac.iterations", d.ransac.iterations);
  append(out, "ransac.inlier_threshold", d.ransac.inlier_threshold);
  append(out, "ransac.min_inlier_fraction", d.ransac.min_inlier_fraction);
  append(out, "ransac.gradient_threshold", d.ransac.gradient_threshold);
  append(out, "ransac.seed", static_cast<double>(d.ransac.seed));
  append_lm(out, "depth.k_update", d.k_update);
  append_lm(out, "depth.local", d.local);
  append_lm(out, "depth.distortion", d.distortion);
  append_lm(out, "depth.global", d.global);
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MethodRun run_method(Method method, const CalibrationDataset& full, const GroundTruth& truth, std::size_t n_images,
                     int corner_grid, const BenchmarkConfig& config) {
  MethodRun run;
  try {
    const CalibrationDataset data = subset(full, n_images, corner_grid);
    CalibParams params;
    bool converged = false;
    if (method == Method::Traditional) {
      const TraditionalResult r = traditional_calibrate(data, config.traditional);
      params = r.params;
      converged = r.global_report.converged() && params.finite();
    } else {
      DepthCalibOptions opts = config.depth;
      opts.jobs = 1;
      const DepthCalibResult r = depth_based_calib(data, opts);
      params = r.params;
      converged = r.diagnostics.converged;
    }
    run.error_3d = mean_3d_error(params, full, truth);
    run.focal_error = relative_focal_error(params.K, truth.params.K);
    if (!std::isfinite(run.focal_error)) run.focal_error = kInf;
    run.status = converged && std::isfinite(run.error_3d) ? RunStatus::Ok : RunStatus::Diverged;
  } catch (const Error& e) {
    run.status = RunStatus::Failed;
    run.error_3d = kInf;
    run.focal_error = kInf;
    run.failure = e.what();
  }
  return run;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) raise(ErrorCode::InvalidArgument, "benchmark needs at least one seed");
  if (config.image_counts.empty() || config.corner_grids.empty()) {
    raise(ErrorCode::InvalidArgument, "benchmark grid is empty");
  }
  BenchmarkReport report;
  report.seeds = seeds;
  report.config_hash = fnv1a_hex(canonical_config(config));

  SynthConfig synth = config.synth;
  synth.n_images = *std::max_element(config.image_counts.begin(), config.image_counts.end());
  synth.validate();

  // Datasets first, one per seed; a seed whose generation fails marks every
  // cell it feeds as failed.
  std::vector<std::optional<SyntheticData>> datasets(seeds.size());
  std::vector<std::string> gen_errors(seeds.size());
  detail::parallel_for(
      seeds.size(),
      [&](std::size_t s) {
        SynthConfig c = synth;
        c.seed = seeds[s];
        try {
          datasets[s] = synthesize(c);
        } catch (const Error& e) {
          gen_errors[s] = e.what();
        }
      },
      config.jobs);

  for (int n : config.image_counts) {
    for (int k : config.corner_grids) {
      BenchmarkCell cell;
      cell.n_images = n;
      cell.corner_grid = k;
      cell.traditional.resize(seeds.size());
      cell.depth.resize(seeds.size());
      report.cells.push_back(std::move(cell));
    }
  }

  const std::size_t per_seed = report.cells.size() * 2;
  detail::parallel_for(
      seeds.size() * per_seed,
      [&](std::size_t task) {
        const std::size_t s = task / per_seed;
        BenchmarkCell& cell = report.cells[(task % per_seed) / 2];
        const Method method = task % 2 == 0 ? Method::Traditional : Method::Depth;
        MethodRun& slot = method == Method::Traditional ? cell.traditional[s] : cell.depth[s];
        if (!datasets[s]) {
          slot.status = RunStatus::Failed;
          slot.error_3d = slot.focal_error = kInf;
          slot.failure = gen_errors[s];
          return;
        }
        slot = run_method(method, datasets[s]->dataset, datasets[s]->truth, static_cast<std::size_t>(cell.n_images),
                          cell.corner_grid, config);
      },
      config.jobs);

  for (auto& cell : report.cells) {
    cell.traditional_stats = summarize(cell.traditional);
    cell.depth_stats = summarize(cell.depth);
  }
  return report;
}

}  // namespace tofcalib
