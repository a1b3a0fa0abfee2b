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

// tofcalib command-line front end.
//
//   tofcalib synth --out data/manifest.json --seed 7 --images 5 --noise-px 0.01 --noise-depth 10
//   tofcalib calibrate data/manifest.json --method depth --out params.json
//   tofcalib denoise data/manifest.json --out depths.json
//   tofcalib benchmark --out report/ --seeds 20 --jobs 4
//   tofcalib check-jacobian --points 100
//
// Exit codes: 0 success, 2 parse/config error, 3 numerical failure,
// 4 non-convergence (outputs are still written).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tofcalib/dataset_io.hpp"
#include "tofcalib/depth_calib.hpp"
#include "tofcalib/depth_denoise.hpp"
#include "tofcalib/evaluation.hpp"
#include "tofcalib/objective.hpp"
#include "tofcalib/report.hpp"
#include "tofcalib/synthetic.hpp"
#include "tofcalib/traditional_calib.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tofcalib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitNotConverged = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::SchemaVersionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
    case ErrorCode::MissingGroundtruth:
    case ErrorCode::SubsetTooLarge:
    case ErrorCode::MissingDepth:
    case ErrorCode::GridIncomplete:
      return kExitConfig;
    default:
      return kExitNumerical;
  }
}

int grid_side(int corners) {
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(corners))));
  if (corners < 4 || k * k != corners) raise(ErrorCode::InvalidArgument, "--corners must be a square number >= 4");
  return k;
}

json report_json(const LmReport& r) {
  return {{"initial_cost", r.initial_cost},
          {"final_cost", r.final_cost},
          {"iterations", r.iterations},
          {"termination", std::string(to_string(r.termination))},
          {"converged", r.converged()}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json weights_json(const VarianceWeights& w) { return {{"sigma_x_px", w.sigma_x}, {"sigma_d_mm", w.sigma_d}}; }

json depth_diagnostics_json(const DepthCalibDiagnostics& d) {
  json stages = json::array();
  for (const auto& s : d.stages) stages.push_back({{"stage", s.stage}, {"cost", finite_or_null(s.cost)}});
  json trace = json::array();
  for (const auto& k : d.k_trace) {
    json eps = json::array();
    for (double e : k.epsilon) eps.push_back(finite_or_null(e));
    trace.push_back({{"iteration", k.iteration},
                     {"fx", k.K.fx},
                     {"fy", k.K.fy},
                     {"cx", k.K.cx},
                     {"cy", k.K.cy},
                     {"epsilon_mm", eps},
                     {"median_epsilon_mm", finite_or_null(k.median_epsilon)},
                     {"cost", finite_or_null(k.cost)},
                     {"converged", k.converged}});
  }
  json local = json::array();
  for (const auto& r : d.local_reports) local.push_back(report_json(r));
  return {{"method", "depth"},
          {"converged", d.converged},
          {"stages", stages},
          {"k_update", {{"converged", d.k_converged}, {"trace", trace}}},
          {"planarize_fallbacks", d.planarize_fallbacks},
          {"weights", weights_json(d.weights)},
          {"local", local},
          {"distortion", report_json(d.distortion_report)},
          {"global", report_json(d.global_report)}};
}

CalibrationDataset select(const CalibrationDataset& data, int images, int corners) {
  if (images <= 0 && corners <= 0) return data;
  if (corners > 0 && data.board.rows != data.board.cols) {
    raise(ErrorCode::InvalidArgument, "--corners needs a square board");
  }
  const std::size_t n = images > 0 ? static_cast<std::size_t>(images) : data.image_count();
  const int k = corners > 0 ? grid_side(corners) : data.board.rows;
  return subset(data, n, k);
}

struct Common {
  std::uint64_t seed = 1;
  int images = 0;
  int corners = 0;
  double noise_px = 0.0;
  double noise_depth = 0.0;
  std::string out;
};

int cmd_synth(const Common& c, const std::string& depth_format, bool no_depth_maps) {
  SynthConfig cfg;
  cfg.seed = c.seed;
  if (c.images > 0) cfg.n_images = c.images;
  if (c.corners > 0) cfg.rows = cfg.cols = grid_side(c.corners);
  cfg.noise_px = c.noise_px;
  cfg.noise_depth = c.noise_depth;
  cfg.depth_maps = !no_depth_maps;
  const SyntheticData synth = synthesize(cfg);
  SaveOptions opts;
  opts.depth_format = depth_format == "csv" ? DepthFormat::Csv : DepthFormat::Pfm;
  save_dataset(synth.dataset, c.out, &synth.truth, opts);
  std::cout << "wrote " << synth.dataset.image_count() << " images to " << c.out << "\n";
  return kExitOk;
}

int cmd_calibrate(const Common& c, const std::string& manifest, const std::string& method, std::string diag_path,
                  unsigned jobs) {
  const CalibrationDataset full = load_dataset(manifest);
  const CalibrationDataset data = select(full, c.images, c.corners);
  if (diag_path.empty()) diag_path = (fs::path(c.out).parent_path() / fs::path(c.out).stem()).string() + ".diagnostics.json";

  CalibParams params;
  json diag;
  int code = kExitOk;
  if (method == "traditional") {
    const TraditionalResult r = traditional_calibrate(data);
    params = r.params;
    json local = json::array();
    for (const auto& l : r.local_reports) local.push_back(report_json(l));
    const bool ok = r.global_report.converged() && params.finite();
    diag = {{"method", "traditional"},
            {"converged", ok},
            {"initial", params_to_json(r.initial)},
            {"local", local},
            {"global", report_json(r.global_report)}};
    if (!ok) code = kExitNotConverged;
  } else {
    DepthCalibOptions opts;
    opts.ransac.seed = c.seed;
    opts.jobs = jobs;
    try {
      const DepthCalibResult r = depth_based_calib(data, opts);
      params = r.params;
      diag = depth_diagnostics_json(r.diagnostics);
      if (!r.diagnostics.converged) code = kExitNotConverged;
    } catch (const StageError& e) {
      diag = depth_diagnostics_json(e.diagnostics());
      diag["converged"] = false;
      diag["failed_stage"] = e.stage();
      diag["error"] = e.what();
      write_json(diag, diag_path);
      throw;
    }
  }
  diag["images"] = data.image_count();
  diag["corners_per_image"] = data.board.corner_count();
  if (!full.groundtruth_path.empty()) {
    try {
      const GroundTruth truth = load_groundtruth(full, manifest);
      diag["evaluation"] = {{"mean_3d_error_mm", finite_or_null(mean_3d_error(params, full, truth))},
                            {"relative_focal_error", finite_or_null(relative_focal_error(params.K, truth.params.K))}};
    } catch (const Error& e) {
      diag["evaluation"] = {{"error", e.what()}};
    }
  }
  write_json(params_to_json(params), c.out);
  write_json(diag, diag_path);
  std::cout << "fx=" << params.K.fx << " fy=" << params.K.fy << " cx=" << params.K.cx << " cy=" << params.K.cy
            << (code == kExitOk ? "" : "  (not converged)") << "\n";
  return code;
}

int cmd_denoise(const Common& c, const std::string& manifest, const std::string& params_path) {
  const CalibrationDataset data = select(load_dataset(manifest), c.images, c.corners);
  CalibParams params = params_path.empty() ? traditional_calibrate(data).params : params_from_json(read_json(params_path));
  RansacOptions opts;
  opts.seed = c.seed;
  json images = json::array();
  for (std::size_t j = 0; j < data.image_count(); ++j) {
    json e;
    try {
      const PlanarizeResult p = planarize_depth(data.images[j], data.board, params.K, params.kc, opts, j);
      e = {{"corner_depths_mm", p.depths},
           {"fell_back", p.fell_back},
           {"plane", {{"normal", {p.plane.normal.x(), p.plane.normal.y(), p.plane.normal.z()}}, {"offset_mm", p.plane.offset}}},
           {"support_pixels", p.support_pixels},
           {"inliers", p.inliers}};
    } catch (const Error& err) {
      if (err.code() != ErrorCode::MissingDepth && err.code() != ErrorCode::PlaneFitFailed) throw;
      e = {{"corner_depths_mm", raw_corner_depths(data.images[j])}, {"error", err.what()}};
    }
    images.push_back(e);
  }
  write_json({{"schema_version", kSchemaVersion}, {"images", images}}, c.out);
  return kExitOk;
}

int cmd_benchmark(const Common& c, int n_seeds, unsigned jobs) {
  if (n_seeds < 1) raise(ErrorCode::InvalidArgument, "--seeds must be at least 1");
  BenchmarkConfig cfg;
  cfg.synth.noise_px = c.noise_px;
  cfg.synth.noise_depth = c.noise_depth;
  cfg.jobs = jobs;
  if (c.images > 0) {
    cfg.image_counts.clear();
    for (int n = 3; n <= c.images; ++n) cfg.image_counts.push_back(n);
    if (cfg.image_counts.empty()) cfg.image_counts.push_back(c.images);
  }
  if (c.corners > 0) {
    cfg.corner_grids.clear();
    for (int k = 2; k <= grid_side(c.corners); ++k) cfg.corner_grids.push_back(k);
  }
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
  const BenchmarkReport report = run_benchmark(cfg, seeds);
  export_report(report, c.out);
  std::cout << table_text(report);
  return kExitOk;
}

int cmd_check_jacobian(const Common& c, int points, double tolerance) {
  SynthConfig cfg;
  cfg.seed = c.seed;
  cfg.n_images = c.images > 0 ? c.images : 3;
  cfg.rows = cfg.cols = c.corners > 0 ? grid_side(c.corners) : 4;
  cfg.depth_maps = false;
  const SyntheticData synth = synthesize(cfg);
  const auto& data = synth.dataset;
  const VarianceWeights w{std::vector<double>(data.image_count(), 0.5), std::vector<double>(data.image_count(), 2.0)};
  const auto reprojection = CalibObjective::reprojection(data);
  const auto joint = CalibObjective::joint(data, synth.truth.corner_depths, w);

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    Eigen::VectorXd x = synth.truth.params.pack();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double scale = i < 4 ? 2.0 : i < 8 ? 0.01 : (i - 8) % 6 < 3 ? 0.01 : 5.0;
      x(i) += scale * nd(rng);
    }
    for (const CalibObjective* obj : {&reprojection, &joint}) {
      auto r = [&](const Eigen::VectorXd& v) { return obj->residuals(CalibParams::unpack(v)); };
      auto J = [&](const Eigen::VectorXd& v) { return obj->jacobian(CalibParams::unpack(v)); };
      worst = std::max(worst, check_jacobian(r, J, x, 1e-6));
    }
  }
  std::printf("max relative Jacobian discrepancy over %d points: %.3e (tolerance %.1e)\n", points, worst, tolerance);
  return worst <= tolerance ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checkerboard calibration of time-of-flight cameras from corners and depth"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--seed", common.seed, "RNG seed")->capture_default_str();
    sub->add_option("--images", common.images, "number of images to use");
    sub->add_option("--corners", common.corners, "corners per image (square number)");
    auto* out = sub->add_option("--out", common.out, "output path");
    if (needs_out) out->required();
  };

  std::string manifest, method = "depth", diag_path, params_path, depth_format = "pfm";
  bool no_depth_maps = false;
  unsigned jobs = 0;
  int seeds = 20, points = 100;
  double tolerance = 1e-5;

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset with groundtruth");
  add_common(synth, true);
  synth->add_option("--noise-px", common.noise_px, "corner noise sigma (px)");
  synth->add_option("--noise-depth", common.noise_depth, "depth noise sigma (mm)");
  synth->add_option("--depth-format", depth_format, "depth map file format")->check(CLI::IsMember({"pfm", "csv"}));
  synth->add_flag("--no-depth-maps", no_depth_maps, "write per-corner depths only");

  auto* calib = app.add_subcommand("calibrate", "calibrate a dataset");
  add_common(calib, true);
  calib->add_option("dataset", manifest, "dataset manifest")->required();
  calib->add_option("--method", method, "calibration method")->check(CLI::IsMember({"traditional", "depth"}));
  calib->add_option("--diagnostics", diag_path, "diagnostics JSON (default <out>.diagnostics.json)");
  calib->add_option("--jobs", jobs, "worker threads, 0 = all cores");

  auto* denoise = app.add_subcommand("denoise", "planarized corner depths for every image");
  add_common(denoise, true);
  denoise->add_option("dataset", manifest, "dataset manifest")->required();
  denoise->add_option("--params", params_path, "calibration JSON (default: traditional calibration)");

  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo comparison over image and corner counts");
  add_common(bench, true);
  common.noise_px = 0.01;
  common.noise_depth = 10.0;
  bench->add_option("--noise-px", common.noise_px, "corner noise sigma (px)")->capture_default_str();
  bench->add_option("--noise-depth", common.noise_depth, "depth noise sigma (mm)")->capture_default_str();
  bench->add_option("--seeds", seeds, "number of seeds, starting at --seed")->capture_default_str();
  bench->add_option("--jobs", jobs, "worker threads, 0 = all cores");

  auto* jac = app.add_subcommand("check-jacobian", "compare analytic and finite-difference Jacobians");
  add_common(jac, false);
  jac->add_option("--points", points, "random parameter points")->capture_default_str();
  jac->add_option("--tolerance", tolerance, "maximum relative discrepancy")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  // The benchmark defaults to 0.01 px / 10 mm noise; the other commands default to none.
  if (!bench->parsed()) {
    if (synth->count("--noise-px") == 0) common.noise_px = 0.0;
    if (synth->count("--noise-depth") == 0) common.noise_depth = 0.0;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, depth_format, no_depth_maps);
    if (calib->parsed()) return cmd_calibrate(common, manifest, method, diag_path, jobs);
    if (denoise->parsed()) return cmd_denoise(common, manifest, params_path);
    if (bench->parsed()) return cmd_benchmark(common, seeds, jobs);
    if (jac->parsed()) return cmd_check_jacobian(common, points, tolerance);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
