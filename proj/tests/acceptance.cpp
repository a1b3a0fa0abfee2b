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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Geometry>
#include <json.hpp>

#include "tofcalib/camera_model.hpp"
#include "tofcalib/dataset_io.hpp"
#include "tofcalib/depth_calib.hpp"
#include "tofcalib/depth_denoise.hpp"
#include "tofcalib/evaluation.hpp"
#include "tofcalib/objective.hpp"
#include "tofcalib/synthetic.hpp"
#include "tofcalib/traditional_calib.hpp"

using namespace tofcalib;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %d. %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = first + i;
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ---------------------------------------------------------------------------
// 1. Noiseless exactness.

void noiseless_exactness() {
  const auto t0 = Clock::now();
  constexpr double kRelK = 1e-4, kAbsKc = 1e-4, kErr3d = 1e-3, kSeconds = 10.0;
  int checked = 0, bad = 0;
  double worst_k = 0.0, worst_kc = 0.0, worst_3d = 0.0;
  for (std::uint64_t seed : seed_range(1, 5)) {
    SynthConfig cfg;
    cfg.seed = seed;
    const SyntheticData s = synthesize(cfg);
    const CalibParams& truth = s.truth.params;
    for (int n = 3; n <= 7; ++n) {
      for (int k = 3; k <= 6; ++k) {
        const CalibrationDataset data = subset(s.dataset, static_cast<std::size_t>(n), k);
        for (Method m : {Method::Traditional, Method::Depth}) {
          CalibParams p;
          try {
            if (m == Method::Traditional) {
              p = traditional_calibrate(data).params;
            } else {
              DepthCalibOptions opts;
              opts.jobs = 1;
              p = depth_based_calib(data, opts).params;
            }
          } catch (const Error&) {
            ++bad;
            ++checked;
            continue;
          }
          const double ek = std::max({rel(p.K.fx, truth.K.fx), rel(p.K.fy, truth.K.fy), rel(p.K.cx, truth.K.cx),
                                      rel(p.K.cy, truth.K.cy)});
          double ekc = 0.0;
          for (std::size_t i = 0; i < 4; ++i)
            ekc = std::max(ekc, std::abs(p.kc.coefficients()[i] - truth.kc.coefficients()[i]));
          const double e3 = mean_3d_error(p, s.dataset, s.truth);
          worst_k = std::max(worst_k, ek);
          worst_kc = std::max(worst_kc, ekc);
          worst_3d = std::max(worst_3d, std::isfinite(e3) ? e3 : 1e300);
          bad += (ek < kRelK && ekc < kAbsKc && e3 < kErr3d) ? 0 : 1;
          ++checked;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  report(1, "noiseless exactness", bad == 0 && secs < kSeconds,
         fmt("%d runs (5 seeds x 20 cells x 2 methods), %d out of tolerance; worst K rel %.2e (<%.0e), "
             "kc abs %.2e (<%.0e), 3D %.2e mm (<%.0e); %.2f s (<%.0f s)",
             checked, bad, worst_k, kRelK, worst_kc, kAbsKc, worst_3d, kErr3d, secs, kSeconds));
}

// ---------------------------------------------------------------------------
// 2-4. Noisy benchmark.

void noisy_benchmark() {
  const auto t0 = Clock::now();
  BenchmarkConfig cfg;
  cfg.synth.noise_px = 0.01;
  cfg.synth.noise_depth = 10.0;
  const BenchmarkReport r = run_benchmark(cfg, seed_range(1, 20));
  const double secs = seconds_since(t0);

  // 2. Ordering.
  int better = 0, strict_cells = 0, strict_better = 0;
  for (const auto& c : r.cells) {
    const bool ok = c.depth_stats.error_3d.median <= c.traditional_stats.error_3d.median;
    better += ok;
    if (c.n_images >= 5 && c.corners() >= 9) {
      ++strict_cells;
      strict_better += ok;
    }
  }
  const int cells = static_cast<int>(r.cells.size());
  report(2, "benchmark ordering",
         cells == 25 && better >= 20 && strict_better == strict_cells && secs < 300.0,
         fmt("depth median <= traditional in %d/%d cells (need >= 20), %d/%d cells with >=5 images and >=9 corners "
             "(need all); 20 seeds in %.1f s (<300 s)",
             better, cells, strict_better, strict_cells, secs));

  // 3. Magnitude bands at (7 images, 36 corners).
  const BenchmarkCell* c76 = r.find(7, 6);
  const double dm = c76 ? c76->depth_stats.error_3d.median : NAN;
  const double tm = c76 ? c76->traditional_stats.error_3d.median : NAN;
  report(3, "magnitude bands", dm >= 0.1 && dm <= 1.0 && tm >= 0.3 && tm <= 3.0,
         fmt("7 images x 36 corners: depth median %.4f mm in [0.1, 1.0], traditional median %.4f mm in [0.3, 3.0]", dm,
             tm));

  // 4. Focal-error trend; four-corner divergence must be flagged.
  // A silent divergence is a run reported Ok whose parameters ran away:
  // non-finite metrics or a focal length off by half or more. Full-board 3D
  // error alone is not a divergence signal at four corners, where converged
  // fits extrapolate a 50 mm patch to the whole board.
  int focal_cells = 0, focal_better = 0, silent = 0, flagged = 0, ok_runs = 0;
  double worst_ok_3d = 0.0;
  for (const auto& c : r.cells) {
    if (c.corners() >= 9) {
      ++focal_cells;
      focal_better += c.depth_stats.focal_error.median < c.traditional_stats.focal_error.median;
    } else {
      for (const auto& run : c.depth) {
        if (run.status != RunStatus::Ok) {
          ++flagged;
        } else {
          ++ok_runs;
          worst_ok_3d = std::max(worst_ok_3d, run.error_3d);
          if (!(run.focal_error < 0.5) || !std::isfinite(run.error_3d)) ++silent;
        }
      }
    }
  }
  report(4, "focal-error trend", focal_better == focal_cells && silent == 0,
         fmt("depth focal median < traditional in %d/%d cells with >=9 corners; 4-corner depth runs: %d flagged "
             "diverged/failed, %d Ok (worst full-board 3D error %.1f mm), %d silent divergences (Ok with "
             "non-finite error or focal error >= 50%%)",
             focal_better, focal_cells, flagged, ok_runs, worst_ok_3d, silent));
}

// ---------------------------------------------------------------------------
// 5. Denoising efficacy.

void denoising() {
  double raw_sq = 0.0, den_sq = 0.0, worst_exact = 0.0;
  std::size_t n = 0, fallbacks = 0;
  for (std::uint64_t seed : seed_range(1, 20)) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.noise_depth = 10.0;
    const SyntheticData noisy = synthesize(cfg);
    cfg.noise_depth = 0.0;
    const SyntheticData clean = synthesize(cfg);
    const auto& t = noisy.truth.params;
    for (std::size_t j = 0; j < noisy.dataset.image_count(); ++j) {
      const auto& gt = noisy.truth.corner_depths[j];
      const PlanarizeResult pr = planarize_depth(noisy.dataset.images[j], noisy.dataset.board, t.K, t.kc, {}, j);
      const auto raw = raw_corner_depths(noisy.dataset.images[j]);
      for (std::size_t i = 0; i < gt.size(); ++i) {
        raw_sq += (raw[i] - gt[i]) * (raw[i] - gt[i]);
        den_sq += (pr.depths[i] - gt[i]) * (pr.depths[i] - gt[i]);
        fallbacks += pr.fell_back[i];
        ++n;
      }
      const PlanarizeResult ex = planarize_depth(clean.dataset.images[j], clean.dataset.board, t.K, t.kc, {}, j);
      for (std::size_t i = 0; i < gt.size(); ++i) worst_exact = std::max(worst_exact, std::abs(ex.depths[i] - gt[i]));
    }
  }
  const double raw_rms = std::sqrt(raw_sq / n), den_rms = std::sqrt(den_sq / n);
  report(5, "denoising efficacy", raw_rms >= 3.0 * den_rms && worst_exact <= 1e-6,
         fmt("20 seeds x 7 images x 121 corners: raw RMS %.3f mm, planarized %.3f mm, ratio %.1fx (need >= 3x), "
             "%zu fallbacks; noiseless worst %.2e mm (<= 1e-6)",
             raw_rms, den_rms, raw_rms / den_rms, fallbacks, worst_exact));
}

// ---------------------------------------------------------------------------
// 6. Numerical hygiene.

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1]) return false;
  return true;
}

void numerical_hygiene() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-0.5, 0.5);

  SynthConfig cfg;
  cfg.seed = 6;
  cfg.n_images = 3;
  cfg.depth_maps = false;
  const SyntheticData s = synthesize(cfg);
  const CalibrationDataset data = subset(s.dataset, 3, 5);
  CornerDepths depths;
  for (const auto& img : data.images) depths.push_back(*img.corner_depths);
  const CalibObjective reproj = CalibObjective::reprojection(data);
  const CalibObjective joint = CalibObjective::joint(data, depths, {{0.3, 0.5, 0.8}, {2.0, 4.0, 7.0}});

  double jac_reproj = 0.0, jac_joint = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    CalibParams p = s.truth.params;
    p.K.fx *= 1.0 + 0.05 * g(rng);
    p.K.fy *= 1.0 + 0.05 * g(rng);
    p.K.cx += 3.0 * g(rng);
    p.K.cy += 3.0 * g(rng);
    p.kc = Distortion{p.kc.k1 + 0.02 * g(rng), p.kc.k2 + 0.02 * g(rng), p.kc.k3 + 0.001 * g(rng),
                      p.kc.k4 + 0.001 * g(rng)};
    for (Pose& pose : p.poses) {
      pose.rvec += 0.02 * Vector3(g(rng), g(rng), g(rng));
      pose.t += 10.0 * Vector3(g(rng), g(rng), g(rng));
    }
    for (auto [obj, worst] : {std::pair{&reproj, &jac_reproj}, std::pair{&joint, &jac_joint}}) {
      auto r = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return obj->residuals(CalibParams::unpack(v)); };
      auto J = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd { return obj->jacobian(CalibParams::unpack(v)); };
      *worst = std::max(*worst, check_jacobian(r, J, p.pack(), 1e-6));
    }
  }

  const Distortion kc{0.1, -0.05, 0.001, 0.002};
  double round_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Point2 x(u(rng), u(rng));
    round_trip = std::max(round_trip, (undistort(distort(x, kc), kc) - x).norm());
  }

  double depth_rel = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Pose pose{0.5 * Vector3(u(rng), u(rng), u(rng)), 1000.0 * Vector3(u(rng), u(rng), 1.0 + u(rng))};
    const Point3 x(500.0 * u(rng), 500.0 * u(rng), 0.0);
    const double ref = (pose.rotation() * x + pose.t).norm();
    depth_rel = std::max(depth_rel, std::abs(depth_of(x, pose) - ref) / ref);
  }

  double plane_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    Vector3 n(g(rng), g(rng), g(rng));
    n.normalize();
    const Plane truth = Plane::canonical(n, 1000.0 * (1.0 + u(rng)));
    const Vector3 a = truth.normal.unitOrthogonal(), b = truth.normal.cross(a);
    std::vector<Point3> pts;
    for (int k = 0; k < 50; ++k) pts.push_back(truth.offset * truth.normal + 300.0 * u(rng) * a + 300.0 * u(rng) * b);
    const Plane fit = fit_plane_svd(pts);
    for (const auto& x : pts) plane_err = std::max(plane_err, std::abs(fit.signed_distance(x)));
  }

  // Cost traces from every LM stage of a noisy run of both pipelines.
  cfg.noise_px = 0.01;
  cfg.noise_depth = 10.0;
  cfg.depth_maps = true;
  cfg.n_images = 5;
  const SyntheticData noisy = synthesize(cfg);
  std::size_t traces = 0, bad_traces = 0;
  auto check_trace = [&](const LmReport& rep) {
    ++traces;
    bad_traces += non_increasing(rep.cost_trace) ? 0 : 1;
  };
  const TraditionalResult tr = traditional_calibrate(noisy.dataset);
  for (const auto& rep : tr.local_reports) check_trace(rep);
  check_trace(tr.global_report);
  const DepthCalibResult dr = depth_based_calib(noisy.dataset);
  for (const auto& rep : dr.diagnostics.local_reports) check_trace(rep);
  check_trace(dr.diagnostics.distortion_report);
  check_trace(dr.diagnostics.global_report);
  const auto d = planarize_all(noisy.dataset, noisy.truth.params.K, noisy.truth.params.kc, {});
  Intrinsics K0 = noisy.truth.params.K;
  K0.fx *= 1.2;
  check_trace(update_K(noisy.dataset, d, K0, noisy.truth.params.kc).report);

  const double secs = seconds_since(t0);
  const bool pass = jac_reproj < 1e-5 && jac_joint < 1e-5 && round_trip < 1e-10 && depth_rel < 1e-9 &&
                    plane_err < 1e-9 && bad_traces == 0 && secs < 30.0;
  report(6, "numerical hygiene", pass,
         fmt("Jacobian rel discrepancy over 100 points: reprojection %.2e, joint %.2e (<1e-5); round trip %.2e (<1e-10); "
             "depth identity rel %.2e (<1e-9); plane fit residual %.2e mm; %zu/%zu cost traces non-increasing; "
             "%.2f s (<30 s)",
             jac_reproj, jac_joint, round_trip, depth_rel, plane_err, traces - bad_traces, traces, secs));
}

// ---------------------------------------------------------------------------
// 7-8. Command-line checks.

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tofcalib_accept_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + TOFCALIB_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const TempDir& tmp) {
  const char* files[] = {"table.csv", "table.txt", "focal_error.csv", "report.json"};
  std::vector<std::string> runs;
  int exit_codes = 0;
  for (const char* jobs : {"1", "0", "1", "3"}) {
    const fs::path out = tmp.path / (std::string("bench_") + std::to_string(runs.size()));
    exit_codes += run_cli("benchmark --seeds 4 --jobs " + std::string(jobs) + " --out \"" + out.string() + "\"",
                          tmp.path / "bench.log") != 0;
    std::string all;
    for (const char* f : files) all += slurp(out / f) + '\x1f';
    runs.push_back(all);
  }
  const bool same = std::all_of(runs.begin(), runs.end(), [&](const std::string& r) { return r == runs.front(); });
  report(7, "determinism", exit_codes == 0 && same && runs.front().size() > 100,
         fmt("benchmark (4 seeds, full grid) run with --jobs 1, 0 (all cores), 1, 3: reports %s, %zu bytes each",
             same ? "byte-identical" : "DIFFER", runs.front().size()));
}

bool finite_array(const nlohmann::json& a, std::size_t n) {
  if (!a.is_array() || a.size() != n) return false;
  for (const auto& v : a)
    if (!v.is_number() || !std::isfinite(v.get<double>())) return false;
  return true;
}

void sample_dataset(const TempDir& tmp) {
  const fs::path manifest = fs::path(TOFCALIB_SAMPLE_DIR) / "manifest.json";
  const fs::path out = tmp.path / "sample_params.json";
  const int rc = run_cli("calibrate \"" + manifest.string() + "\" --method depth --out \"" + out.string() + "\"",
                         tmp.path / "sample.log");
  bool well_formed = false;
  std::string detail;
  try {
    const CalibrationDataset data = load_dataset(manifest);
    const nlohmann::json p = read_json(out);
    const nlohmann::json d = read_json(tmp.path / "sample_params.diagnostics.json");
    bool ok = p.contains("units") && p.at("poses").size() == data.image_count() && finite_array(p.at("kc"), 4);
    for (const char* k : {"fx", "fy", "cx", "cy"}) ok = ok && std::isfinite(p.at(k).get<double>());
    for (const auto& pose : p.at("poses")) ok = ok && finite_array(pose.at("rvec"), 3) && finite_array(pose.at("t"), 3);
    const CalibParams back = params_from_json(p);
    ok = ok && back.finite() && d.contains("stages") && d.at("stages").is_array() && !d.at("stages").empty();
    well_formed = ok;
    detail = fmt("%zu images x %zu corners; fx %.3f fy %.3f; %zu stages recorded", data.image_count(),
                 data.board.corner_count(), back.K.fx, back.K.fy, d.at("stages").size());
  } catch (const std::exception& e) {
    detail = e.what();
  }
  report(8, "sample dataset round trip", rc == 0 && well_formed,
         fmt("calibrate --method depth exit %d; %s", rc, detail.c_str()));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  TempDir tmp;
  const std::vector<std::pair<const char*, std::function<void()>>> criteria{
      {"1", noiseless_exactness},   {"2-4", noisy_benchmark},
      {"5", denoising},             {"6", numerical_hygiene},
      {"7", [&] { determinism(tmp); }}, {"8", [&] { sample_dataset(tmp); }},
  };
  for (const auto& [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      std::printf("FAIL  %s. raised: %s\n", id, e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed; total %.1f s\n", failures, seconds_since(t0));
  return failures;
}
