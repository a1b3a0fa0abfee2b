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

#include "tofcalib/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "tofcalib/error.hpp"

namespace tofcalib {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void stats_columns(std::string& out, const MethodStats& s) {
  for (double v : {s.error_3d.median, s.error_3d.q1, s.error_3d.q3, s.focal_error.median, s.focal_error.q1,
                   s.focal_error.q3}) {
    out += "," + num(v);
  }
  out += "," + std::to_string(s.runs) + "," + std::to_string(s.failures) + "," + std::to_string(s.divergences);
}

nlohmann::json json_num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(num(v)); }

nlohmann::json stats_json(const MethodStats& s) {
  auto disp = [](const Dispersion& d) {
    return nlohmann::json{{"q1", json_num(d.q1)}, {"median", json_num(d.median)}, {"q3", json_num(d.q3)}};
  };
  return {{"runs", s.runs},
          {"failures", s.failures},
          {"divergences", s.divergences},
          {"error_3d_mm", disp(s.error_3d)},
          {"relative_focal_error", disp(s.focal_error)}};
}

nlohmann::json runs_json(const std::vector<MethodRun>& runs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json e = {{"status", std::string(to_string(r.status))},
                        {"error_3d_mm", json_num(r.error_3d)},
                        {"relative_focal_error", json_num(r.focal_error)}};
    if (!r.failure.empty()) e["failure"] = r.failure;
    a.push_back(e);
  }
  return a;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace

std::string table_csv(const BenchmarkReport& report) {
  std::string out = "corners,images";
  for (const char* m : {"traditional", "depth"}) {
    for (const char* c : {"error_3d_median_mm", "error_3d_q1_mm", "error_3d_q3_mm", "focal_error_median",
                          "focal_error_q1", "focal_error_q3", "runs", "failures", "divergences"}) {
      out += std::string(",") + m + "_" + c;
    }
  }
  out += "\n";
  for (const auto& cell : report.cells) {
    out += std::to_string(cell.corners()) + "," + std::to_string(cell.n_images);
    stats_columns(out, cell.traditional_stats);
    stats_columns(out, cell.depth_stats);
    out += "\n";
  }
  return out;
}

std::string table_text(const BenchmarkReport& report) {
  std::set<int> images, grids;
  for (const auto& c : report.cells) {
    images.insert(c.n_images);
    grids.insert(c.corner_grid);
  }
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-8s %-12s", "corners", "method");
  out += buf;
  for (int n : images) {
    std::snprintf(buf, sizeof buf, " %10d", n);
    out += buf;
  }
  out += "\n";
  for (int k : grids) {
    for (Method m : {Method::Traditional, Method::Depth}) {
      std::snprintf(buf, sizeof buf, "%-8d %-12s", k * k, std::string(to_string(m)).c_str());
      out += buf;
      for (int n : images) {
        const BenchmarkCell* cell = report.find(n, k);
        const double v = cell ? cell->stats(m).error_3d.median : std::nan("");
        if (std::isfinite(v)) {
          std::snprintf(buf, sizeof buf, " %10.4f", v);
        } else {
          std::snprintf(buf, sizeof buf, " %10s", "FAIL");
        }
        out += buf;
      }
      out += "\n";
    }
  }
  std::string notes;
  for (const auto& cell : report.cells) {
    for (Method m : {Method::Traditional, Method::Depth}) {
      const MethodStats& s = cell.stats(m);
      if (s.failures == 0 && s.divergences == 0) continue;
      notes += "  " + std::to_string(cell.corners()) + " corners, " + std::to_string(cell.n_images) + " images, " +
               std::string(to_string(m)) + ": " + std::to_string(s.failures) + " failed, " +
               std::to_string(s.divergences) + " diverged of " + std::to_string(s.runs) + "\n";
    }
  }
  out += "\nmedian mean 3D error (mm) over " + std::to_string(report.seeds.size()) + " seeds, config " +
         report.config_hash + "\n";
  if (!notes.empty()) out += "non-converged runs:\n" + notes;
  return out;
}

std::string focal_error_csv(const BenchmarkReport& report) {
  std::string out = "corners,images,seed,traditional_focal_error,traditional_status,depth_focal_error,depth_status\n";
  for (const auto& cell : report.cells) {
    for (std::size_t s = 0; s < report.seeds.size() && s < cell.traditional.size(); ++s) {
      out += std::to_string(cell.corners()) + "," + std::to_string(cell.n_images) + "," +
             std::to_string(report.seeds[s]) + "," + num(cell.traditional[s].focal_error) + "," +
             std::string(to_string(cell.traditional[s].status)) + "," + num(cell.depth[s].focal_error) + "," +
             std::string(to_string(cell.depth[s].status)) + "\n";
    }
  }
  return out;
}

nlohmann::json report_to_json(const BenchmarkReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"images", c.n_images},
                     {"corners", c.corners()},
                     {"traditional", {{"stats", stats_json(c.traditional_stats)}, {"runs", runs_json(c.traditional)}}},
                     {"depth", {{"stats", stats_json(c.depth_stats)}, {"runs", runs_json(c.depth)}}}});
  }
  return {{"schema_version", 1}, {"config_hash", report.config_hash}, {"seeds", report.seeds}, {"cells", cells}};
}

void export_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(table_csv(report), dir / "table.csv");
  write_text(table_text(report), dir / "table.txt");
  write_text(focal_error_csv(report), dir / "focal_error.csv");
  write_text(report_to_json(report).dump(2) + "\n", dir / "report.json");
}

}  // namespace tofcalib
