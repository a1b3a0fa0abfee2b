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

// Benchmark report rendering: a Table-1 style grid (CSV and aligned text),
// the per-seed focal-error series, and a JSON dump of the whole report.
// Output bytes depend only on the report.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tofcalib/evaluation.hpp"

namespace tofcalib {

/// One row per cell: corners, images, then median/q1/q3 of the 3D error and
/// of the relative focal error, runs, failures and divergences, first for the
/// traditional method, then for the depth method.
std::string table_csv(const BenchmarkReport& report);

/// Median 3D error in mm as an aligned table: one row per corner
/// count and method, one column per image count. "FAIL" marks a median that
/// is not finite; cells with failed or diverged runs are listed below.
std::string table_text(const BenchmarkReport& report);

/// One row per cell and seed with both methods' relative focal error.
std::string focal_error_csv(const BenchmarkReport& report);

nlohmann::json report_to_json(const BenchmarkReport& report);

/// Writes table.csv, table.txt, focal_error.csv and report.json into `dir`.
void export_report(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace tofcalib
