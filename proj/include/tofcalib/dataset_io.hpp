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

// On-disk formats: a JSON manifest with sibling depth-map files, a JSON
// groundtruth sidecar, and JSON calibration results.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tofcalib/dataset.hpp"
#include "tofcalib/depth_denoise.hpp"
#include "tofcalib/synthetic.hpp"

namespace tofcalib {

inline constexpr int kSchemaVersion = 1;

enum class DepthFormat { Pfm, Csv };

struct SaveOptions {
  DepthFormat depth_format = DepthFormat::Pfm;
  bool write_corner_depths = true;
};

/// Writes the manifest and one depth-map file per image next to it
/// (<stem>_depth_<j>.pfm or .csv). When `truth` is given a sidecar
/// <stem>.groundtruth.json is written and referenced from the manifest.
void save_dataset(const CalibrationDataset& data, const std::filesystem::path& manifest,
                  const GroundTruth* truth = nullptr, const SaveOptions& opts = {});

/// Reads a manifest and every depth map it references. Throws ParseError
/// naming the offending field, SchemaVersionMismatch, or IoError.
CalibrationDataset load_dataset(const std::filesystem::path& manifest);

/// Resolves data.groundtruth_path against the manifest directory. Throws
/// MissingGroundtruth when the dataset has none.
GroundTruth load_groundtruth(const CalibrationDataset& data, const std::filesystem::path& manifest);
GroundTruth load_groundtruth(const std::filesystem::path& sidecar);
void save_groundtruth(const GroundTruth& truth, const std::filesystem::path& sidecar);

nlohmann::json params_to_json(const CalibParams& params);
CalibParams params_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const CalibrationDataset& data);
CalibrationDataset dataset_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace tofcalib
