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

#include <filesystem>
#include <vector>

namespace tofcalib {

/// Row-major depth image in millimetres (Euclidean range, not z). Invalid
/// pixels hold a non-finite value. Pixel (col, row) is centred at image
/// coordinate (col, row).
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  DepthMap() = default;
  DepthMap(int w, int h);

  double at(int col, int row) const { return data[static_cast<std::size_t>(row) * width + col]; }
  double& at(int col, int row) { return data[static_cast<std::size_t>(row) * width + col]; }
  bool in_bounds(int col, int row) const { return col >= 0 && row >= 0 && col < width && row < height; }
  bool valid(int col, int row) const;

  friend bool operator==(const DepthMap&, const DepthMap&);
};

/// Little-endian grayscale PFM (scale -1.0, rows stored bottom-up). Values
/// are stored as float32.
DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const DepthMap& map, const std::filesystem::path& path);

/// `height` lines of `width` comma-separated values; "nan" marks invalid
/// pixels. Written with round-trip precision.
DepthMap read_depth_csv(const std::filesystem::path& path);
void write_depth_csv(const DepthMap& map, const std::filesystem::path& path);

/// Dispatch on extension: ".pfm" or ".csv".
DepthMap load_depth_map(const std::filesystem::path& path);
void save_depth_map(const DepthMap& map, const std::filesystem::path& path);

}  // namespace tofcalib
