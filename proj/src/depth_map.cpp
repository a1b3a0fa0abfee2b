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

#include "tofcalib/depth_map.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "tofcalib/error.hpp"

namespace tofcalib {

DepthMap::DepthMap(int w, int h)
    : width(w), height(h),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
           std::numeric_limits<double>::quiet_NaN()) {
  if (w <= 0 || h <= 0) raise(ErrorCode::InvalidArgument, "depth map dimensions must be positive");
}

bool DepthMap::valid(int col, int row) const {
  if (!in_bounds(col, row)) return false;
  const double d = at(col, row);
  return std::isfinite(d) && d > 0.0;
}

bool operator==(const DepthMap& a, const DepthMap& b) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size()) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double x = a.data[i], y = b.data[i];
    if (std::isnan(x) && std::isnan(y)) continue;
    if (x != y) return false;
  }
  return true;
}

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

}  // namespace

DepthMap read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (!in || magic != "Pf") raise(ErrorCode::ParseError, path.string() + ": not a grayscale PFM");
  if (w <= 0 || h <= 0) raise(ErrorCode::ParseError, path.string() + ": bad PFM dimensions");
  in.get();  // single whitespace byte before the raster
  const bool little = scale < 0.0;
  DepthMap map(w, h);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(w));
  for (int r = h - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) raise(ErrorCode::ParseError, path.string() + ": truncated PFM raster");
    for (int c = 0; c < w; ++c) {
      std::uint32_t bits = row[static_cast<std::size_t>(c)];
      const bool swap = little != (std::endian::native == std::endian::little);
      if (swap) bits = __builtin_bswap32(bits);
      map.at(c, r) = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return map;
}

void write_pfm(const DepthMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << "Pf\n" << map.width << ' ' << map.height << "\n-1.0\n";
  std::vector<std::uint32_t> row(static_cast<std::size_t>(map.width));
  for (int r = map.height - 1; r >= 0; --r) {
    for (int c = 0; c < map.width; ++c) {
      row[static_cast<std::size_t>(c)] =
          to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(map.at(c, r))));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
}

DepthMap read_depth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        raise(ErrorCode::ParseError,
              path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      values.push_back(v);
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      raise(ErrorCode::ParseError,
            path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty() || rows.front().empty()) raise(ErrorCode::ParseError, path.string() + ": empty grid");
  DepthMap map(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()));
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) map.at(c, r) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return map;
}

void write_depth_csv(const DepthMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  char buf[32];
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const double v = map.at(c, r);
      if (std::isnan(v)) {
        out << "nan";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
      }
      out << (c + 1 < map.width ? ',' : '\n');
    }
  }
  if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
}

DepthMap load_depth_map(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") return read_pfm(path);
  if (ext == ".csv" || ext == ".CSV") return read_depth_csv(path);
  raise(ErrorCode::ParseError, path.string() + ": unknown depth map extension");
}

void save_depth_map(const DepthMap& map, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") return write_pfm(map, path);
  if (ext == ".csv" || ext == ".CSV") return write_depth_csv(map, path);
  raise(ErrorCode::InvalidArgument, path.string() + ": unknown depth map extension");
}

}  // namespace tofcalib
