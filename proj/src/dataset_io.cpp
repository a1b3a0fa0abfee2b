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

#include "tofcalib/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "tofcalib/error.hpp"

namespace tofcalib {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Field access with the dotted path in every error message.
const json& field(const json& obj, const std::string& path, const std::string& key) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) raise(ErrorCode::ParseError, "'" + (path.empty() ? "<root>" : path) + "' must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) raise(ErrorCode::ParseError, "missing field '" + full + "'");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) raise(ErrorCode::ParseError, "field '" + path + "' must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) raise(ErrorCode::ParseError, "field '" + path + "' must be an integer");
  return v.get<int>();
}

const json& array(const json& v, const std::string& path, std::size_t size = 0) {
  if (!v.is_array()) raise(ErrorCode::ParseError, "field '" + path + "' must be an array");
  if (size && v.size() != size) {
    raise(ErrorCode::ParseError, "field '" + path + "' must have " + std::to_string(size) + " entries");
  }
  return v;
}

std::vector<double> numbers(const json& v, const std::string& path, std::size_t size = 0) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(v, path, size).size(); ++i) {
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Vector3 vec3(const json& v, const std::string& path) {
  const auto x = numbers(v, path, 3);
  return {x[0], x[1], x[2]};
}

json to_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

json points_to_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<Point2> points_from_json(const json& v, const std::string& path) {
  std::vector<Point2> out;
  for (std::size_t i = 0; i < array(v, path).size(); ++i) {
    const auto p = numbers(v[i], path + "[" + std::to_string(i) + "]", 2);
    out.emplace_back(p[0], p[1]);
  }
  return out;
}

void check_schema(const json& j) {
  const int v = integer(field(j, "", "schema_version"), "schema_version");
  if (v != kSchemaVersion) {
    raise(ErrorCode::SchemaVersionMismatch,
          "schema_version " + std::to_string(v) + ", expected " + std::to_string(kSchemaVersion));
  }
}

json json_or_nan(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    raise(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": malformed JSON");
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
}

json params_to_json(const CalibParams& params) {
  json poses = json::array();
  for (const auto& p : params.poses) poses.push_back({{"rvec", to_json(p.rvec)}, {"t", to_json(p.t)}});
  const auto kc = params.kc.coefficients();
  return {
      {"units", {{"fx", "px"}, {"fy", "px"}, {"cx", "px"}, {"cy", "px"}, {"kc", "normalized"},
                 {"rvec", "rad (axis-angle)"}, {"t", "mm"}}},
      {"fx", params.K.fx},
      {"fy", params.K.fy},
      {"cx", params.K.cx},
      {"cy", params.K.cy},
      {"kc", json::array({kc[0], kc[1], kc[2], kc[3]})},
      {"poses", poses},
  };
}

CalibParams params_from_json(const json& j) {
  CalibParams p;
  p.K.fx = number(field(j, "", "fx"), "fx");
  p.K.fy = number(field(j, "", "fy"), "fy");
  p.K.cx = number(field(j, "", "cx"), "cx");
  p.K.cy = number(field(j, "", "cy"), "cy");
  const auto kc = numbers(field(j, "", "kc"), "kc", 4);
  p.kc = Distortion{kc[0], kc[1], kc[2], kc[3]};
  const json& poses = array(field(j, "", "poses"), "poses");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string path = "poses[" + std::to_string(i) + "]";
    p.poses.push_back({vec3(field(poses[i], path, "rvec"), path + ".rvec"), vec3(field(poses[i], path, "t"), path + ".t")});
  }
  return p;
}

json dataset_to_json(const CalibrationDataset& data) {
  json images = json::array();
  for (const auto& img : data.images) {
    json e = {{"corners_px", points_to_json(img.corners_px)}};
    if (img.corner_depths) {
      json d = json::array();
      for (double v : *img.corner_depths) d.push_back(json_or_nan(v));
      e["corner_depths_mm"] = d;
    }
    if (!img.depth_map_path.empty()) e["depth_map"] = img.depth_map_path;
    images.push_back(e);
  }
  json j = {
      {"schema_version", kSchemaVersion},
      {"board",
       {{"rows", data.board.rows}, {"cols", data.board.cols}, {"square_size_mm", data.board.square_size},
        {"white_parity", data.board.white_parity}}},
      {"camera", {{"width", data.image_width}, {"height", data.image_height}}},
      {"images", images},
  };
  if (!data.groundtruth_path.empty()) j["groundtruth"] = data.groundtruth_path;
  return j;
}

CalibrationDataset dataset_from_json(const json& j) {
  check_schema(j);
  CalibrationDataset data;
  const json& board = field(j, "", "board");
  data.board.rows = integer(field(board, "board", "rows"), "board.rows");
  data.board.cols = integer(field(board, "board", "cols"), "board.cols");
  data.board.square_size = number(field(board, "board", "square_size_mm"), "board.square_size_mm");
  if (board.contains("white_parity")) data.board.white_parity = integer(board["white_parity"], "board.white_parity");
  const json& camera = field(j, "", "camera");
  data.image_width = integer(field(camera, "camera", "width"), "camera.width");
  data.image_height = integer(field(camera, "camera", "height"), "camera.height");
  const json& images = array(field(j, "", "images"), "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = "images[" + std::to_string(i) + "]";
    ImageObservation img;
    img.corners_px = points_from_json(field(images[i], path, "corners_px"), path + ".corners_px");
    if (images[i].contains("corner_depths_mm")) {
      const json& d = array(images[i]["corner_depths_mm"], path + ".corner_depths_mm");
      std::vector<double> depths;
      for (std::size_t k = 0; k < d.size(); ++k) {
        depths.push_back(d[k].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : number(d[k], path + ".corner_depths_mm[" + std::to_string(k) + "]"));
      }
      img.corner_depths = std::move(depths);
    }
    if (images[i].contains("depth_map")) {
      const json& p = images[i]["depth_map"];
      if (!p.is_string()) raise(ErrorCode::ParseError, "field '" + path + ".depth_map' must be a string");
      img.depth_map_path = p.get<std::string>();
    }
    data.images.push_back(std::move(img));
  }
  if (j.contains("groundtruth")) {
    if (!j["groundtruth"].is_string()) raise(ErrorCode::ParseError, "field 'groundtruth' must be a string");
    data.groundtruth_path = j["groundtruth"].get<std::string>();
  }
  return data;
}

void save_dataset(const CalibrationDataset& data, const fs::path& manifest, const GroundTruth* truth,
                  const SaveOptions& opts) {
  const fs::path dir = manifest.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  const std::string stem = manifest.stem().string();
  CalibrationDataset out = data;
  for (std::size_t j = 0; j < out.images.size(); ++j) {
    auto& img = out.images[j];
    if (!opts.write_corner_depths) img.corner_depths.reset();
    if (!img.depth_map) {
      img.depth_map_path.clear();
      continue;
    }
    img.depth_map_path = stem + "_depth_" + std::to_string(j) + (opts.depth_format == DepthFormat::Pfm ? ".pfm" : ".csv");
    save_depth_map(*img.depth_map, dir / img.depth_map_path);
  }
  if (truth) {
    out.groundtruth_path = stem + ".groundtruth.json";
    save_groundtruth(*truth, dir / out.groundtruth_path);
  }
  write_json(dataset_to_json(out), manifest);
}

CalibrationDataset load_dataset(const fs::path& manifest) {
  CalibrationDataset data = dataset_from_json(read_json(manifest));
  const fs::path dir = manifest.parent_path();
  for (auto& img : data.images) {
    if (!img.depth_map_path.empty()) img.depth_map = load_depth_map(dir / img.depth_map_path);
  }
  try {
    data.validate();
  } catch (const Error& e) {
    raise(ErrorCode::ParseError, manifest.string() + ": " + e.message());
  }
  return data;
}

void save_groundtruth(const GroundTruth& truth, const fs::path& sidecar) {
  json planes = json::array();
  for (const auto& p : truth.planes) planes.push_back({{"normal", to_json(p.normal)}, {"offset_mm", p.offset}});
  json corners = json::array();
  for (const auto& c : truth.corners_px) corners.push_back(points_to_json(c));
  write_json({{"schema_version", kSchemaVersion},
              {"params", params_to_json(truth.params)},
              {"corners_px", corners},
              {"corner_depths_mm", truth.corner_depths},
              {"planes", planes}},
             sidecar);
}

GroundTruth load_groundtruth(const fs::path& sidecar) {
  const json j = read_json(sidecar);
  check_schema(j);
  GroundTruth t;
  t.params = params_from_json(field(j, "", "params"));
  const json& corners = array(field(j, "", "corners_px"), "corners_px");
  for (std::size_t i = 0; i < corners.size(); ++i) {
    t.corners_px.push_back(points_from_json(corners[i], "corners_px[" + std::to_string(i) + "]"));
  }
  const json& depths = array(field(j, "", "corner_depths_mm"), "corner_depths_mm");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    t.corner_depths.push_back(numbers(depths[i], "corner_depths_mm[" + std::to_string(i) + "]"));
  }
  const json& planes = array(field(j, "", "planes"), "planes");
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const std::string path = "planes[" + std::to_string(i) + "]";
    t.planes.push_back({vec3(field(planes[i], path, "normal"), path + ".normal"),
                        number(field(planes[i], path, "offset_mm"), path + ".offset_mm")});
  }
  return t;
}

GroundTruth load_groundtruth(const CalibrationDataset& data, const fs::path& manifest) {
  if (data.groundtruth_path.empty()) raise(ErrorCode::MissingGroundtruth, "dataset has no groundtruth sidecar");
  return load_groundtruth(manifest.parent_path() / data.groundtruth_path);
}

}  // namespace tofcalib
