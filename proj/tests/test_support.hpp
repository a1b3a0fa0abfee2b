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

#include <cmath>
#include <random>

#include <doctest.h>

#include "tofcalib/camera_model.hpp"
#include "tofcalib/error.hpp"

namespace tofcalib::testing {

// Asserts that `expr` throws tofcalib::Error carrying `expected`.
#define CHECK_ERROR_CODE(expr, expected)                                              \
  do {                                                                                \
    bool thrown_ = false;                                                             \
    try {                                                                             \
      (void)(expr);                                                                   \
    } catch (const ::tofcalib::Error& e_) {                                           \
      thrown_ = true;                                                                 \
      CHECK_MESSAGE(e_.code() == (expected), "got ", ::tofcalib::to_string(e_.code())); \
    }                                                                                 \
    CHECK_MESSAGE(thrown_, "expected ", ::tofcalib::to_string(expected));             \
  } while (0)

inline Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline Vector3 random_rvec(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return u(rng) * random_unit(rng);
}

inline Intrinsics default_intrinsics() { return {284.4, 284.4, 100.0, 100.0}; }
inline Distortion default_distortion() { return {0.1, -0.05, 0.001, 0.002}; }

}  // namespace tofcalib::testing
