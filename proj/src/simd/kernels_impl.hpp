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

#include "tofcalib/simd/kernels.hpp"

namespace tofcalib::simd {

namespace scalar {
void back_project(const LensParams& lens, const double* u, const double* v, const double* depth,
                  std::size_t n, double* x, double* y, double* z, std::uint8_t* ok);
std::size_t count_plane_inliers(const double* normal, double offset, double threshold,
                                const double* x, const double* y, const double* z, std::size_t n);
}  // namespace scalar

namespace avx2 {
void back_project(const LensParams& lens, const double* u, const double* v, const double* depth,
                  std::size_t n, double* x, double* y, double* z, std::uint8_t* ok);
std::size_t count_plane_inliers(const double* normal, double offset, double threshold,
                                const double* x, const double* y, const double* z, std::size_t n);
}  // namespace avx2

}  // namespace tofcalib::simd
