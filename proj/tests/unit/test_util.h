// Copyright 2026 The PLR Authors
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

#ifndef PLR_TESTS_TEST_UTIL_H_
#define PLR_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include "plr/nn.h"
#include "plr/tensor.h"

namespace plr::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, uint64_t seed,
                            double scale = 1.0) {
  Rng rng(seed);
  return standard_normal(rows, cols, rng) * scale;
}

// |a - b| / max(|a| + |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), floor);
}

// Central difference of `loss` w.r.t. entry (r, c) of `param`.
inline double central_difference(Param& param, Eigen::Index r, Eigen::Index c,
                                 const std::function<double()>& loss, double eps = 1e-6) {
  const double saved = param.value(r, c);
  param.value(r, c) = saved + eps;
  const double up = loss();
  param.value(r, c) = saved - eps;
  const double down = loss();
  param.value(r, c) = saved;
  return (up - down) / (2.0 * eps);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* env = std::getenv("PLR_TEST_TMP");
  std::filesystem::path root = env ? env : std::filesystem::temp_directory_path() / "plr_tests";
  std::filesystem::path dir = root / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace plr::testing

#endif  // PLR_TESTS_TEST_UTIL_H_
