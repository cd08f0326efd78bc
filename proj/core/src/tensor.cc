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

#include "plr/tensor.h"

#include <cmath>
#include <numbers>

namespace plr {
namespace {

// Uniform in (0, 1]; avoids log(0) in Box-Muller.
double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix out(rows, cols);
  double* data = out.data();
  const Eigen::Index n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform_open(rng)));
    const double theta = 2.0 * std::numbers::pi * uniform_open(rng);
    data[i] = r * std::cos(theta);
    if (i + 1 < n) data[i + 1] = r * std::sin(theta);
  }
  return out;
}

uint64_t derive_seed(uint64_t seed, uint64_t tag) {
  // splitmix64 finalizer
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace plr
