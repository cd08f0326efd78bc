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

#ifndef PLR_RANDOM_H_
#define PLR_RANDOM_H_

#include <cstdint>
#include <vector>

#include "plr/tensor.h"

namespace plr {

// Distribution helpers with a fixed algorithm, so results do not depend on
// the standard library's distribution implementations.

// Uniform in [0, 1).
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
// Uniform integer in [0, n).
int64_t uniform_index(Rng& rng, int64_t n);
// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
    const int64_t j = uniform_index(rng, i + 1);
    std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
  }
}

}  // namespace plr

#endif  // PLR_RANDOM_H_
