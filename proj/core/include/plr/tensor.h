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

#ifndef PLR_TENSOR_H_
#define PLR_TENSOR_H_

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace plr {

// Batches are row-major: one sample per row.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

// Draws a matrix of independent standard normal entries.
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Derives an independent stream from a parent seed and a tag.
uint64_t derive_seed(uint64_t seed, uint64_t tag);

}  // namespace plr

#endif  // PLR_TENSOR_H_
