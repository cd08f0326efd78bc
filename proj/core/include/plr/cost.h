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

#ifndef PLR_COST_H_
#define PLR_COST_H_

#include <cstdint>
#include <vector>

#include "plr/arch.h"
#include "plr/nn.h"

namespace plr {

class ReplayStrategy;

// Replay update-cost model.
//
// blocks[n] is the parameter count of the layer that consumes level-n
// features: hidden layer n+1 for n < H-1, the output layer for n = H-1.
// Injection at level n updates blocks n..H-1, so
//
//   U(S) = sum_n (sum_{k<=n} f_k) * blocks[n]
//   R(S) = U(S) / U([1, 0, ..., 0])
//
// The extractor -> hidden-0 layer is upstream of every injection point and is
// never part of the model.
struct CostModel {
  std::vector<double> blocks;

  int num_levels() const { return static_cast<int>(blocks.size()); }
  double internal_replay_updates() const;  // U([1, 0, ..., 0]) = sum of blocks
};

CostModel blocks_from_spec(const ClassifierSpec& spec, bool include_biases = false);

// Throws ConfigError on a length mismatch.
double updates(const CostModel& model, const ReplayStrategy& strategy);
double updates(const CostModel& model, const std::vector<double>& frequencies);
// Throws ConfigError when every block is zero.
double relative_cost(const CostModel& model, const ReplayStrategy& strategy);

// Weight-gradient touches recorded by an instrumented training loop.
struct MeasuredUpdates {
  uint64_t replay_touches = 0;     // FC-stack weight touches during replay
  uint64_t extractor_touches = 0;  // conv weight touches during replay
  int64_t replay_samples = 0;      // replayed rows
  int64_t replay_batches = 0;

  // Touches per replayed sample; comparable to updates(model, S).
  double per_sample() const;
  // Touches per replay batch.
  double per_batch() const;
};

// Aggregates a touch counter over replay-only backward passes. Throws
// UnavailableError when the counter was never attached (empty).
MeasuredUpdates measured_updates(const TouchCounter& counter, int num_conv,
                                 int64_t replay_samples, int64_t replay_batches);

}  // namespace plr

#endif  // PLR_COST_H_
