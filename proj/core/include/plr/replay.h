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

#ifndef PLR_REPLAY_H_
#define PLR_REPLAY_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "plr/arch.h"
#include "plr/generator.h"
#include "plr/nn.h"
#include "plr/tensor.h"

namespace plr {

// Per-level replay fractions S = [f_0, ..., f_{H-1}]; f_n is the share of a
// replay batch injected at hidden level n. Frequencies are non-negative and
// sum to one within 1e-9.
class ReplayStrategy {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ReplayStrategy() = default;
  // Throws ConfigError on a negative entry, an empty vector or a bad sum.
  static ReplayStrategy create(std::vector<double> frequencies);
  // One-hot at level 0: every replayed sample passes the whole FC stack.
  static ReplayStrategy internal_replay(int levels);
  // Accepts "IR", "[0.5, 0.3, 0.2]" or "0.5,0.3,0.2". Throws ConfigError,
  // including when the length differs from `levels` (skipped when levels <= 0).
  static ReplayStrategy parse(std::string_view text, int levels = 0);

  const std::vector<double>& frequencies() const { return frequencies_; }
  int num_levels() const { return static_cast<int>(frequencies_.size()); }
  int shallowest_level() const;
  bool is_internal_replay() const;
  // "[0.7, 0.3]"
  std::string to_string() const;
  // "Internal Replay" or "S=[0.7, 0.3]"
  std::string label() const;

  friend bool operator==(const ReplayStrategy&, const ReplayStrategy&) = default;

 private:
  explicit ReplayStrategy(std::vector<double> f) : frequencies_(std::move(f)) {}
  std::vector<double> frequencies_;
};

// Largest-remainder apportionment of `batch_size` over the strategy levels.
// Counts sum to batch_size and each differs from batch_size * f_n by less
// than one. Remainder ties go to the shallower level.
std::vector<int> split_batch(int batch_size, const ReplayStrategy& strategy);

struct BufferEntry {
  std::vector<RowVector> taps;  // one per hidden level
  int label = 0;
  int task = 0;
};

// Fixed-capacity store of hidden-level taps with class-balanced retention:
// after every insertion each seen class keeps an equal share (within one
// sample) of the capacity, chosen uniformly at random within the class.
class FeatureBuffer {
 public:
  FeatureBuffer() = default;
  FeatureBuffer(int capacity, int levels);

  int capacity() const { return capacity_; }
  int num_levels() const { return levels_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const std::vector<BufferEntry>& entries() const { return entries_; }
  std::map<int, int> class_counts() const;

  void add(std::vector<BufferEntry> candidates, Rng& rng);
  // Uniform with replacement.
  std::vector<int> sample_indices(int count, Rng& rng) const;
  Matrix level_batch(const std::vector<int>& indices, int level) const;
  std::vector<int> labels(const std::vector<int>& indices) const;

 private:
  int capacity_ = 0;
  int levels_ = 0;
  std::vector<BufferEntry> entries_;
};

struct ReplayLosses {
  std::vector<int> counts;
  std::vector<double> per_level;  // unweighted mean loss per level
  double total = 0.0;             // count-weighted mean over the batch
  int replayed = 0;
};

struct ReplayOptions {
  int batch_size = 256;
  // Scales the gradient contribution (mixing coefficient).
  double weight = 1.0;
  double temperature = 2.0;
  // Buffer replay: distil from the teacher instead of using stored labels.
  bool soft_targets = false;
  TouchCounter* counter = nullptr;
};

// Generative latent replay. For every level with a non-zero count, samples
// features from the generator at that level, labels them with the teacher's
// softened outputs, and backpropagates a distillation loss through the
// classifier from that level. Only gradients are accumulated; parameters at
// or upstream of the shallowest injected level receive none.
ReplayLosses replay_step_generative(Classifier& classifier,
                                    const Classifier& teacher,
                                    const Generator& generator,
                                    const ReplayStrategy& strategy,
                                    const ReplayOptions& options, Rng& rng);

// Buffer latent replay: per-level counts from split_batch, entries drawn
// uniformly, entry.taps[n] injected at level n with the stored label (or the
// teacher's soft targets). An empty buffer is a logged no-op.
ReplayLosses replay_step_buffer(Classifier& classifier, const Classifier* teacher,
                                const FeatureBuffer& buffer,
                                const ReplayStrategy& strategy,
                                const ReplayOptions& options, Rng& rng);

// Standard generative replay: images decoded by an image-space generator are
// passed through the whole classifier and distilled from the teacher.
ReplayLosses replay_step_image(Classifier& classifier, const Classifier& teacher,
                               const Generator& image_generator,
                               const ReplayOptions& options, Rng& rng);

}  // namespace plr

#endif  // PLR_REPLAY_H_
