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

#ifndef PLR_TRAINER_H_
#define PLR_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plr/arch.h"
#include "plr/generator.h"
#include "plr/nn.h"
#include "plr/replay.h"

namespace plr {

enum class ReplayMode {
  kNone,              // fine-tuning, no rehearsal
  kGenerativeLatent,  // generative PLR (IR when the strategy is one-hot at 0)
  kBufferLatent,      // buffer PLR
  kGenerativeImage,   // standard image-space generative replay
};

std::string to_string(ReplayMode mode);
// "none", "generative-plr", "buffer-plr", "ir", "gr". "ir" maps to
// kGenerativeLatent; the caller pins the strategy.
ReplayMode parse_replay_mode(std::string_view text);

struct TrainConfig {
  int batch_size = 256;
  int replay_batch_size = 256;
  int steps_per_task = 1000;
  AdamConfig classifier_optimizer;
  AdamConfig generator_optimizer;
  // Soft-target temperature for distillation of replayed samples.
  double temperature = 2.0;
  // Current-task loss weight 1/t and replay weight 1 - 1/t at task t; when
  // false, `replay_weight` is used for every task after the first.
  bool mix_by_task = true;
  double replay_weight = 0.5;
  bool soft_buffer_targets = false;
  bool augment = false;
  // Steps between log records; 0 disables per-step logs.
  int log_every = 50;
};

// A task's training data. `fetch` fills a batch for the given sample
// indices, applying augmentation with `rng` when `augment` is set.
struct TaskData {
  int64_t size = 0;
  std::vector<int> classes;
  std::function<void(std::span<const int64_t> indices, bool augment, Rng& rng,
                     Matrix& images, std::vector<int>& labels)>
      fetch;
};

struct StepLog {
  int task = 0;
  int step = 0;
  double current_loss = 0.0;
  double replay_loss = 0.0;
  double generator_loss = 0.0;
};

struct TaskLog {
  int task = 0;
  std::vector<StepLog> steps;
};

// Everything a continual run mutates across tasks.
struct Learner {
  Classifier classifier;
  ReplayMode mode = ReplayMode::kNone;
  ReplayStrategy strategy;
  std::optional<Generator> generator;
  std::optional<FeatureBuffer> buffer;
  // Frozen copies taken at the end of the previous task.
  std::optional<Classifier> teacher;
  std::optional<Generator> previous_generator;
  Adam classifier_optimizer;
  Adam generator_optimizer;
  std::vector<int> seen_classes;
  int tasks_completed = 0;

  // Replay-only gradient-touch instrumentation.
  std::optional<TouchCounter> replay_counter;
  int64_t replay_samples = 0;
  int64_t replay_batches = 0;

  static Learner create(Classifier classifier, ReplayMode mode,
                        ReplayStrategy strategy, const TrainConfig& config,
                        std::optional<Generator> generator = std::nullopt,
                        int buffer_capacity = 0);
  void enable_instrumentation();
};

// Trains one task. Each step combines the current-task cross-entropy on a
// real batch with the replay loss; the generator (when present) is trained on
// the same real batch and on replay from its previous-task copy. At the end
// of the task, buffer mode inserts current taps under the retention policy
// and teacher/previous-generator snapshots are refreshed.
TaskLog train_task(Learner& learner, const TaskData& task,
                   const TrainConfig& config, Rng& rng);

// Current-task vs replay loss weights at 1-based task index t.
std::pair<double, double> mixing_weights(int task_index, const TrainConfig& config);

// Fraction of rows whose argmax matches the label.
double accuracy(const Classifier& classifier, const Matrix& images,
                std::span<const int> labels, int batch_size = 512);

}  // namespace plr

#endif  // PLR_TRAINER_H_
