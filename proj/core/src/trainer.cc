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

#include "plr/trainer.h"

#include <algorithm>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "plr/error.h"
#include "plr/random.h"

namespace plr {

std::string to_string(ReplayMode mode) {
  switch (mode) {
    case ReplayMode::kNone:
      return "none";
    case ReplayMode::kGenerativeLatent:
      return "generative-plr";
    case ReplayMode::kBufferLatent:
      return "buffer-plr";
    case ReplayMode::kGenerativeImage:
      return "gr";
  }
  return "none";
}

ReplayMode parse_replay_mode(std::string_view text) {
  if (text == "none") return ReplayMode::kNone;
  if (text == "generative-plr" || text == "ir") return ReplayMode::kGenerativeLatent;
  if (text == "buffer-plr") return ReplayMode::kBufferLatent;
  if (text == "gr") return ReplayMode::kGenerativeImage;
  throw ConfigError("unknown replay mode '" + std::string(text) +
                    "' (expected none, generative-plr, buffer-plr, ir or gr)");
}

Learner Learner::create(Classifier classifier, ReplayMode mode,
                        ReplayStrategy strategy, const TrainConfig& config,
                        std::optional<Generator> generator, int buffer_capacity) {
  Learner l;
  l.mode = mode;
  if (mode == ReplayMode::kGenerativeLatent || mode == ReplayMode::kBufferLatent) {
    if (strategy.num_levels() != classifier.num_levels()) {
      throw ConfigError("strategy " + strategy.to_string() + " does not match " +
                        classifier.spec().name);
    }
  }
  if ((mode == ReplayMode::kGenerativeLatent ||
       mode == ReplayMode::kGenerativeImage) &&
      !generator.has_value()) {
    throw ConfigError(to_string(mode) + " needs a generator");
  }
  if (mode == ReplayMode::kBufferLatent) {
    l.buffer.emplace(buffer_capacity, classifier.num_levels());
  }
  l.classifier = std::move(classifier);
  l.strategy = std::move(strategy);
  l.generator = std::move(generator);
  l.classifier_optimizer = Adam(config.classifier_optimizer);
  l.generator_optimizer = Adam(config.generator_optimizer);
  return l;
}

void Learner::enable_instrumentation() {
  replay_counter.emplace();
  replay_counter->per_stage.assign(static_cast<size_t>(classifier.num_stages()), 0);
  replay_samples = 0;
  replay_batches = 0;
}

std::pair<double, double> mixing_weights(int task_index, const TrainConfig& config) {
  if (task_index <= 1) return {1.0, 0.0};
  if (config.mix_by_task) {
    const double current = 1.0 / task_index;
    return {current, 1.0 - current};
  }
  return {1.0 - config.replay_weight, config.replay_weight};
}

namespace {

class BatchCursor {
 public:
  BatchCursor(int64_t size, Rng& rng) : order_(static_cast<size_t>(size)) {
    std::iota(order_.begin(), order_.end(), 0);
    shuffle(order_, rng);
  }

  std::vector<int64_t> next(int batch_size, Rng& rng) {
    std::vector<int64_t> out;
    out.reserve(static_cast<size_t>(batch_size));
    while (static_cast<int>(out.size()) < batch_size) {
      if (pos_ == order_.size()) {
        shuffle(order_, rng);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<int64_t> order_;
  size_t pos_ = 0;
};

// Classifier activations the generator reconstructs, read off an image trace.
ReconstructionTargets latent_targets(const Classifier& classifier,
                                     const ForwardTrace& image_trace) {
  ReconstructionTargets t;
  const int c = classifier.num_conv();
  t.input = c == 0 ? image_trace.input
                   : image_trace.outputs[static_cast<size_t>(c - 1)];
  for (int n = 0; n < classifier.num_levels(); ++n) {
    t.levels.push_back(image_trace.outputs[static_cast<size_t>(c + n)]);
  }
  return t;
}

void fill_buffer(Learner& learner, const TaskData& task, int task_index,
                 Rng& rng) {
  FeatureBuffer& buffer = *learner.buffer;
  const int classes = static_cast<int>(learner.seen_classes.size());
  const int quota = (buffer.capacity() + classes - 1) / classes;
  std::vector<int64_t> order(static_cast<size_t>(task.size));
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);

  std::map<int, int> taken;
  std::vector<BufferEntry> candidates;
  constexpr size_t kChunk = 256;
  Rng unused(0);
  for (size_t start = 0; start < order.size(); start += kChunk) {
    const size_t end = std::min(order.size(), start + kChunk);
    Matrix images;
    std::vector<int> labels;
    task.fetch(std::span(order).subspan(start, end - start), false, unused,
               images, labels);
    const Classifier::Forward fwd = learner.classifier.forward_with_taps(images);
    for (size_t i = 0; i < labels.size(); ++i) {
      if (taken[labels[i]] >= quota) continue;
      ++taken[labels[i]];
      BufferEntry e;
      e.label = labels[i];
      e.task = task_index;
      for (const Matrix& level : fwd.taps.levels) {
        e.taps.push_back(level.row(static_cast<Eigen::Index>(i)));
      }
      candidates.push_back(std::move(e));
    }
    const bool done = std::all_of(task.classes.begin(), task.classes.end(),
                                  [&](int c) { return taken[c] >= quota; });
    if (done) break;
  }
  buffer.add(std::move(candidates), rng);
}

}  // namespace

TaskLog train_task(Learner& learner, const TaskData& task,
                   const TrainConfig& config, Rng& rng) {
  if (task.size <= 0) throw ConfigError("task has no training samples");
  if (config.batch_size <= 0) throw ConfigError("batch size must be positive");
  const int t = learner.tasks_completed + 1;
  const bool replay = t > 1 && learner.mode != ReplayMode::kNone;
  auto [current_weight, replay_weight] = mixing_weights(t, config);
  if (!replay) {
    current_weight = 1.0;
    replay_weight = 0.0;
  }

  std::vector<int> active = learner.seen_classes;
  for (int c : task.classes) {
    if (std::find(active.begin(), active.end(), c) == active.end()) {
      active.push_back(c);
    }
  }
  std::sort(active.begin(), active.end());
  if (learner.generator.has_value() && learner.generator->spec().conditional) {
    learner.generator->set_active_classes(active);
  }

  const std::vector<Param*> cls_params = learner.classifier.parameters();
  std::vector<Param*> gen_params;
  if (learner.generator.has_value()) gen_params = learner.generator->parameters();

  ReplayOptions options;
  options.batch_size = config.replay_batch_size;
  options.weight = replay_weight;
  options.temperature = config.temperature;
  options.soft_targets = config.soft_buffer_targets;
  options.counter = learner.replay_counter ? &*learner.replay_counter : nullptr;

  TaskLog log;
  log.task = t;
  BatchCursor cursor(task.size, rng);
  Matrix images;
  std::vector<int> labels;
  for (int step = 0; step < config.steps_per_task; ++step) {
    const std::vector<int64_t> idx = cursor.next(config.batch_size, rng);
    task.fetch(idx, config.augment, rng, images, labels);

    zero_grad(cls_params);
    const ForwardTrace trace = learner.classifier.trace(images, Entry::image());
    const LossAndGrad ce = cross_entropy(trace.logits(), labels);
    learner.classifier.backward(trace, ce.grad * current_weight);

    StepLog entry;
    entry.task = t;
    entry.step = step;
    entry.current_loss = ce.loss;
    if (replay) {
      ReplayLosses r;
      switch (learner.mode) {
        case ReplayMode::kGenerativeLatent:
          r = replay_step_generative(learner.classifier, *learner.teacher,
                                     *learner.previous_generator,
                                     learner.strategy, options, rng);
          break;
        case ReplayMode::kBufferLatent:
          r = replay_step_buffer(learner.classifier,
                                 learner.teacher ? &*learner.teacher : nullptr,
                                 *learner.buffer, learner.strategy, options, rng);
          break;
        case ReplayMode::kGenerativeImage:
          r = replay_step_image(learner.classifier, *learner.teacher,
                                *learner.previous_generator, options, rng);
          break;
        case ReplayMode::kNone:
          break;
      }
      entry.replay_loss = r.total;
      if (learner.replay_counter && r.replayed > 0) {
        learner.replay_samples += r.replayed;
        ++learner.replay_batches;
      }
    }
    learner.classifier_optimizer.step(cls_params);

    if (learner.generator.has_value()) {
      Generator& gen = *learner.generator;
      zero_grad(gen_params);
      const bool image_space = learner.mode == ReplayMode::kGenerativeImage;
      ReconstructionTargets targets;
      if (image_space) {
        targets.input = images;
      } else {
        targets = latent_targets(learner.classifier, trace);
      }
      const Encoding enc = gen.encode(targets.input, rng);
      const std::span<const int> real_labels =
          gen.spec().conditional ? std::span<const int>(labels)
                                 : std::span<const int>();
      GeneratorLoss gl = gen.backward(targets, enc, real_labels, current_weight);
      entry.generator_loss = gl.total;
      if (replay) {
        std::vector<int> classes;
        const Generator& prev = *learner.previous_generator;
        const Matrix replayed = prev.sample(prev.num_levels(),
                                            config.replay_batch_size,
                                            std::nullopt, rng, &classes);
        ReconstructionTargets replay_targets;
        replay_targets.input = replayed;
        if (!image_space) {
          const ForwardTrace rt =
              learner.classifier.trace(replayed, Entry::extractor());
          for (int n = 0; n < learner.classifier.num_levels(); ++n) {
            replay_targets.levels.push_back(rt.outputs[static_cast<size_t>(n)]);
          }
        }
        const Encoding renc = gen.encode(replayed, rng);
        gen.backward(replay_targets, renc, classes, replay_weight);
      }
      learner.generator_optimizer.step(gen_params);
    }

    if (config.log_every > 0 &&
        (step % config.log_every == 0 || step + 1 == config.steps_per_task)) {
      log.steps.push_back(entry);
      spdlog::debug("task {} step {}: current {:.4f} replay {:.4f} generator {:.4f}",
                    t, step, entry.current_loss, entry.replay_loss,
                    entry.generator_loss);
    }
  }

  learner.seen_classes = active;
  if (learner.mode == ReplayMode::kBufferLatent) {
    fill_buffer(learner, task, t, rng);
  }
  learner.teacher = learner.classifier;
  if (learner.generator.has_value()) {
    learner.previous_generator = *learner.generator;
    if (learner.previous_generator->spec().conditional) {
      learner.previous_generator->set_active_classes(active);
    }
  }
  learner.tasks_completed = t;
  return log;
}

double accuracy(const Classifier& classifier, const Matrix& images,
                std::span<const int> labels, int batch_size) {
  if (static_cast<Eigen::Index>(labels.size()) != images.rows()) {
    throw InputError("accuracy: label count does not match images");
  }
  if (images.rows() == 0) return 0.0;
  int64_t correct = 0;
  for (Eigen::Index start = 0; start < images.rows(); start += batch_size) {
    const Eigen::Index n = std::min<Eigen::Index>(batch_size, images.rows() - start);
    const Matrix logits =
        classifier.forward_with_taps(images.middleRows(start, n)).logits;
    const std::vector<int> pred = argmax_rows(logits);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pred[static_cast<size_t>(i)] == labels[static_cast<size_t>(start + i)]) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(images.rows());
}

}  // namespace plr
