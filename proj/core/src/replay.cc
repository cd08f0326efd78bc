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

#include "plr/replay.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <spdlog/spdlog.h>

#include "plr/error.h"
#include "plr/random.h"

namespace plr {
namespace {

std::string format_frequency(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", f);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

ReplayStrategy ReplayStrategy::create(std::vector<double> frequencies) {
  if (frequencies.empty()) throw ConfigError("strategy has no levels");
  double sum = 0.0;
  for (double f : frequencies) {
    if (!std::isfinite(f) || f < 0.0) {
      throw ConfigError("strategy frequencies must be finite and non-negative");
    }
    sum += f;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ConfigError("strategy frequencies sum to " + format_frequency(sum) +
                      ", expected 1");
  }
  return ReplayStrategy(std::move(frequencies));
}

ReplayStrategy ReplayStrategy::internal_replay(int levels) {
  if (levels <= 0) throw ConfigError("internal replay needs at least one level");
  std::vector<double> f(static_cast<size_t>(levels), 0.0);
  f[0] = 1.0;
  return ReplayStrategy(std::move(f));
}

ReplayStrategy ReplayStrategy::parse(std::string_view text, int levels) {
  std::string_view s = trim(text);
  if (s == "IR" || s == "ir") {
    if (levels <= 0) throw ConfigError("'IR' needs a known level count");
    return internal_replay(levels);
  }
  if (s == "GR" || s == "gr") {
    throw ConfigError("'GR' is a replay mode, not a latent strategy");
  }
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated strategy '" + std::string(text) + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> f;
  while (true) {
    const size_t comma = s.find(',');
    const std::string_view item = trim(s.substr(0, comma));
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError("cannot parse strategy '" + std::string(text) + "'");
    }
    f.push_back(value);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (levels > 0 && static_cast<int>(f.size()) != levels) {
    throw ConfigError("strategy '" + std::string(text) + "' has " +
                      std::to_string(f.size()) + " levels, architecture has " +
                      std::to_string(levels));
  }
  return create(std::move(f));
}

int ReplayStrategy::shallowest_level() const {
  for (size_t n = 0; n < frequencies_.size(); ++n) {
    if (frequencies_[n] > 0.0) return static_cast<int>(n);
  }
  return -1;
}

bool ReplayStrategy::is_internal_replay() const {
  return !frequencies_.empty() && frequencies_[0] == 1.0;
}

std::string ReplayStrategy::to_string() const {
  std::string out = "[";
  for (size_t n = 0; n < frequencies_.size(); ++n) {
    if (n > 0) out += ", ";
    out += format_frequency(frequencies_[n]);
  }
  return out + "]";
}

std::string ReplayStrategy::label() const {
  if (is_internal_replay()) return "Internal Replay";
  return "S=" + to_string();
}

std::vector<int> split_batch(int batch_size, const ReplayStrategy& strategy) {
  if (batch_size < 0) throw ConfigError("batch size must be non-negative");
  const std::vector<double>& f = strategy.frequencies();
  if (f.empty()) throw ConfigError("strategy has no levels");
  std::vector<int> counts(f.size(), 0);
  std::vector<double> remainders(f.size(), 0.0);
  int assigned = 0;
  for (size_t n = 0; n < f.size(); ++n) {
    const double exact = batch_size * f[n];
    counts[n] = static_cast<int>(std::floor(exact));
    remainders[n] = exact - counts[n];
    assigned += counts[n];
  }
  std::vector<size_t> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainders[a] > remainders[b];
  });
  for (size_t i = 0; assigned < batch_size; i = (i + 1) % order.size()) {
    if (f[order[i]] > 0.0) {
      ++counts[order[i]];
      ++assigned;
    }
  }
  return counts;
}

FeatureBuffer::FeatureBuffer(int capacity, int levels)
    : capacity_(capacity), levels_(levels) {
  if (capacity <= 0) throw ConfigError("buffer capacity must be positive");
  if (levels <= 0) throw ConfigError("buffer needs at least one level");
}

std::map<int, int> FeatureBuffer::class_counts() const {
  std::map<int, int> counts;
  for (const BufferEntry& e : entries_) ++counts[e.label];
  return counts;
}

void FeatureBuffer::add(std::vector<BufferEntry> candidates, Rng& rng) {
  for (const BufferEntry& e : candidates) {
    if (static_cast<int>(e.taps.size()) != levels_) {
      throw InputError("buffer entry does not store every level");
    }
  }
  std::map<int, std::vector<BufferEntry>> by_class;
  for (BufferEntry& e : entries_) by_class[e.label].push_back(std::move(e));
  for (BufferEntry& e : candidates) by_class[e.label].push_back(std::move(e));
  entries_.clear();

  // Water-filling: smallest classes first, each takes at most an even share
  // of what is left, so retained counts differ by at most one.
  std::vector<std::pair<int, int>> order;  // (available, class)
  for (const auto& [label, items] : by_class) {
    order.emplace_back(static_cast<int>(items.size()), label);
  }
  std::sort(order.begin(), order.end());
  int remaining = capacity_;
  int classes_left = static_cast<int>(order.size());
  for (const auto& [available, label] : order) {
    const int share = (remaining + classes_left - 1) / classes_left;
    const int keep = std::min(available, share);
    std::vector<BufferEntry>& items = by_class[label];
    std::vector<int> idx(items.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    for (int i = 0; i < keep; ++i) {
      entries_.push_back(std::move(items[static_cast<size_t>(idx[static_cast<size_t>(i)])]));
    }
    remaining -= keep;
    --classes_left;
  }
}

std::vector<int> FeatureBuffer::sample_indices(int count, Rng& rng) const {
  std::vector<int> idx;
  if (entries_.empty()) return idx;
  idx.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    idx.push_back(static_cast<int>(uniform_index(rng, size())));
  }
  return idx;
}

Matrix FeatureBuffer::level_batch(const std::vector<int>& indices,
                                  int level) const {
  if (level < 0 || level >= levels_) throw InputError("buffer level out of range");
  if (indices.empty()) return Matrix(0, 0);
  const Eigen::Index width =
      entries_[static_cast<size_t>(indices.front())].taps[static_cast<size_t>(level)].size();
  Matrix out(static_cast<Eigen::Index>(indices.size()), width);
  for (size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        entries_[static_cast<size_t>(indices[i])].taps[static_cast<size_t>(level)];
  }
  return out;
}

std::vector<int> FeatureBuffer::labels(const std::vector<int>& indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(entries_[static_cast<size_t>(i)].label);
  return out;
}

namespace {

void check_levels(const Classifier& classifier, const ReplayStrategy& strategy) {
  if (strategy.num_levels() != classifier.num_levels()) {
    throw ConfigError("strategy " + strategy.to_string() + " does not match a " +
                      std::to_string(classifier.num_levels()) +
                      "-level classifier");
  }
}


}  // namespace

ReplayLosses replay_step_generative(Classifier& classifier,
                                    const Classifier& teacher,
                                    const Generator& generator,
                                    const ReplayStrategy& strategy,
                                    const ReplayOptions& options, Rng& rng) {
  check_levels(classifier, strategy);
  if (generator.num_levels() != classifier.num_levels()) {
    throw ConfigError("generator does not mirror the classifier");
  }
  ReplayLosses out;
  out.counts = split_batch(options.batch_size, strategy);
  out.per_level.assign(out.counts.size(), 0.0);
  for (int n = 0; n < static_cast<int>(out.counts.size()); ++n) {
    const int count = out.counts[static_cast<size_t>(n)];
    if (count == 0) continue;
    const Matrix features = generator.sample_features(n, count, std::nullopt, rng);
    const Matrix targets =
        softmax(teacher.forward_from_level(features, n), options.temperature);
    const ForwardTrace trace = classifier.trace(features, Entry::at_level(n));
    LossAndGrad loss = distillation(trace.logits(), targets, options.temperature);
    const double share = static_cast<double>(count) / options.batch_size;
    classifier.backward(trace, loss.grad * (options.weight * share),
                        options.counter);
    out.per_level[static_cast<size_t>(n)] = loss.loss;
    out.total += share * loss.loss;
    out.replayed += count;
  }
  return out;
}

ReplayLosses replay_step_buffer(Classifier& classifier, const Classifier* teacher,
                                const FeatureBuffer& buffer,
                                const ReplayStrategy& strategy,
                                const ReplayOptions& options, Rng& rng) {
  check_levels(classifier, strategy);
  ReplayLosses out;
  out.counts.assign(static_cast<size_t>(strategy.num_levels()), 0);
  out.per_level.assign(out.counts.size(), 0.0);
  if (buffer.empty()) {
    spdlog::warn("replay buffer is empty; skipping replay");
    return out;
  }
  if (options.soft_targets && teacher == nullptr) {
    throw ConfigError("soft buffer targets need a teacher model");
  }
  out.counts = split_batch(options.batch_size, strategy);
  for (int n = 0; n < static_cast<int>(out.counts.size()); ++n) {
    const int count = out.counts[static_cast<size_t>(n)];
    if (count == 0) continue;
    const std::vector<int> idx = buffer.sample_indices(count, rng);
    const Matrix features = buffer.level_batch(idx, n);
    const ForwardTrace trace = classifier.trace(features, Entry::at_level(n));
    LossAndGrad loss;
    if (options.soft_targets) {
      const Matrix targets = softmax(teacher->forward_from_level(features, n),
                                     options.temperature);
      loss = distillation(trace.logits(), targets, options.temperature);
    } else {
      loss = cross_entropy(trace.logits(), buffer.labels(idx));
    }
    const double share = static_cast<double>(count) / options.batch_size;
    classifier.backward(trace, loss.grad * (options.weight * share),
                        options.counter);
    out.per_level[static_cast<size_t>(n)] = loss.loss;
    out.total += share * loss.loss;
    out.replayed += count;
  }
  return out;
}

ReplayLosses replay_step_image(Classifier& classifier, const Classifier& teacher,
                               const Generator& image_generator,
                               const ReplayOptions& options, Rng& rng) {
  ReplayLosses out;
  out.counts = {options.batch_size};
  out.per_level = {0.0};
  if (options.batch_size == 0) return out;
  const Matrix images = image_generator.sample_features(
      image_generator.num_levels(), options.batch_size, std::nullopt, rng);
  const Matrix targets = softmax(teacher.forward_with_taps(images).logits,
                                 options.temperature);
  const ForwardTrace trace = classifier.trace(images, Entry::image());
  LossAndGrad loss = distillation(trace.logits(), targets, options.temperature);
  classifier.backward(trace, loss.grad * options.weight, options.counter);
  out.per_level[0] = loss.loss;
  out.total = loss.loss;
  out.replayed = options.batch_size;
  return out;
}

}  // namespace plr
