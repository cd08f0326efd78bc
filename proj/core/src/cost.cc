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

#include "plr/cost.h"

#include <numeric>

#include "plr/error.h"
#include "plr/replay.h"

namespace plr {

double CostModel::internal_replay_updates() const {
  return std::accumulate(blocks.begin(), blocks.end(), 0.0);
}

CostModel blocks_from_spec(const ClassifierSpec& spec, bool include_biases) {
  spec.validate();
  CostModel model;
  const std::vector<int>& w = spec.hidden_widths;
  for (size_t n = 0; n < w.size(); ++n) {
    const double in = w[n];
    const double out = n + 1 < w.size() ? w[n + 1] : spec.num_classes;
    model.blocks.push_back(in * out + (include_biases ? out : 0.0));
  }
  return model;
}

double updates(const CostModel& model, const std::vector<double>& frequencies) {
  if (frequencies.size() != model.blocks.size()) {
    throw ConfigError("strategy has " + std::to_string(frequencies.size()) +
                      " levels but the cost model has " +
                      std::to_string(model.blocks.size()));
  }
  double cumulative = 0.0;
  double u = 0.0;
  for (size_t n = 0; n < model.blocks.size(); ++n) {
    cumulative += frequencies[n];
    u += cumulative * model.blocks[n];
  }
  return u;
}

double updates(const CostModel& model, const ReplayStrategy& strategy) {
  return updates(model, strategy.frequencies());
}

double relative_cost(const CostModel& model, const ReplayStrategy& strategy) {
  const double full = model.internal_replay_updates();
  if (full <= 0.0) throw ConfigError("cost model has no parameters");
  return updates(model, strategy) / full;
}

double MeasuredUpdates::per_sample() const {
  if (replay_samples == 0) return 0.0;
  return static_cast<double>(replay_touches) / static_cast<double>(replay_samples);
}

double MeasuredUpdates::per_batch() const {
  if (replay_batches == 0) return 0.0;
  return static_cast<double>(replay_touches) / static_cast<double>(replay_batches);
}

MeasuredUpdates measured_updates(const TouchCounter& counter, int num_conv,
                                 int64_t replay_samples, int64_t replay_batches) {
  if (counter.per_stage.empty()) {
    throw UnavailableError("gradient-touch instrumentation was not enabled");
  }
  MeasuredUpdates m;
  const size_t conv = static_cast<size_t>(num_conv);
  m.extractor_touches = counter.range(0, conv);
  m.replay_touches = counter.range(conv, counter.per_stage.size());
  m.replay_samples = replay_samples;
  m.replay_batches = replay_batches;
  return m;
}

}  // namespace plr
