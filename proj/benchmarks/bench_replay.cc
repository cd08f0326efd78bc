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

#include <benchmark/benchmark.h>

#include "plr/cost.h"
#include "plr/generator.h"
#include "plr/replay.h"

namespace {

using namespace plr;

const std::vector<std::vector<double>>& arch1_strategies() {
  static const std::vector<std::vector<double>> s{
      {1.0, 0.0}, {0.7, 0.3}, {0.5, 0.5}, {0.3, 0.7}};
  return s;
}

// One generative replay step (sample, label, backward, Adam) on ARCH1's FC
// stack. Time should track the relative cost of the strategy.
void BM_GenerativeReplayStep(benchmark::State& state) {
  const ClassifierSpec spec = ClassifierSpec::preset("ARCH1");
  Classifier c = Classifier::build(spec, 1);
  c.freeze(FreezeScope::kExtractor);
  const Classifier teacher = Classifier::build(spec, 2);
  const Generator g = Generator::build(GeneratorSpec::mirror(spec, 100), 3);
  const ReplayStrategy s =
      ReplayStrategy::create(arch1_strategies()[static_cast<size_t>(state.range(0))]);
  std::vector<Param*> params = c.parameters();
  Adam adam(AdamConfig{1e-4});
  Rng rng(4);
  ReplayOptions opt;
  opt.batch_size = 256;
  for (auto _ : state) {
    zero_grad(params);
    benchmark::DoNotOptimize(replay_step_generative(c, teacher, g, s, opt, rng));
    adam.step(params);
  }
  state.SetLabel(s.label() + " R=" + std::to_string(relative_cost(blocks_from_spec(spec), s)));
}
BENCHMARK(BM_GenerativeReplayStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_BufferReplayStep(benchmark::State& state) {
  const ClassifierSpec spec = ClassifierSpec::preset("ARCH1");
  Classifier c = Classifier::build(spec, 1);
  Rng rng(4);
  FeatureBuffer buffer(512, 2);
  std::vector<BufferEntry> entries;
  for (int i = 0; i < 512; ++i) {
    BufferEntry e;
    e.label = i % 10;
    e.taps = {standard_normal(1, 2000, rng).cwiseAbs(), standard_normal(1, 2000, rng).cwiseAbs()};
    entries.push_back(std::move(e));
  }
  buffer.add(std::move(entries), rng);
  const ReplayStrategy s =
      ReplayStrategy::create(arch1_strategies()[static_cast<size_t>(state.range(0))]);
  std::vector<Param*> params = c.parameters();
  ReplayOptions opt;
  opt.batch_size = 256;
  for (auto _ : state) {
    zero_grad(params);
    benchmark::DoNotOptimize(replay_step_buffer(c, nullptr, buffer, s, opt, rng));
  }
  state.SetLabel(s.label());
}
BENCHMARK(BM_BufferReplayStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_RelativeCost(benchmark::State& state) {
  const CostModel m = blocks_from_spec(ClassifierSpec::preset("ARCH2"));
  const ReplayStrategy s = ReplayStrategy::create({0.34, 0.33, 0.33});
  for (auto _ : state) benchmark::DoNotOptimize(relative_cost(m, s));
}
BENCHMARK(BM_RelativeCost);

void BM_SplitBatch(benchmark::State& state) {
  const ReplayStrategy s = ReplayStrategy::create({0.5, 0.3, 0.2});
  for (auto _ : state) benchmark::DoNotOptimize(split_batch(256, s));
}
BENCHMARK(BM_SplitBatch);

}  // namespace

BENCHMARK_MAIN();
