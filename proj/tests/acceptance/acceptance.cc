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

// Acceptance checks that run without external datasets. One line per
// criterion; exit status is non-zero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "plr/arch.h"
#include "plr/cost.h"
#include "plr/generator.h"
#include "plr/harness.h"
#include "plr/metrics.h"
#include "plr/random.h"
#include "plr/replay.h"

namespace {

using namespace plr;

// Tolerances.
constexpr double kCostTolerancePp = 0.05;      // criterion 1, percentage points
constexpr double kCostTimeLimitSeconds = 1.0;  // criterion 1
constexpr double kTouchTolerance = 0.01;       // criterion 2, relative
constexpr int kRandomStrategies = 5;           // criterion 2
constexpr int kReplayBatch = 256;              // criterion 2
constexpr int kMaskingCases = 100;             // criterion 3
constexpr int kTapInputs = 1000;               // criterion 4
constexpr double kTapTolerance = 1e-10;        // criterion 4, max abs logit diff
constexpr double kFiniteDiffTolerance = 1e-4;  // criterion 4, relative
constexpr double kSemExpected = 0.00577;       // criterion 9
constexpr double kSemTolerance = 1e-5;         // criterion 9
constexpr double kFrechetTolerance = 1e-5;     // criterion 9

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

std::vector<double> random_strategy(int levels, Rng& rng) {
  std::vector<double> f(static_cast<size_t>(levels));
  double s = 0.0;
  for (double& x : f) {
    x = -std::log(1.0 - uniform01(rng));  // Dirichlet(1, ..., 1)
    s += x;
  }
  for (double& x : f) x /= s;
  return f;
}

Outcome analytic_cost() {
  struct Row {
    const char* arch;
    std::vector<double> f;
    double published;
  };
  const std::vector<Row> rows{
      {"ARCH1", {0.7, 0.3}, 71.4},           {"ARCH1", {0.5, 0.5}, 52.4},
      {"ARCH1", {0.3, 0.7}, 33.3},           {"ARCH2", {0.5, 0.3, 0.2}, 66.7},
      {"ARCH2", {0.34, 0.33, 0.33}, 52.9},   {"ARCH2", {0.2, 0.3, 0.5}, 38.1}};
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  bool ir_exact = true;
  for (const Row& r : rows) {
    const ClassifierSpec spec = ClassifierSpec::preset(r.arch);
    const CostModel m = blocks_from_spec(spec);
    worst = std::max(worst, std::abs(100.0 * relative_cost(m, ReplayStrategy::create(r.f)) -
                                     r.published));
    ir_exact &= relative_cost(m, ReplayStrategy::internal_replay(spec.num_levels())) == 1.0;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= kCostTolerancePp && ir_exact && secs < kCostTimeLimitSeconds,
          fmt("max |R - published| = %.3f pp, R(IR) exact = ", worst) +
              (ir_exact ? "yes" : "no")};
}

Outcome touch_agreement() {
  Rng rng(20261017);
  double worst = 0.0;
  std::string worst_case;
  int cases = 0;
  for (const std::string& name : ClassifierSpec::preset_names()) {
    const ClassifierSpec spec = ClassifierSpec::preset(name);
    Classifier c = Classifier::build(spec, 1);
    const Classifier teacher = Classifier::build(spec, 2);
    const Generator g = Generator::build(GeneratorSpec::mirror(spec, 16), 3);
    const CostModel model = blocks_from_spec(spec);
    std::vector<ReplayStrategy> strategies{ReplayStrategy::internal_replay(spec.num_levels())};
    for (int i = 0; i < kRandomStrategies; ++i) {
      strategies.push_back(ReplayStrategy::create(random_strategy(spec.num_levels(), rng)));
    }
    for (const ReplayStrategy& s : strategies) {
      TouchCounter counter;
      counter.per_stage.assign(static_cast<size_t>(c.num_stages()), 0);
      ReplayOptions opt;
      opt.batch_size = kReplayBatch;
      opt.counter = &counter;
      std::vector<Param*> params = c.parameters();
      zero_grad(params);
      replay_step_generative(c, teacher, g, s, opt, rng);
      const MeasuredUpdates m = measured_updates(counter, c.num_conv(), kReplayBatch, 1);
      const double expected = kReplayBatch * updates(model, s);
      const double rel = std::abs(m.per_batch() - expected) / expected;
      if (m.extractor_touches != 0) return {false, name + ": conv layers touched by replay"};
      if (rel > worst) {
        worst = rel;
        worst_case = name + " " + s.to_string();
      }
      ++cases;
    }
  }
  return {worst <= kTouchTolerance,
          std::to_string(cases) + " cases, worst relative gap " + fmt("%.4f%%", 100 * worst) +
              " (" + worst_case + ")"};
}

Outcome gradient_masking() {
  Rng rng(77);
  const std::vector<std::string> presets = ClassifierSpec::preset_names();
  struct Net {
    Classifier c, teacher;
    Generator g;
  };
  std::vector<Net> nets;
  for (const std::string& name : presets) {
    const ClassifierSpec spec = ClassifierSpec::preset(name);
    nets.push_back({Classifier::build(spec, 4), Classifier::build(spec, 5),
                    Generator::build(GeneratorSpec::mirror(spec, 16), 6)});
  }
  int violations = 0;
  for (int k = 0; k < kMaskingCases; ++k) {
    Net& net = nets[static_cast<size_t>(uniform_index(rng, static_cast<int64_t>(nets.size())))];
    const int levels = net.c.num_levels();
    const int level = static_cast<int>(uniform_index(rng, levels));
    std::vector<double> f(static_cast<size_t>(levels), 0.0);
    const std::vector<double> tail = random_strategy(levels - level, rng);
    std::copy(tail.begin(), tail.end(), f.begin() + level);
    f[static_cast<size_t>(level)] += 1e-3;  // keep `level` the shallowest
    double s = 0.0;
    for (double x : f) s += x;
    for (double& x : f) x /= s;
    const ReplayStrategy strategy = ReplayStrategy::create(f);

    std::vector<Param*> params = net.c.parameters();
    std::vector<Matrix> before;
    for (const Param* p : params) before.push_back(p->value);
    zero_grad(params);
    ReplayOptions opt;
    opt.batch_size = 32;
    replay_step_generative(net.c, net.teacher, net.g, strategy, opt, rng);
    Adam(AdamConfig{1e-2}).step(params);
    // Shallowest level that actually receives samples after apportionment.
    const std::vector<int> counts = split_batch(opt.batch_size, strategy);
    int fed = levels - 1;
    for (int n = levels - 1; n >= 0; --n) {
      if (counts[static_cast<size_t>(n)] > 0) fed = n;
    }
    const int first = net.c.stage_of(Entry::at_level(fed));
    size_t i = 0;
    for (int stage = 0; stage < net.c.num_stages(); ++stage) {
      for (Param* p : net.c.stage_parameters(stage)) {
        const bool same = (p->value.array() == before[i].array()).all();
        if ((stage < first && !same) || (stage >= first && same)) {
          ++violations;
          std::fprintf(stderr, "masking violation: %s stage %d (first %d) param %s %s\n",
                       net.c.spec().name.c_str(), stage, first, p->name.c_str(),
                       same ? "did not move" : "moved");
        }
        ++i;
      }
    }
  }
  return {violations == 0, std::to_string(kMaskingCases) + " cases, " +
                               std::to_string(violations) + " violations"};
}

ClassifierSpec toy_spec() {
  ClassifierSpec s;
  s.name = "toy";
  s.extractor.in_channels = 2;
  s.extractor.height = 1;
  s.extractor.width = 1;
  s.hidden_widths = {2, 2};
  s.num_classes = 2;
  return s;
}

Outcome taps_and_toy() {
  double worst = 0.0;
  for (const std::string& name : ClassifierSpec::preset_names()) {
    const Classifier c = Classifier::build(ClassifierSpec::preset(name), 8);
    Rng rng(9);
    for (int start = 0; start < kTapInputs; start += 250) {
      const Matrix x = standard_normal(250, c.spec().extractor.image_size(), rng);
      const Classifier::Forward f = c.forward_with_taps(x);
      for (int n = 0; n < c.num_levels(); ++n) {
        const Matrix tail = c.forward_from_level(f.taps.levels[static_cast<size_t>(n)], n);
        worst = std::max(worst, (tail - f.logits).cwiseAbs().maxCoeff());
      }
    }
  }

  Classifier toy = Classifier::build(toy_spec(), 0);
  const std::vector<std::vector<double>> values{
      {0.5, -1.0, 0.25, 0.75}, {0.1, -0.2}, {1.0, 2.0, -1.0, 0.5},
      {0.3, 0.1},              {2.0, -1.0, 1.0, 1.0}, {0.0, 0.5}};
  std::vector<Param*> params = toy.parameters();
  for (size_t i = 0; i < params.size(); ++i) {
    std::copy(values[i].begin(), values[i].end(), params[i]->value.data());
  }
  Matrix x(1, 2);
  x << 1.0, -2.0;
  const Matrix logits = toy.forward_with_taps(x).logits;
  const bool forward_ok =
      std::abs(logits(0, 0) - 1.1) < 1e-12 && std::abs(logits(0, 1) - 0.4) < 1e-12;

  const std::vector<int> labels{1};
  auto loss = [&] { return cross_entropy(toy.forward_with_taps(x).logits, labels).loss; };
  zero_grad(params);
  const ForwardTrace t = toy.trace(x, Entry::image());
  toy.backward(t, cross_entropy(t.logits(), labels).grad);
  double worst_fd = 0.0;
  for (Param* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& v = p->value.data()[k];
      const double saved = v, eps = 1e-6;
      v = saved + eps;
      const double up = loss();
      v = saved - eps;
      const double down = loss();
      v = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p->grad.data()[k];
      const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-10);
      worst_fd = std::max(worst_fd, std::abs(numeric - analytic) / denom);
    }
  }
  return {worst <= kTapTolerance && forward_ok && worst_fd <= kFiniteDiffTolerance,
          fmt("tap/tail max |diff| %.2e, toy logits (%.3f, %.3f)", worst, logits(0, 0),
              logits(0, 1)) +
              fmt(", worst FD rel err %.2e", worst_fd)};
}

Outcome metrics_suite() {
  auto g = [](double mean, double var) {
    GaussianStats s;
    s.mean = Vector::Constant(1, mean);
    s.covariance = Matrix::Constant(1, 1, var);
    return s;
  };
  const double d1 = frechet_distance(g(0, 1), g(1, 4));  // 1 + 1 + 4 - 4
  const double d2 = frechet_distance(g(0, 1), g(3, 1));  // 9
  Rng rng(3);
  const GaussianStats a = GaussianStats::fit(standard_normal(200, 5, rng));
  const GaussianStats b = GaussianStats::fit(standard_normal(200, 5, rng) * 2.0);
  const double self = frechet_distance(a, a);
  const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
  const std::vector<double> acc{0.70, 0.71, 0.72};
  const MeanSem m = average_accuracy_sem(acc);
  const bool ok = std::abs(d1 - 2.0) < kFrechetTolerance &&
                  std::abs(d2 - 9.0) < kFrechetTolerance && std::abs(self) < kFrechetTolerance &&
                  std::abs(ab - ba) < kFrechetTolerance && ab >= 0.0 && m.sem &&
                  std::abs(*m.sem - kSemExpected) < kSemTolerance;
  return {ok, fmt("FD 1-d cases %.6f, %.6f; ", d1, d2) +
                  fmt("FD(a,a) %.2e, |FD(a,b)-FD(b,a)| %.2e; ", self, std::abs(ab - ba)) +
                  fmt("SEM %.6f", m.sem.value_or(-1.0))};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  ExperimentConfig c = load_experiment_config(fs::path(PLR_CONFIG_DIR) / "smoke.toml");
  const fs::path root = fs::temp_directory_path() / "plr_acceptance_determinism";
  fs::remove_all(root);
  c.output_dir = root / "a";
  const ExperimentOutcome first = run_experiment(c, {});
  c.output_dir = root / "b";
  const ExperimentOutcome second = run_experiment(c, {});
  if (first.results.size() != second.results.size() || first.results.empty()) {
    return {false, "result counts differ"};
  }
  int differing = 0;
  for (size_t i = 0; i < first.results.size(); ++i) {
    differing += first.results[i].to_json(false) != second.results[i].to_json(false);
  }
  fs::remove_all(root);
  return {differing == 0, std::to_string(first.results.size()) + " run results compared, " +
                              std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  report(1, "analytic cost", analytic_cost);
  report(2, "gradient touches vs U(S)", touch_agreement);
  report(3, "gradient masking", gradient_masking);
  report(4, "tap/tail and toy oracle", taps_and_toy);
  report(9, "metrics", metrics_suite);
  report(10, "determinism", determinism);
  std::printf("criteria 5-8 need the datasets: see acceptance_data\n");
  return failures == 0 ? 0 : 1;
}
