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

// Acceptance checks that train on the real datasets under $PLR_DATA_ROOT.
// Criteria whose files are absent print BLOCKED; when nothing could run the
// exit status is 77 so ctest reports a skip.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "plr/cost.h"
#include "plr/error.h"
#include "plr/harness.h"
#include "plr/metrics.h"
#include "plr/replay.h"

namespace {

using namespace plr;
namespace fs = std::filesystem;

// Published ARCH1 IR accuracy on split-CIFAR10 with a 512-entry buffer.
constexpr double kTable1IrAccuracy = 0.712;
constexpr double kTable1IrTolerance = 0.03;
constexpr double kTable1StrategyGap = 0.02;
constexpr double kTable1MaxRelativeCost = 0.72;
constexpr double kTable2MinGain = 0.02;
constexpr double kFig4NaiveGap = 0.10;
constexpr double kFig4FrozenGap = 0.05;
constexpr double kFig3MaxInversion = 0.01;
constexpr int kFig3MaxInversions = 1;

struct Outcome {
  enum Kind { kPass, kFail, kBlocked } kind = kFail;
  std::string detail;
};

int failed = 0, passed = 0, blocked = 0;

fs::path runs_root() {
  const char* env = std::getenv("PLR_ACCEPTANCE_RUNS");
  return env ? fs::path(env) : fs::path("acceptance_runs");
}

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMissingData) {
      std::string msg = e.what();
      o = {Outcome::kBlocked, msg.substr(0, msg.find('\n'))};
    } else {
      o = {Outcome::kFail, std::string("error: ") + e.what()};
    }
  } catch (const std::exception& e) {
    o = {Outcome::kFail, std::string("exception: ") + e.what()};
  }
  const char* tag = o.kind == Outcome::kPass ? "PASS" : o.kind == Outcome::kFail ? "FAIL"
                                                                                 : "BLOCKED";
  std::printf("[%s] %d %s: %s\n", tag, id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  (o.kind == Outcome::kPass ? passed : o.kind == Outcome::kFail ? failed : blocked)++;
}

std::vector<RunResult> run(const std::string& config_name) {
  ExperimentConfig c = load_experiment_config(fs::path(PLR_CONFIG_DIR) / config_name);
  c.output_dir = runs_root();
  return run_experiment(c, {}).results;
}

std::string pct(double v) { return format_percent(v); }

// Mean accuracy per (architecture, canonical strategy).
std::map<std::string, std::vector<double>> accuracy_by_strategy(
    const std::vector<RunResult>& results, const std::string& arch) {
  std::map<std::string, std::vector<double>> out;
  const int levels = ClassifierSpec::preset(arch).num_levels();
  for (const RunResult& r : results) {
    if (r.architecture != arch) continue;
    out[ReplayStrategy::parse(r.strategy, levels).to_string()].push_back(r.average_accuracy);
  }
  return out;
}

double mean(const std::vector<double>& v) { return average_accuracy_sem(v).mean; }

Outcome table1() {
  const std::vector<RunResult> results = run("table1.toml");
  const auto acc = accuracy_by_strategy(results, "ARCH1");
  const std::string ir = ReplayStrategy::internal_replay(2).to_string();
  if (!acc.contains(ir)) return {Outcome::kFail, "no ARCH1 IR runs"};
  const double ir_mean = mean(acc.at(ir));
  bool ok = std::abs(ir_mean - kTable1IrAccuracy) <= kTable1IrTolerance;
  std::string detail = "IR " + pct(ir_mean);
  const CostModel model = blocks_from_spec(ClassifierSpec::preset("ARCH1"));
  for (const auto& [s, v] : acc) {
    if (s == ir) continue;
    const double r = relative_cost(model, ReplayStrategy::parse(s, 2));
    const double m = mean(v);
    ok &= std::abs(m - ir_mean) <= kTable1StrategyGap && r <= kTable1MaxRelativeCost;
    detail += ", " + s + " " + pct(m) + " (R " + pct(r) + ")";
  }
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

Outcome table2() {
  const std::vector<RunResult> results = run("table2.toml");
  const std::string ir = ReplayStrategy::internal_replay(2).to_string();
  std::map<std::string, std::vector<double>> acc, fid;
  for (const RunResult& r : results) {
    if (r.architecture != "ARCH1") continue;
    const std::string s = ReplayStrategy::parse(r.strategy, 2).to_string();
    acc[s].push_back(r.average_accuracy);
    if (r.mfid) fid[s].push_back(*r.mfid);
  }
  if (!acc.contains(ir) || !fid.contains(ir)) return {Outcome::kFail, "no ARCH1 IR runs"};
  const double ir_acc = mean(acc.at(ir)), ir_fid = mean(fid.at(ir));
  bool ok = acc.size() > 1;
  std::string detail = "IR " + pct(ir_acc) + " mFID " + std::to_string(ir_fid);
  for (const auto& [s, v] : acc) {
    if (s == ir) continue;
    const double m = mean(v);
    const double f = fid.contains(s) ? mean(fid.at(s)) : 1e300;
    ok &= m - ir_acc >= kTable2MinGain && f < ir_fid;
    detail += ", " + s + " " + pct(m) + " mFID " + std::to_string(f);
  }
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

Outcome fig4() {
  const std::vector<RunResult> results = run("fig4.toml");
  std::map<std::string, std::vector<double>> acc;
  for (const RunResult& r : results) acc[r.tags.at("setup")].push_back(r.average_accuracy);
  for (const std::string& id : freezing_setup_ids()) {
    if (!acc.contains(id)) return {Outcome::kFail, "missing setup " + id};
  }
  const double gr = mean(acc.at("GR")), naive = mean(acc.at("IR_naive"));
  const double frozen = mean(acc.at("IR_freeze_enc"));
  const bool ok = gr - naive >= kFig4NaiveGap && std::abs(frozen - gr) <= kFig4FrozenGap;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "GR " + pct(gr) + ", IR_freeze_enc " + pct(frozen) + ", GR_freeze_enc_dec " +
              pct(mean(acc.at("GR_freeze_enc_dec"))) + ", IR_naive " + pct(naive)};
}

Outcome fig3() {
  const std::vector<RunResult> results = run("fig3.toml");
  std::map<std::string, std::map<int, std::vector<double>>> curves;
  for (const RunResult& r : results) {
    curves[r.tags.at("pretrain_augmentation")][std::stoi(r.tags.at("pretrain_classes"))]
        .push_back(r.average_accuracy);
  }
  bool ok = curves.contains("true") && curves.contains("false");
  std::string detail;
  for (const auto& [aug, points] : curves) {
    int inversions = 0;
    double previous = -1.0;
    detail += (detail.empty() ? "" : "; ") + std::string(aug == "true" ? "aug" : "no aug");
    for (const auto& [k, v] : points) {
      const double m = mean(v);
      if (previous >= 0.0 && m < previous) {
        ++inversions;
        ok &= previous - m <= kFig3MaxInversion;
      }
      previous = m;
      detail += " " + std::to_string(k) + ":" + pct(m);
    }
    ok &= inversions <= kFig3MaxInversions;
  }
  if (ok) {
    const auto& a = curves.at("true");
    const auto& n = curves.at("false");
    ok = a.contains(10) && n.contains(10) && mean(a.at(10)) >= mean(n.at(10));
  }
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

}  // namespace

int main() {
  std::printf("data root: %s\n", default_data_root().string().c_str());
  report(5, "table 1 buffer replay on split-CIFAR10", table1);
  report(6, "table 2 generative replay on split-CIFAR100", table2);
  report(7, "freezing setups on split-FashionMNIST", fig4);
  report(8, "pretraining ablation", fig3);
  if (failed > 0) return 1;
  if (passed == 0) return 77;
  return 0;
}
