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

// plr: run experiments, inspect replay costs, emit tables and figures.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 missing dataset files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "plr/arch.h"
#include "plr/cost.h"
#include "plr/error.h"
#include "plr/harness.h"
#include "plr/replay.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingData = 3;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw plr::IoError("cannot write " + path.string());
  out << text;
}

int cmd_cost(const std::string& arch, const std::vector<std::string>& strategies,
             bool as_json, bool biases) {
  const plr::ClassifierSpec spec = plr::ClassifierSpec::preset(arch);
  const plr::CostModel model = plr::blocks_from_spec(spec, biases);
  nlohmann::json rows = nlohmann::json::array();
  for (const std::string& text : strategies) {
    const plr::ReplayStrategy s = plr::ReplayStrategy::parse(text, spec.num_levels());
    const double u = plr::updates(model, s);
    const double r = plr::relative_cost(model, s);
    if (as_json) {
      rows.push_back({{"architecture", spec.name},
                      {"strategy", s.to_string()},
                      {"label", s.label()},
                      {"updates", u},
                      {"relative_cost", r}});
    } else {
      std::printf("%-6s %-24s U=%-12.0f R=%s\n", spec.name.c_str(), s.label().c_str(), u,
                  plr::format_percent(r).c_str());
    }
  }
  if (as_json) std::cout << rows.dump(2) << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, bool force, const std::string& data_root) {
  const plr::ExperimentConfig config = plr::load_experiment_config(config_path);
  plr::RunOptions options;
  options.force = force;
  options.data_root = data_root;
  const plr::ExperimentOutcome outcome = plr::run_experiment(config, options);
  if (outcome.reused) {
    std::printf("%s: already complete, nothing to do (use --force to recompute)\n",
                outcome.run_dir.string().c_str());
  }
  for (const plr::RunResult& r : outcome.results) {
    std::printf("%-6s %-24s seed %-4llu %s\n", r.architecture.c_str(),
                (r.strategy_label.empty() ? r.mode : r.strategy_label).c_str(),
                static_cast<unsigned long long>(r.seed),
                plr::format_percent(r.average_accuracy).c_str());
  }
  std::printf("%s\n", outcome.run_dir.string().c_str());
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const plr::ExperimentConfig config = plr::load_experiment_config(config_path);
  std::printf("ok: %zu run(s) -> %s\n", plr::expand_cells(config).size(),
              plr::run_directory(config).string().c_str());
  return 0;
}

int cmd_table(const std::string& run_dir, const std::string& id) {
  const plr::TableId table_id = plr::parse_table_id(id);
  const std::vector<plr::RunResult> results = plr::load_results(run_dir);
  const plr::Table table = plr::emit_table(results, table_id);
  std::cout << table.text();
  write_file(std::filesystem::path(run_dir) / ("table_" + id + ".txt"), table.text());
  write_file(std::filesystem::path(run_dir) / ("table_" + id + ".csv"), table.csv());
  return 0;
}

int cmd_plot(const std::string& run_dir, const std::string& id, const std::string& out) {
  const plr::FigureId figure_id = plr::parse_figure_id(id);
  const std::vector<plr::RunResult> results = plr::load_results(run_dir);
  const plr::Figure figure = plr::emit_plot(results, figure_id);
  const std::filesystem::path path =
      out.empty() ? std::filesystem::path(run_dir) / plr::figure_file_name(figure_id)
                  : std::filesystem::path(out);
  write_file(path, figure.svg);
  std::printf("%s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive latent replay experiments"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string config_path, data_root;
  bool force = false;
  CLI::App* run = app.add_subcommand("run", "Run every cell of an experiment config");
  run->add_option("config", config_path, "TOML experiment file")->required();
  run->add_flag("--force", force, "Recompute even when results exist");
  run->add_option("--data-root", data_root,
                  std::string("Dataset directory (default $") + plr::kDataRootEnv + ")");

  CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config_path, "TOML experiment file")->required();

  std::string arch;
  std::vector<std::string> strategies;
  bool as_json = false, biases = false;
  CLI::App* cost = app.add_subcommand("cost", "Replay update count U(S) and relative cost R");
  cost->add_option("arch", arch, "Architecture preset")->required();
  // Strategies are taken verbatim from the leftover arguments; CLI11 would
  // split "[0.7,0.3]" as a list literal.
  cost->allow_extras();
  cost->add_flag("--json", as_json, "JSON output");
  cost->add_flag("--biases", biases, "Count bias parameters too");

  std::string run_dir, id, out;
  CLI::App* table = app.add_subcommand("table", "Aggregate a run directory into a table");
  table->add_option("run_dir", run_dir)->required();
  table->add_option("--id", id, "T1 or T2")->required();

  CLI::App* plot = app.add_subcommand("plot", "Write an SVG figure for a run directory");
  plot->add_option("run_dir", run_dir)->required();
  plot->add_option("--id", id, "F3, F4 or cost-vs-acc")->required();
  plot->add_option("-o,--out", out, "Output path (default <run_dir>/<id>.svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run) return cmd_run(config_path, force, data_root);
    if (*validate) return cmd_validate(config_path);
    if (*cost) {
      strategies = cost->remaining();
      if (strategies.empty()) {
        std::fprintf(stderr, "error: cost needs at least one strategy\n");
        return kExitConfig;
      }
      return cmd_cost(arch, strategies, as_json, biases);
    }
    if (*table) return cmd_table(run_dir, id);
    if (*plot) return cmd_plot(run_dir, id, out);
  } catch (const plr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case plr::ErrorCode::kConfig:
        return kExitConfig;
      case plr::ErrorCode::kMissingData:
        return kExitMissingData;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
