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

#ifndef PLR_HARNESS_H_
#define PLR_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plr/metrics.h"
#include "plr/scenario.h"
#include "plr/trainer.h"

namespace plr {

enum class ExperimentKind {
  kContinual,      // grid of (architecture, strategy) x seeds
  kPretrainSweep,  // IR after pretraining on k classes, with/without augmentation
  kFreezeSetups,   // the four freezing alternatives
};
std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);

struct GridEntry {
  std::string architecture;
  // Strategy texts as accepted by ReplayStrategy::parse. Ignored (one cell)
  // for modes without latent replay.
  std::vector<std::string> strategies;
};

struct PretrainSection {
  bool enabled = false;
  std::string source = "cifar10";
  PretrainConfig config;
  // Sweep axes for kPretrainSweep.
  std::vector<int> class_counts;
  std::vector<bool> augmentation_options;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::kContinual;
  std::string dataset;
  std::filesystem::path output_dir = "runs";
  std::vector<uint64_t> seeds;
  std::string mode = "generative-plr";
  std::vector<GridEntry> grid;
  TrainConfig train;
  int latent_dim = 100;
  bool conditional = false;
  std::vector<double> level_weights;
  int buffer_capacity = 512;
  PretrainSection pretrain;
  std::string freeze = "none";
  bool freeze_upstream_of_replay = true;
  std::vector<std::string> freeze_setups;
  MfidConfig mfid;
  bool instrument = false;
  uint64_t split_seed = 0;
  bool permute_classes = false;
  int num_tasks = 0;  // 0 = dataset preset
  SyntheticOptions synthetic;
};

// Parses a TOML experiment file. Every problem found (syntax, unknown keys,
// wrong types, failed validation) is collected and thrown as one
// ConfigError, one problem per line.
ExperimentConfig parse_experiment_config(std::string_view text,
                                         std::string_view source_name = "<config>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Semantic checks; empty when the config is runnable.
std::vector<std::string> validate(const ExperimentConfig& config);

// Fully defaulted TOML snapshot (everything except output_dir). Its SHA-256
// is the config hash.
std::string resolved_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
std::string sha256_hex(std::string_view data);
// output_dir / "<name>-<first 12 hex digits of the hash>"
std::filesystem::path run_directory(const ExperimentConfig& config);

struct RunCell {
  std::string id;  // file stem for the run's artifacts
  std::string architecture;
  std::optional<std::string> strategy;
  uint64_t seed = 0;
  int pretrain_classes = 0;
  bool pretrain_augmentation = false;
  std::string setup;  // freezing setup id
};
std::vector<RunCell> expand_cells(const ExperimentConfig& config);

struct RunOptions {
  bool force = false;
  std::filesystem::path data_root;
};

struct ExperimentOutcome {
  std::filesystem::path run_dir;
  std::vector<RunResult> results;
  bool reused = false;  // every cell was already on disk
};

// Layout of run_dir:
//   config.toml            resolved config
//   runs/<cell>.json       one RunResult per cell
//   checkpoints/<cell>.ckpt final classifier (+ generator) parameters
//   checkpoints/extractor-*.ckpt pretrained conv weights
//   summary.csv
//   run.log
//   COMPLETE
// Throws ConfigError before loading data when validation fails.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RunOptions& options);

// Reads runs/*.json sorted by file name.
std::vector<RunResult> load_results(const std::filesystem::path& run_dir);
std::string summary_csv(std::span<const RunResult> results);

enum class TableId { kT1, kT2 };
TableId parse_table_id(std::string_view text);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> warnings;

  std::string text() const;
  std::string csv() const;
};

// Rows per architecture present: IR then the three standard strategies,
// followed by any other strategies found. Absent cells print "MISSING".
Table emit_table(std::span<const RunResult> results, TableId id);

enum class FigureId { kF3, kF4, kCostVsAccuracy };
FigureId parse_figure_id(std::string_view text);
std::string figure_file_name(FigureId id);

struct Figure {
  std::string svg;
  std::vector<std::string> warnings;
};
Figure emit_plot(std::span<const RunResult> results, FigureId id);

}  // namespace plr

#endif  // PLR_HARNESS_H_
