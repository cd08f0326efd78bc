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

#ifndef PLR_SCENARIO_H_
#define PLR_SCENARIO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plr/arch.h"
#include "plr/metrics.h"
#include "plr/replay.h"
#include "plr/tensor.h"
#include "plr/trainer.h"

namespace plr {

// Raw 8-bit images, channel-major per row.
struct ImageSet {
  int64_t count = 0;
  std::vector<uint8_t> pixels;
  std::vector<int> labels;
};

class Dataset {
 public:
  std::string name;
  int channels = 0;
  int height = 0;
  int width = 0;
  int num_classes = 0;
  ImageSet train;
  ImageSet test;
  // Per-channel statistics of the training split on the [0, 1] scale.
  std::vector<double> channel_mean;
  std::vector<double> channel_std;

  int image_size() const { return channels * height * width; }
  void compute_normalization();

  // Normalized rows for the given indices. Augmentation is a random crop
  // from a 4-pixel zero-padded image plus a horizontal flip with p = 0.5.
  Matrix batch(const ImageSet& set, std::span<const int64_t> indices,
               bool augment, Rng& rng) const;
  std::vector<int64_t> indices_of(const ImageSet& set,
                                  std::span<const int> classes) const;
};

// Environment variable naming the dataset root.
inline constexpr const char* kDataRootEnv = "PLR_DATA_ROOT";
std::filesystem::path default_data_root();

// "cifar10", "cifar100", "fashion_mnist" read from the published binary
// layouts under `root`; "synthetic" is generated in memory. Throws
// MissingDataError (with download instructions) when files are absent.
Dataset load_dataset(std::string_view name, const std::filesystem::path& root);

struct SyntheticOptions {
  int num_classes = 10;
  int train_per_class = 200;
  int test_per_class = 50;
  uint64_t seed = 7;
};
// 1x8x8 images: a fixed random prototype per class plus pixel noise.
Dataset synthetic_dataset(const SyntheticOptions& options = {});

struct TaskStream {
  std::string dataset;
  std::vector<std::vector<int>> tasks;
  uint64_t split_seed = 0;
  bool permuted = false;

  int num_tasks() const { return static_cast<int>(tasks.size()); }
};

// Number of tasks for a dataset's class-incremental preset: cifar10 -> 2,
// cifar100 -> 10, fashion_mnist -> 5, synthetic -> 5.
int preset_task_count(std::string_view dataset);

// Splits classes 0..num_classes-1 into equal consecutive groups; with
// `permute` the class order is shuffled by `seed` first.
TaskStream build_stream(std::string_view dataset, int num_classes, int num_tasks,
                        uint64_t seed = 0, bool permute = false);
TaskStream build_stream(const Dataset& dataset, uint64_t seed = 0,
                        bool permute = false);

TaskData make_task_data(const Dataset& dataset, std::span<const int> classes);

struct TestSet {
  Matrix images;
  std::vector<int> labels;
};
TestSet make_test_set(const Dataset& dataset, std::span<const int> classes);

struct PretrainConfig {
  int num_classes_used = 10;
  bool augmentation = true;
  int epochs = 100;
  int batch_size = 256;
  AdamConfig optimizer{1e-3};
  // Caps steps per epoch; 0 means full passes.
  int max_steps_per_epoch = 0;
};

// Trains the full classifier on classes [0, num_classes_used) of `source` and
// returns the conv parameters only. Throws ConfigError for fewer than two
// classes or more than the source has.
std::vector<Matrix> pretrain_extractor(const PretrainConfig& config,
                                       const ClassifierSpec& spec,
                                       const Dataset& source, uint64_t seed);

enum class FreezeSetup {
  kNone,
  kExtractor,                          // frozen from the start
  kExtractorAfterFirstTask,            // conv layers frozen once task 1 ends
  kExtractorAndDecoderAfterFirstTask,  // plus the generator's decoder
};
std::string to_string(FreezeSetup setup);
FreezeSetup parse_freeze_setup(std::string_view text);

struct MfidConfig {
  bool enabled = false;
  int generated_samples = 10000;
  int reference_steps = 2000;
  int level = 0;  // generator level sampled for the statistics
  std::filesystem::path cache_dir;
};

struct ContinualConfig {
  std::string experiment;
  std::string architecture = "ARCH1";
  ReplayMode mode = ReplayMode::kGenerativeLatent;
  std::optional<ReplayStrategy> strategy;  // latent modes only
  TrainConfig train;
  int latent_dim = 100;
  bool conditional = false;
  std::vector<double> level_weights;
  int buffer_capacity = 512;
  std::optional<std::vector<Matrix>> pretrained_extractor;
  FreezeSetup freeze = FreezeSetup::kNone;
  // Latent modes: once task 1 ends, freeze the extractor and hidden layers
  // 0..s (s = shallowest level the strategy injects at). Replay never
  // reaches those layers, so left trainable they drift away from the
  // features being replayed.
  bool freeze_upstream_of_replay = true;
  MfidConfig mfid;
  bool instrument = false;
  uint64_t seed = 0;
  std::string config_hash;
  // Final classifier (and generator) parameters are written here when set.
  std::filesystem::path checkpoint_path;
};

// Runs every task of the stream and evaluates after the last one.
RunResult run_continual(const Dataset& dataset, const TaskStream& stream,
                        const ContinualConfig& config);

// The four custom-pretraining alternatives compared on FashionMNIST:
// "GR", "IR_freeze_enc", "GR_freeze_enc_dec", "IR_naive".
std::vector<std::string> freezing_setup_ids();
// Rewrites mode, strategy and freezing in `base` for the setup and runs it.
RunResult run_fig4_setup(std::string_view setup_id, const Dataset& dataset,
                         const TaskStream& stream, ContinualConfig base);

// Reference classifier trained on the union of all tasks, for modified FID.
// Cached under cache_dir keyed by (dataset, architecture, seed) when set.
Classifier reference_model(const Dataset& dataset, const ClassifierSpec& spec,
                           const std::optional<std::vector<Matrix>>& extractor,
                           const MfidConfig& config, const TrainConfig& train,
                           uint64_t seed);

}  // namespace plr

#endif  // PLR_SCENARIO_H_
