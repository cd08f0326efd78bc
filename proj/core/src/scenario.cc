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

#include "plr/scenario.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <utility>

#include <spdlog/spdlog.h>

#include "plr/checkpoint.h"
#include "plr/cost.h"
#include "plr/error.h"
#include "plr/random.h"

namespace plr {
namespace fs = std::filesystem;

namespace {

std::vector<uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void require_files(const std::vector<fs::path>& files, std::string_view dataset,
                   const std::string& instructions) {
  std::string missing;
  for (const fs::path& f : files) {
    if (!fs::exists(f)) missing += "\n  " + f.string();
  }
  if (!missing.empty()) {
    throw MissingDataError(std::string(dataset) + " files not found:" + missing +
                           "\n" + instructions);
  }
}

// CIFAR binary records: `label_bytes` leading bytes (the last one is the
// label used), then 3072 channel-major pixels.
void append_cifar(const fs::path& path, int label_bytes, ImageSet& set) {
  const std::vector<uint8_t> raw = read_file(path);
  const size_t record = static_cast<size_t>(label_bytes) + 3072;
  if (raw.size() % record != 0) {
    throw IoError(path.string() + " is not a CIFAR binary batch");
  }
  const size_t n = raw.size() / record;
  for (size_t i = 0; i < n; ++i) {
    const uint8_t* r = raw.data() + i * record;
    set.labels.push_back(r[label_bytes - 1]);
    set.pixels.insert(set.pixels.end(), r + label_bytes, r + record);
  }
  set.count += static_cast<int64_t>(n);
}

uint32_t read_be32(const uint8_t* p) {
  return (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) | (uint32_t{p[2]} << 8) |
         uint32_t{p[3]};
}

void read_idx(const fs::path& images_path, const fs::path& labels_path,
              ImageSet& set) {
  const std::vector<uint8_t> images = read_file(images_path);
  const std::vector<uint8_t> labels = read_file(labels_path);
  if (images.size() < 16 || read_be32(images.data()) != 0x00000803) {
    throw IoError(images_path.string() + " is not an IDX image file");
  }
  if (labels.size() < 8 || read_be32(labels.data()) != 0x00000801) {
    throw IoError(labels_path.string() + " is not an IDX label file");
  }
  const uint32_t n = read_be32(images.data() + 4);
  const uint32_t rows = read_be32(images.data() + 8);
  const uint32_t cols = read_be32(images.data() + 12);
  if (read_be32(labels.data() + 4) != n || rows != 28 || cols != 28 ||
      images.size() != 16 + size_t{n} * rows * cols || labels.size() != 8 + size_t{n}) {
    throw IoError("IDX files " + images_path.string() + " are inconsistent");
  }
  set.count = n;
  set.pixels.assign(images.begin() + 16, images.end());
  set.labels.assign(labels.begin() + 8, labels.end());
}

Dataset load_cifar10(const fs::path& root) {
  const fs::path dir = root / "cifar-10-batches-bin";
  std::vector<fs::path> files;
  for (int i = 1; i <= 5; ++i) {
    files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  }
  files.push_back(dir / "test_batch.bin");
  require_files(files, "cifar10",
                "Download https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz "
                "and extract it into " + root.string());
  Dataset d;
  d.name = "cifar10";
  d.channels = 3;
  d.height = d.width = 32;
  d.num_classes = 10;
  for (int i = 0; i < 5; ++i) append_cifar(files[static_cast<size_t>(i)], 1, d.train);
  append_cifar(files.back(), 1, d.test);
  return d;
}

Dataset load_cifar100(const fs::path& root) {
  const fs::path dir = root / "cifar-100-binary";
  const std::vector<fs::path> files{dir / "train.bin", dir / "test.bin"};
  require_files(files, "cifar100",
                "Download https://www.cs.toronto.edu/~kriz/cifar-100-binary.tar.gz "
                "and extract it into " + root.string());
  Dataset d;
  d.name = "cifar100";
  d.channels = 3;
  d.height = d.width = 32;
  d.num_classes = 100;
  append_cifar(files[0], 2, d.train);
  append_cifar(files[1], 2, d.test);
  return d;
}

Dataset load_fashion_mnist(const fs::path& root) {
  const fs::path dir = root / "fashion-mnist";
  const std::vector<fs::path> files{
      dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
      dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
  require_files(files, "fashion_mnist",
                "Download the four *-ubyte.gz files from "
                "https://github.com/zalandoresearch/fashion-mnist (data/fashion), "
                "gunzip them and place them in " + dir.string());
  Dataset d;
  d.name = "fashion_mnist";
  d.channels = 1;
  d.height = d.width = 28;
  d.num_classes = 10;
  read_idx(files[0], files[1], d.train);
  read_idx(files[2], files[3], d.test);
  return d;
}

}  // namespace

void Dataset::compute_normalization() {
  channel_mean.assign(static_cast<size_t>(channels), 0.0);
  channel_std.assign(static_cast<size_t>(channels), 1.0);
  const int64_t plane = static_cast<int64_t>(height) * width;
  if (train.count == 0) return;
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int64_t i = 0; i < train.count; ++i) {
      const uint8_t* p = train.pixels.data() + i * image_size() + c * plane;
      for (int64_t k = 0; k < plane; ++k) {
        const double v = p[k] / 255.0;
        sum += v;
        sq += v * v;
      }
    }
    const double n = static_cast<double>(train.count * plane);
    const double mean = sum / n;
    channel_mean[static_cast<size_t>(c)] = mean;
    channel_std[static_cast<size_t>(c)] =
        std::max(1e-6, std::sqrt(std::max(0.0, sq / n - mean * mean)));
  }
}

Matrix Dataset::batch(const ImageSet& set, std::span<const int64_t> indices,
                      bool augment, Rng& rng) const {
  const int size = image_size();
  Matrix out(static_cast<Eigen::Index>(indices.size()), size);
  constexpr int kPad = 4;
  for (size_t r = 0; r < indices.size(); ++r) {
    const int64_t idx = indices[r];
    if (idx < 0 || idx >= set.count) throw InputError("sample index out of range");
    const uint8_t* src = set.pixels.data() + idx * size;
    int dy = 0, dx = 0;
    bool flip = false;
    if (augment) {
      dy = static_cast<int>(uniform_index(rng, 2 * kPad + 1)) - kPad;
      dx = static_cast<int>(uniform_index(rng, 2 * kPad + 1)) - kPad;
      flip = uniform01(rng) < 0.5;
    }
    double* dst = out.row(static_cast<Eigen::Index>(r)).data();
    for (int c = 0; c < channels; ++c) {
      const double mean = channel_mean[static_cast<size_t>(c)];
      const double inv_std = 1.0 / channel_std[static_cast<size_t>(c)];
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const int sx0 = flip ? width - 1 - x : x;
          const int sy = y + dy;
          const int sx = sx0 + dx;
          double v = 0.0;
          if (sy >= 0 && sy < height && sx >= 0 && sx < width) {
            v = src[(c * height + sy) * width + sx] / 255.0;
          }
          dst[(c * height + y) * width + x] = (v - mean) * inv_std;
        }
      }
    }
  }
  return out;
}

std::vector<int64_t> Dataset::indices_of(const ImageSet& set,
                                         std::span<const int> classes) const {
  std::vector<bool> wanted(static_cast<size_t>(num_classes), false);
  for (int c : classes) {
    if (c < 0 || c >= num_classes) throw InputError("class id out of range");
    wanted[static_cast<size_t>(c)] = true;
  }
  std::vector<int64_t> out;
  for (int64_t i = 0; i < set.count; ++i) {
    if (wanted[static_cast<size_t>(set.labels[static_cast<size_t>(i)])]) out.push_back(i);
  }
  return out;
}

fs::path default_data_root() {
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return "data";
}

Dataset load_dataset(std::string_view name, const fs::path& root) {
  Dataset d;
  if (name == "cifar10") {
    d = load_cifar10(root);
  } else if (name == "cifar100") {
    d = load_cifar100(root);
  } else if (name == "fashion_mnist") {
    d = load_fashion_mnist(root);
  } else if (name == "synthetic") {
    return synthetic_dataset();
  } else {
    throw ConfigError("unknown dataset '" + std::string(name) +
                      "' (expected cifar10, cifar100, fashion_mnist or synthetic)");
  }
  d.compute_normalization();
  return d;
}

Dataset synthetic_dataset(const SyntheticOptions& options) {
  if (options.num_classes <= 0 || options.train_per_class <= 0 ||
      options.test_per_class <= 0) {
    throw ConfigError("synthetic dataset sizes must be positive");
  }
  Dataset d;
  d.name = "synthetic";
  d.channels = 1;
  d.height = d.width = 8;
  d.num_classes = options.num_classes;
  Rng rng(options.seed);
  const int size = d.image_size();
  std::vector<std::vector<double>> prototypes;
  for (int c = 0; c < options.num_classes; ++c) {
    std::vector<double> p(static_cast<size_t>(size));
    for (double& v : p) v = uniform(rng, 40.0, 215.0);
    prototypes.push_back(std::move(p));
  }
  auto fill = [&](ImageSet& set, int per_class) {
    for (int i = 0; i < per_class; ++i) {
      for (int c = 0; c < options.num_classes; ++c) {
        const Matrix noise = standard_normal(1, size, rng);
        for (int k = 0; k < size; ++k) {
          const double v = prototypes[static_cast<size_t>(c)][static_cast<size_t>(k)] +
                           45.0 * noise(0, k);
          set.pixels.push_back(static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
        }
        set.labels.push_back(c);
        ++set.count;
      }
    }
  };
  fill(d.train, options.train_per_class);
  fill(d.test, options.test_per_class);
  d.compute_normalization();
  return d;
}

int preset_task_count(std::string_view dataset) {
  if (dataset == "cifar10") return 2;
  if (dataset == "cifar100") return 10;
  if (dataset == "fashion_mnist") return 5;
  if (dataset == "synthetic") return 5;
  throw ConfigError("no task preset for dataset '" + std::string(dataset) + "'");
}

TaskStream build_stream(std::string_view dataset, int num_classes, int num_tasks,
                        uint64_t seed, bool permute) {
  if (num_tasks <= 0 || num_classes <= 0 || num_classes % num_tasks != 0) {
    throw ConfigError(std::to_string(num_classes) + " classes cannot be split into " +
                      std::to_string(num_tasks) + " equal tasks");
  }
  std::vector<int> order(static_cast<size_t>(num_classes));
  std::iota(order.begin(), order.end(), 0);
  if (permute) {
    Rng rng(seed);
    shuffle(order, rng);
  }
  TaskStream s;
  s.dataset = std::string(dataset);
  s.split_seed = seed;
  s.permuted = permute;
  const int per_task = num_classes / num_tasks;
  for (int t = 0; t < num_tasks; ++t) {
    std::vector<int> classes(order.begin() + t * per_task,
                             order.begin() + (t + 1) * per_task);
    std::sort(classes.begin(), classes.end());
    s.tasks.push_back(std::move(classes));
  }
  return s;
}

TaskStream build_stream(const Dataset& dataset, uint64_t seed, bool permute) {
  return build_stream(dataset.name, dataset.num_classes,
                      preset_task_count(dataset.name), seed, permute);
}

TaskData make_task_data(const Dataset& dataset, std::span<const int> classes) {
  auto indices = std::make_shared<std::vector<int64_t>>(
      dataset.indices_of(dataset.train, classes));
  TaskData task;
  task.size = static_cast<int64_t>(indices->size());
  task.classes.assign(classes.begin(), classes.end());
  task.fetch = [&dataset, indices](std::span<const int64_t> local, bool augment,
                                   Rng& rng, Matrix& images,
                                   std::vector<int>& labels) {
    std::vector<int64_t> global;
    global.reserve(local.size());
    labels.clear();
    for (int64_t i : local) {
      const int64_t g = (*indices)[static_cast<size_t>(i)];
      global.push_back(g);
      labels.push_back(dataset.train.labels[static_cast<size_t>(g)]);
    }
    images = dataset.batch(dataset.train, global, augment, rng);
  };
  return task;
}

TestSet make_test_set(const Dataset& dataset, std::span<const int> classes) {
  const std::vector<int64_t> idx = dataset.indices_of(dataset.test, classes);
  Rng unused(0);
  TestSet t;
  t.images = dataset.batch(dataset.test, idx, false, unused);
  for (int64_t i : idx) t.labels.push_back(dataset.test.labels[static_cast<size_t>(i)]);
  return t;
}

std::vector<Matrix> pretrain_extractor(const PretrainConfig& config,
                                       const ClassifierSpec& spec,
                                       const Dataset& source, uint64_t seed) {
  if (config.num_classes_used < 2) {
    throw ConfigError("pretraining needs at least two classes for a classification loss");
  }
  if (config.num_classes_used > source.num_classes) {
    throw ConfigError("pretraining asks for " + std::to_string(config.num_classes_used) +
                      " classes but " + source.name + " has " +
                      std::to_string(source.num_classes));
  }
  if (config.epochs <= 0 || config.batch_size <= 0) {
    throw ConfigError("pretraining epochs and batch size must be positive");
  }
  if (source.image_size() != spec.extractor.image_size()) {
    throw ConfigError("pretraining source images do not fit " + spec.name);
  }
  std::vector<int> classes(static_cast<size_t>(config.num_classes_used));
  std::iota(classes.begin(), classes.end(), 0);
  const TaskData data = make_task_data(source, classes);

  Classifier model = Classifier::build(spec, derive_seed(seed, 11));
  const Adam optimizer(config.optimizer);
  const std::vector<Param*> params = model.parameters();
  Rng rng(derive_seed(seed, 12));
  std::vector<int64_t> order(static_cast<size_t>(data.size));
  std::iota(order.begin(), order.end(), 0);
  int64_t steps = (data.size + config.batch_size - 1) / config.batch_size;
  if (config.max_steps_per_epoch > 0) {
    steps = std::min<int64_t>(steps, config.max_steps_per_epoch);
  }
  Matrix images;
  std::vector<int> labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    for (int64_t s = 0; s < steps; ++s) {
      const size_t begin = static_cast<size_t>(s * config.batch_size);
      const size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      data.fetch(std::span(order).subspan(begin, end - begin), config.augmentation, rng,
                 images, labels);
      zero_grad(params);
      const ForwardTrace trace = model.trace(images, Entry::image());
      model.backward(trace, cross_entropy(trace.logits(), labels).grad);
      optimizer.step(params);
    }
    spdlog::debug("pretraining epoch {} done", epoch);
  }
  return model.extractor_state();
}

std::string to_string(FreezeSetup setup) {
  switch (setup) {
    case FreezeSetup::kNone:
      return "none";
    case FreezeSetup::kExtractor:
      return "extractor";
    case FreezeSetup::kExtractorAfterFirstTask:
      return "extractor-after-first-task";
    case FreezeSetup::kExtractorAndDecoderAfterFirstTask:
      return "extractor-and-decoder-after-first-task";
  }
  return "none";
}

FreezeSetup parse_freeze_setup(std::string_view text) {
  for (FreezeSetup s : {FreezeSetup::kNone, FreezeSetup::kExtractor,
                        FreezeSetup::kExtractorAfterFirstTask,
                        FreezeSetup::kExtractorAndDecoderAfterFirstTask}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown freeze setup '" + std::string(text) + "'");
}

Classifier reference_model(const Dataset& dataset, const ClassifierSpec& spec,
                           const std::optional<std::vector<Matrix>>& extractor,
                           const MfidConfig& config, const TrainConfig& train,
                           uint64_t seed) {
  Classifier model = Classifier::build(spec, derive_seed(seed, 21));
  fs::path cache;
  if (!config.cache_dir.empty()) {
    cache = config.cache_dir /
            (dataset.name + "-" + spec.name + "-" + std::to_string(seed) + ".ckpt");
    if (fs::exists(cache)) {
      const std::vector<NamedTensor> tensors = load_tensors(cache);
      restore(model.parameters(), tensors);
      return model;
    }
  }
  if (extractor.has_value()) model.load_extractor_state(*extractor);
  std::vector<int> all(static_cast<size_t>(dataset.num_classes));
  std::iota(all.begin(), all.end(), 0);
  const TaskData data = make_task_data(dataset, all);
  TrainConfig cfg = train;
  cfg.steps_per_task = config.reference_steps;
  Learner learner = Learner::create(std::move(model), ReplayMode::kNone,
                                    ReplayStrategy::internal_replay(spec.num_levels()),
                                    cfg);
  Rng rng(derive_seed(seed, 22));
  train_task(learner, data, cfg, rng);
  if (!cache.empty()) {
    fs::create_directories(cache.parent_path());
    const std::vector<const Param*> params =
        std::as_const(learner.classifier).parameters();
    save_tensors(cache, snapshot(params));
  }
  return std::move(learner.classifier);
}

RunResult run_continual(const Dataset& dataset, const TaskStream& stream,
                        const ContinualConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const ClassifierSpec spec = ClassifierSpec::preset(config.architecture);
  if (spec.extractor.image_size() != dataset.image_size() ||
      spec.extractor.in_channels != dataset.channels) {
    throw ConfigError(spec.name + " does not take " + dataset.name + " images");
  }
  if (spec.num_classes < dataset.num_classes) {
    throw ConfigError(spec.name + " has fewer outputs than " + dataset.name +
                      " has classes");
  }
  if (stream.tasks.empty()) throw ConfigError("task stream is empty");

  Classifier classifier = Classifier::build(spec, derive_seed(config.seed, 1));
  if (config.pretrained_extractor.has_value()) {
    classifier.load_extractor_state(*config.pretrained_extractor);
  }
  if (config.freeze == FreezeSetup::kExtractor) {
    classifier.freeze(FreezeScope::kExtractor);
  }

  const bool latent = config.mode == ReplayMode::kGenerativeLatent ||
                      config.mode == ReplayMode::kBufferLatent;
  if (latent && !config.strategy.has_value()) {
    throw ConfigError(to_string(config.mode) + " needs a strategy");
  }
  const ReplayStrategy strategy =
      config.strategy.value_or(ReplayStrategy::internal_replay(spec.num_levels()));

  std::optional<Generator> generator;
  if (config.mode == ReplayMode::kGenerativeLatent ||
      config.mode == ReplayMode::kGenerativeImage) {
    GeneratorSpec gs =
        config.mode == ReplayMode::kGenerativeLatent
            ? GeneratorSpec::mirror(spec, config.latent_dim, config.conditional)
            : GeneratorSpec::image_space(spec, config.latent_dim, config.conditional);
    if (config.mode == ReplayMode::kGenerativeLatent && !config.level_weights.empty()) {
      gs.level_weights = config.level_weights;
    }
    generator = Generator::build(gs, derive_seed(config.seed, 3));
  }

  Learner learner = Learner::create(std::move(classifier), config.mode, strategy,
                                    config.train, std::move(generator),
                                    config.buffer_capacity);
  if (config.instrument) learner.enable_instrumentation();

  Rng rng(derive_seed(config.seed, 2));
  for (int t = 0; t < stream.num_tasks(); ++t) {
    const TaskData data = make_task_data(dataset, stream.tasks[static_cast<size_t>(t)]);
    train_task(learner, data, config.train, rng);
    if (t == 0) {
      if (latent && config.freeze_upstream_of_replay) {
        learner.classifier.freeze(FreezeScope::kExtractorAndFcUpTo,
                                  strategy.shallowest_level());
      }
      if (config.freeze == FreezeSetup::kExtractorAfterFirstTask ||
          config.freeze == FreezeSetup::kExtractorAndDecoderAfterFirstTask) {
        learner.classifier.freeze(FreezeScope::kExtractor);
      }
      if (config.freeze == FreezeSetup::kExtractorAndDecoderAfterFirstTask &&
          learner.generator.has_value()) {
        learner.generator->freeze_decoder();
      }
    }
    spdlog::info("{} seed {}: task {}/{} done", config.experiment, config.seed, t + 1,
                 stream.num_tasks());
  }

  RunResult result;
  result.experiment = config.experiment;
  result.dataset = dataset.name;
  result.architecture = spec.name;
  result.mode = to_string(config.mode);
  result.seed = config.seed;
  result.config_hash = config.config_hash;
  if (latent) {
    result.strategy = strategy.is_internal_replay() ? "IR" : strategy.to_string();
    result.strategy_label = strategy.label();
    result.relative_cost = relative_cost(blocks_from_spec(spec), strategy);
  }
  for (const std::vector<int>& classes : stream.tasks) {
    const TestSet test = make_test_set(dataset, classes);
    result.per_task_accuracy.push_back(
        accuracy(learner.classifier, test.images, test.labels));
  }
  result.finalize();

  if (config.instrument) {
    const MeasuredUpdates m =
        measured_updates(*learner.replay_counter, learner.classifier.num_conv(),
                         learner.replay_samples, learner.replay_batches);
    result.replay_touches_per_sample = m.per_sample();
  }

  if (config.mfid.enabled && learner.generator.has_value()) {
    const Classifier reference =
        reference_model(dataset, spec, config.pretrained_extractor, config.mfid,
                        config.train, config.seed);
    std::vector<int> all(static_cast<size_t>(dataset.num_classes));
    std::iota(all.begin(), all.end(), 0);
    const TestSet real = make_test_set(dataset, all);
    Rng sample_rng(derive_seed(config.seed, 4));
    const int level = config.mode == ReplayMode::kGenerativeImage
                          ? learner.generator->num_levels()
                          : config.mfid.level;
    const Matrix generated = learner.generator->sample_features(
        level, config.mfid.generated_samples, std::nullopt, sample_rng);
    result.mfid = modified_fid(generated, level, real.images, reference);
  }

  if (!config.checkpoint_path.empty()) {
    std::vector<NamedTensor> tensors =
        snapshot(std::as_const(learner.classifier).parameters());
    for (NamedTensor& t : tensors) t.name = "classifier/" + t.name;
    if (learner.generator.has_value()) {
      for (NamedTensor& t : snapshot(std::as_const(*learner.generator).parameters())) {
        t.name = "generator/" + t.name;
        tensors.push_back(std::move(t));
      }
    }
    fs::create_directories(config.checkpoint_path.parent_path());
    save_tensors(config.checkpoint_path, tensors);
  }

  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<std::string> freezing_setup_ids() {
  return {"GR", "IR_freeze_enc", "GR_freeze_enc_dec", "IR_naive"};
}

RunResult run_fig4_setup(std::string_view setup_id, const Dataset& dataset,
                         const TaskStream& stream, ContinualConfig base) {
  const ClassifierSpec spec = ClassifierSpec::preset(base.architecture);
  if (setup_id == "GR") {
    base.mode = ReplayMode::kGenerativeImage;
    base.strategy.reset();
    base.freeze = FreezeSetup::kNone;
  } else if (setup_id == "IR_freeze_enc") {
    base.mode = ReplayMode::kGenerativeLatent;
    base.strategy = ReplayStrategy::internal_replay(spec.num_levels());
    base.freeze = FreezeSetup::kExtractorAfterFirstTask;
    base.freeze_upstream_of_replay = true;
  } else if (setup_id == "GR_freeze_enc_dec") {
    base.mode = ReplayMode::kGenerativeImage;
    base.strategy.reset();
    base.freeze = FreezeSetup::kExtractorAndDecoderAfterFirstTask;
  } else if (setup_id == "IR_naive") {
    base.mode = ReplayMode::kGenerativeLatent;
    base.strategy = ReplayStrategy::internal_replay(spec.num_levels());
    base.freeze = FreezeSetup::kNone;
    base.freeze_upstream_of_replay = false;
    base.pretrained_extractor.reset();
  } else {
    throw ConfigError("unknown freezing setup '" + std::string(setup_id) + "'");
  }
  RunResult r = run_continual(dataset, stream, base);
  r.tags["setup"] = std::string(setup_id);
  return r;
}

}  // namespace plr
