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

#include "plr/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/spdlog.h>
#include <toml.hpp>

#include "plr/checkpoint.h"
#include "plr/cost.h"
#include "plr/error.h"
#include "plr/replay.h"

namespace plr {
namespace fs = std::filesystem;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kContinual:
      return "continual";
    case ExperimentKind::kPretrainSweep:
      return "pretrain-sweep";
    case ExperimentKind::kFreezeSetups:
      return "freeze-setups";
  }
  return "continual";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  if (text == "continual") return ExperimentKind::kContinual;
  if (text == "pretrain-sweep") return ExperimentKind::kPretrainSweep;
  if (text == "freeze-setups") return ExperimentKind::kFreezeSetups;
  throw ConfigError("unknown experiment kind '" + std::string(text) +
                    "' (expected continual, pretrain-sweep or freeze-setups)");
}

namespace {

// Reads typed values out of one TOML table, recording problems instead of
// throwing and flagging keys nobody asked for.
class Reader {
 public:
  Reader(const toml::table* table, std::string path, std::vector<std::string>& errors)
      : table_(table), path_(std::move(path)), errors_(errors) {}

  bool has(std::string_view key) {
    seen_.insert(std::string(key));
    return table_ != nullptr && table_->contains(key);
  }

  template <typename T>
  void get(std::string_view key, T& out) {
    if (!has(key)) return;
    const toml::node& node = *table_->get(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.value_exact<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = node.value_exact<int64_t>()) {
        if constexpr (std::is_unsigned_v<T>) {
          if (*v < 0) {
            fail(key, "must be non-negative");
            return;
          }
        }
        out = static_cast<T>(*v);
        return;
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node.value<double>()) {
        out = *v;
        return;
      }
    } else {
      if (auto v = node.value_exact<std::string>()) {
        out = *v;
        return;
      }
    }
    fail(key, "has the wrong type");
  }

  template <typename T>
  void get_list(std::string_view key, std::vector<T>& out) {
    if (!has(key)) return;
    const toml::array* arr = table_->get(key)->as_array();
    if (arr == nullptr) {
      fail(key, "must be an array");
      return;
    }
    std::vector<T> values;
    for (const toml::node& node : *arr) {
      std::optional<T> v;
      if constexpr (std::is_same_v<T, bool>) {
        v = node.value_exact<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (auto i = node.value_exact<int64_t>(); i && *i >= 0) v = static_cast<T>(*i);
      } else if constexpr (std::is_floating_point_v<T>) {
        v = node.value<double>();
      } else {
        v = node.value_exact<std::string>();
      }
      if (!v) {
        fail(key, "has an element of the wrong type");
        return;
      }
      values.push_back(*v);
    }
    out = std::move(values);
  }

  const toml::table* subtable(std::string_view key) {
    if (!has(key)) return nullptr;
    const toml::table* t = table_->get(key)->as_table();
    if (t == nullptr) fail(key, "must be a table");
    return t;
  }

  const toml::array* array_of_tables(std::string_view key) {
    if (!has(key)) return nullptr;
    const toml::array* a = table_->get(key)->as_array();
    if (a == nullptr || !a->is_array_of_tables()) {
      fail(key, "must be an array of tables");
      return nullptr;
    }
    return a;
  }

  void finish() {
    if (table_ == nullptr) return;
    for (const auto& [key, node] : *table_) {
      if (!seen_.contains(std::string(key.str()))) {
        errors_.push_back(qualified(key.str()) + ": unknown key");
      }
    }
  }

 private:
  std::string qualified(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  void fail(std::string_view key, const std::string& what) {
    errors_.push_back(qualified(key) + ": " + what);
  }

  const toml::table* table_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_adam(Reader& r, std::string_view prefix, AdamConfig& adam) {
  const std::string p(prefix);
  r.get(p + "lr", adam.learning_rate);
  r.get(p + "beta1", adam.beta1);
  r.get(p + "beta2", adam.beta2);
  r.get(p + "eps", adam.epsilon);
}

struct DatasetShape {
  int channels, height, width, classes;
};

std::optional<DatasetShape> dataset_shape(std::string_view name,
                                          const SyntheticOptions& synthetic) {
  if (name == "cifar10") return DatasetShape{3, 32, 32, 10};
  if (name == "cifar100") return DatasetShape{3, 32, 32, 100};
  if (name == "fashion_mnist") return DatasetShape{1, 28, 28, 10};
  if (name == "synthetic") return DatasetShape{1, 8, 8, synthetic.num_classes};
  return std::nullopt;
}

bool latent_mode(std::string_view mode) {
  return mode == "generative-plr" || mode == "buffer-plr" || mode == "ir";
}

std::string throw_joined(std::string_view source, const std::vector<std::string>& errors) {
  std::string msg = std::string(source) + ": " + std::to_string(errors.size()) +
                    " configuration problem(s)";
  for (const std::string& e : errors) msg += "\n  - " + e;
  return msg;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text,
                                         std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source_name) + ":" +
                      std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }

  std::vector<std::string> errors;
  ExperimentConfig c;
  Reader top(&root, "", errors);
  top.get("name", c.name);
  std::string kind = to_string(c.kind);
  top.get("kind", kind);
  try {
    c.kind = parse_experiment_kind(kind);
  } catch (const Error& e) {
    errors.push_back(std::string("kind: ") + e.what());
  }
  top.get("dataset", c.dataset);
  std::string output_dir = c.output_dir.string();
  top.get("output_dir", output_dir);
  c.output_dir = output_dir;
  top.get_list("seeds", c.seeds);
  top.get("mode", c.mode);
  top.get("instrument", c.instrument);

  if (const toml::array* grid = top.array_of_tables("grid")) {
    for (size_t i = 0; i < grid->size(); ++i) {
      Reader g(grid->get(i)->as_table(), "grid[" + std::to_string(i) + "]", errors);
      GridEntry entry;
      g.get("architecture", entry.architecture);
      g.get_list("strategies", entry.strategies);
      g.finish();
      c.grid.push_back(std::move(entry));
    }
  }

  {
    Reader s(top.subtable("stream"), "stream", errors);
    s.get("split_seed", c.split_seed);
    s.get("permute_classes", c.permute_classes);
    s.get("num_tasks", c.num_tasks);
    s.finish();
  }
  {
    Reader t(top.subtable("train"), "train", errors);
    t.get("batch_size", c.train.batch_size);
    t.get("replay_batch_size", c.train.replay_batch_size);
    t.get("steps_per_task", c.train.steps_per_task);
    t.get("temperature", c.train.temperature);
    t.get("mix_by_task", c.train.mix_by_task);
    t.get("replay_weight", c.train.replay_weight);
    t.get("augment", c.train.augment);
    t.get("log_every", c.train.log_every);
    read_adam(t, "", c.train.classifier_optimizer);
    t.finish();
  }
  {
    Reader g(top.subtable("generator"), "generator", errors);
    g.get("latent_dim", c.latent_dim);
    g.get("conditional", c.conditional);
    g.get_list("level_weights", c.level_weights);
    read_adam(g, "", c.train.generator_optimizer);
    g.finish();
  }
  {
    Reader b(top.subtable("buffer"), "buffer", errors);
    b.get("capacity", c.buffer_capacity);
    b.get("soft_targets", c.train.soft_buffer_targets);
    b.finish();
  }
  {
    Reader p(top.subtable("pretrain"), "pretrain", errors);
    p.get("enabled", c.pretrain.enabled);
    p.get("source", c.pretrain.source);
    p.get("num_classes", c.pretrain.config.num_classes_used);
    p.get("augmentation", c.pretrain.config.augmentation);
    p.get("epochs", c.pretrain.config.epochs);
    p.get("batch_size", c.pretrain.config.batch_size);
    p.get("max_steps_per_epoch", c.pretrain.config.max_steps_per_epoch);
    read_adam(p, "", c.pretrain.config.optimizer);
    p.get_list("class_counts", c.pretrain.class_counts);
    p.get_list("augmentation_options", c.pretrain.augmentation_options);
    p.finish();
  }
  {
    Reader f(top.subtable("freeze"), "freeze", errors);
    f.get("setup", c.freeze);
    f.get("upstream_of_replay", c.freeze_upstream_of_replay);
    f.get_list("setups", c.freeze_setups);
    f.finish();
  }
  {
    Reader m(top.subtable("metrics"), "metrics", errors);
    m.get("mfid", c.mfid.enabled);
    m.get("generated_samples", c.mfid.generated_samples);
    m.get("reference_steps", c.mfid.reference_steps);
    m.get("level", c.mfid.level);
    m.finish();
  }
  {
    Reader s(top.subtable("synthetic"), "synthetic", errors);
    s.get("num_classes", c.synthetic.num_classes);
    s.get("train_per_class", c.synthetic.train_per_class);
    s.get("test_per_class", c.synthetic.test_per_class);
    s.get("seed", c.synthetic.seed);
    s.finish();
  }
  top.finish();

  // Fields that failed to parse keep their defaults, so semantic checks still
  // say something useful.
  const std::vector<std::string> semantic = validate(c);
  errors.insert(errors.end(), semantic.begin(), semantic.end());
  if (!errors.empty()) throw ConfigError(throw_joined(source_name, errors));
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.string());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto err = [&](std::string msg) { errors.push_back(std::move(msg)); };

  if (c.name.empty()) err("name: must be set");
  for (char ch : c.name) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) {
      err("name: only letters, digits, '-' and '_' are allowed");
      break;
    }
  }
  const std::optional<DatasetShape> shape = dataset_shape(c.dataset, c.synthetic);
  if (!shape) {
    err("dataset: unknown dataset '" + c.dataset +
        "' (expected cifar10, cifar100, fashion_mnist or synthetic)");
  }
  if (c.seeds.empty()) err("seeds: at least one seed is required");
  if (std::set<uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    err("seeds: duplicates");
  }
  try {
    parse_replay_mode(c.mode);
  } catch (const Error& e) {
    err(std::string("mode: ") + e.what());
  }
  if (c.train.batch_size <= 0) err("train.batch_size: must be positive");
  if (c.train.replay_batch_size <= 0) err("train.replay_batch_size: must be positive");
  if (c.train.steps_per_task <= 0) err("train.steps_per_task: must be positive");
  if (c.train.temperature <= 0.0) err("train.temperature: must be positive");
  if (c.train.replay_weight < 0.0 || c.train.replay_weight > 1.0) {
    err("train.replay_weight: must lie in [0, 1]");
  }
  if (c.train.classifier_optimizer.learning_rate <= 0.0) err("train.lr: must be positive");
  if (c.train.generator_optimizer.learning_rate <= 0.0) err("generator.lr: must be positive");
  if (c.latent_dim <= 0) err("generator.latent_dim: must be positive");
  if (c.buffer_capacity <= 0) err("buffer.capacity: must be positive");
  if (c.synthetic.num_classes < 2 || c.synthetic.train_per_class <= 0 ||
      c.synthetic.test_per_class <= 0) {
    err("synthetic: needs at least two classes and positive sizes");
  }

  if (c.grid.empty()) err("grid: at least one [[grid]] entry is required");
  if (c.kind != ExperimentKind::kContinual && c.grid.size() > 1) {
    err("grid: " + to_string(c.kind) + " takes exactly one architecture");
  }
  for (size_t i = 0; i < c.grid.size(); ++i) {
    const GridEntry& g = c.grid[i];
    const std::string where = "grid[" + std::to_string(i) + "]";
    ClassifierSpec spec;
    try {
      spec = ClassifierSpec::preset(g.architecture);
    } catch (const Error& e) {
      err(where + ".architecture: " + e.what());
      continue;
    }
    if (shape) {
      const ExtractorSpec& ex = spec.extractor;
      if (ex.in_channels != shape->channels || ex.height != shape->height ||
          ex.width != shape->width) {
        err(where + ": " + spec.name + " does not take " + c.dataset + " images");
      }
      if (spec.num_classes < shape->classes) {
        err(where + ": " + spec.name + " has " + std::to_string(spec.num_classes) +
            " outputs but " + c.dataset + " has " + std::to_string(shape->classes) +
            " classes");
      }
      const int tasks = c.num_tasks > 0 ? c.num_tasks
                        : c.dataset == "synthetic" ? 5
                                                   : preset_task_count(c.dataset);
      if (shape->classes % tasks != 0) {
        err("stream.num_tasks: " + std::to_string(shape->classes) +
            " classes do not split into " + std::to_string(tasks) + " tasks");
      }
    }
    const bool latent = c.kind == ExperimentKind::kContinual && latent_mode(c.mode);
    if (latent && c.mode != "ir" && g.strategies.empty()) {
      err(where + ".strategies: " + c.mode + " needs at least one strategy");
    }
    for (const std::string& s : g.strategies) {
      try {
        ReplayStrategy::parse(s, spec.num_levels());
      } catch (const Error& e) {
        err(where + ".strategies: " + e.what());
      }
    }
    if (!c.level_weights.empty() &&
        static_cast<int>(c.level_weights.size()) != spec.num_levels() + 1) {
      err("generator.level_weights: " + spec.name + " needs " +
          std::to_string(spec.num_levels() + 1) + " weights");
    }
    if (c.mfid.enabled && (c.mfid.level < 0 || c.mfid.level >= spec.num_levels())) {
      err("metrics.level: out of range for " + spec.name);
    }
  }
  for (double w : c.level_weights) {
    if (w < 0.0) err("generator.level_weights: must be non-negative");
  }
  if (c.mfid.enabled && (c.mfid.generated_samples < 2 || c.mfid.reference_steps <= 0)) {
    err("metrics: generated_samples must be >= 2 and reference_steps positive");
  }

  try {
    parse_freeze_setup(c.freeze);
  } catch (const Error& e) {
    err(std::string("freeze.setup: ") + e.what());
  }

  const bool sweep = c.kind == ExperimentKind::kPretrainSweep;
  if (c.pretrain.enabled || sweep) {
    const std::optional<DatasetShape> src = dataset_shape(c.pretrain.source, c.synthetic);
    if (!src) {
      err("pretrain.source: unknown dataset '" + c.pretrain.source + "'");
    }
    std::vector<int> counts = sweep ? c.pretrain.class_counts
                                    : std::vector<int>{c.pretrain.config.num_classes_used};
    if (sweep && counts.empty()) err("pretrain.class_counts: required for a sweep");
    if (sweep && c.pretrain.augmentation_options.empty()) {
      err("pretrain.augmentation_options: required for a sweep");
    }
    for (int k : counts) {
      if (k < 2) {
        err("pretrain: " + std::to_string(k) +
            " classes is too few for a classification loss (need >= 2)");
      } else if (src && k > src->classes) {
        err("pretrain: " + std::to_string(k) + " classes requested but " +
            c.pretrain.source + " has " + std::to_string(src->classes));
      }
    }
    if (c.pretrain.config.epochs <= 0) err("pretrain.epochs: must be positive");
    if (c.pretrain.config.batch_size <= 0) err("pretrain.batch_size: must be positive");
    if (src && shape &&
        (src->channels != shape->channels || src->height != shape->height ||
         src->width != shape->width)) {
      err("pretrain.source: image shape differs from " + c.dataset);
    }
  }

  if (sweep && c.mode != "ir" && c.mode != "generative-plr" && c.mode != "buffer-plr") {
    err("mode: a pretraining sweep evaluates latent replay");
  }
  if (c.kind == ExperimentKind::kFreezeSetups) {
    if (c.freeze_setups.empty()) err("freeze.setups: required for freeze-setups");
    const std::vector<std::string> known = freezing_setup_ids();
    for (const std::string& s : c.freeze_setups) {
      if (std::find(known.begin(), known.end(), s) == known.end()) {
        err("freeze.setups: unknown setup '" + s + "'");
      }
    }
  }
  return errors;
}

std::string resolved_config(const ExperimentConfig& c) {
  auto adam = [](toml::table& t, const AdamConfig& a) {
    t.insert_or_assign("lr", a.learning_rate);
    t.insert_or_assign("beta1", a.beta1);
    t.insert_or_assign("beta2", a.beta2);
    t.insert_or_assign("eps", a.epsilon);
  };
  auto ints = [](const auto& values) {
    toml::array a;
    for (auto v : values) a.push_back(static_cast<int64_t>(v));
    return a;
  };
  toml::table root;
  root.insert_or_assign("name", c.name);
  root.insert_or_assign("kind", to_string(c.kind));
  root.insert_or_assign("dataset", c.dataset);
  root.insert_or_assign("seeds", ints(c.seeds));
  root.insert_or_assign("mode", c.mode);
  root.insert_or_assign("instrument", c.instrument);

  toml::array grid;
  for (const GridEntry& g : c.grid) {
    toml::array strategies;
    for (const std::string& s : g.strategies) strategies.push_back(s);
    grid.push_back(toml::table{{"architecture", g.architecture},
                               {"strategies", std::move(strategies)}});
  }
  root.insert_or_assign("grid", std::move(grid));

  root.insert_or_assign(
      "stream", toml::table{{"split_seed", static_cast<int64_t>(c.split_seed)},
                            {"permute_classes", c.permute_classes},
                            {"num_tasks", c.num_tasks}});

  toml::table train{{"batch_size", c.train.batch_size},
                    {"replay_batch_size", c.train.replay_batch_size},
                    {"steps_per_task", c.train.steps_per_task},
                    {"temperature", c.train.temperature},
                    {"mix_by_task", c.train.mix_by_task},
                    {"replay_weight", c.train.replay_weight},
                    {"augment", c.train.augment},
                    {"log_every", c.train.log_every}};
  adam(train, c.train.classifier_optimizer);
  root.insert_or_assign("train", std::move(train));

  toml::array weights;
  for (double w : c.level_weights) weights.push_back(w);
  toml::table gen{{"latent_dim", c.latent_dim},
                  {"conditional", c.conditional},
                  {"level_weights", std::move(weights)}};
  adam(gen, c.train.generator_optimizer);
  root.insert_or_assign("generator", std::move(gen));

  root.insert_or_assign("buffer", toml::table{{"capacity", c.buffer_capacity},
                                              {"soft_targets", c.train.soft_buffer_targets}});

  toml::array aug;
  for (bool b : c.pretrain.augmentation_options) aug.push_back(b);
  toml::table pre{{"enabled", c.pretrain.enabled},
                  {"source", c.pretrain.source},
                  {"num_classes", c.pretrain.config.num_classes_used},
                  {"augmentation", c.pretrain.config.augmentation},
                  {"epochs", c.pretrain.config.epochs},
                  {"batch_size", c.pretrain.config.batch_size},
                  {"max_steps_per_epoch", c.pretrain.config.max_steps_per_epoch},
                  {"class_counts", ints(c.pretrain.class_counts)},
                  {"augmentation_options", std::move(aug)}};
  adam(pre, c.pretrain.config.optimizer);
  root.insert_or_assign("pretrain", std::move(pre));

  toml::array setups;
  for (const std::string& s : c.freeze_setups) setups.push_back(s);
  root.insert_or_assign("freeze",
                        toml::table{{"setup", c.freeze},
                                    {"upstream_of_replay", c.freeze_upstream_of_replay},
                                    {"setups", std::move(setups)}});
  root.insert_or_assign("metrics",
                        toml::table{{"mfid", c.mfid.enabled},
                                    {"generated_samples", c.mfid.generated_samples},
                                    {"reference_steps", c.mfid.reference_steps},
                                    {"level", c.mfid.level}});
  if (c.dataset == "synthetic" || c.pretrain.source == "synthetic") {
    root.insert_or_assign(
        "synthetic",
        toml::table{{"num_classes", c.synthetic.num_classes},
                    {"train_per_class", c.synthetic.train_per_class},
                    {"test_per_class", c.synthetic.test_per_class},
                    {"seed", static_cast<int64_t>(c.synthetic.seed)}});
  }
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string config_hash(const ExperimentConfig& config) {
  return sha256_hex(resolved_config(config));
}

fs::path run_directory(const ExperimentConfig& config) {
  return config.output_dir / (config.name + "-" + config_hash(config).substr(0, 12));
}

namespace {

std::string strategy_slug(const std::string& text, int levels) {
  const ReplayStrategy s = ReplayStrategy::parse(text, levels);
  if (s.is_internal_replay()) return "IR";
  std::string slug = "S";
  for (double f : s.frequencies()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_%g", f);
    slug += buf;
  }
  return slug;
}

}  // namespace

std::vector<RunCell> expand_cells(const ExperimentConfig& c) {
  std::vector<RunCell> cells;
  const std::string seed_suffix = "__seed";
  switch (c.kind) {
    case ExperimentKind::kContinual:
      for (const GridEntry& g : c.grid) {
        const int levels = ClassifierSpec::preset(g.architecture).num_levels();
        std::vector<std::optional<std::string>> strategies;
        if (c.mode == "ir") {
          strategies.push_back("IR");
        } else if (latent_mode(c.mode)) {
          strategies.assign(g.strategies.begin(), g.strategies.end());
        } else {
          strategies.push_back(std::nullopt);
        }
        for (const auto& s : strategies) {
          for (uint64_t seed : c.seeds) {
            RunCell cell;
            cell.architecture = g.architecture;
            cell.strategy = s;
            cell.seed = seed;
            cell.id = g.architecture + "__" + (s ? strategy_slug(*s, levels) : c.mode) +
                      seed_suffix + std::to_string(seed);
            cells.push_back(std::move(cell));
          }
        }
      }
      break;
    case ExperimentKind::kPretrainSweep:
      for (bool aug : c.pretrain.augmentation_options) {
        for (int k : c.pretrain.class_counts) {
          for (uint64_t seed : c.seeds) {
            RunCell cell;
            cell.architecture = c.grid.front().architecture;
            cell.strategy = c.grid.front().strategies.empty()
                                ? std::string("IR")
                                : c.grid.front().strategies.front();
            cell.seed = seed;
            cell.pretrain_classes = k;
            cell.pretrain_augmentation = aug;
            cell.id = cell.architecture + "__pre" + std::to_string(k) +
                      (aug ? "_aug" : "_noaug") + seed_suffix + std::to_string(seed);
            cells.push_back(std::move(cell));
          }
        }
      }
      break;
    case ExperimentKind::kFreezeSetups:
      for (const std::string& setup : c.freeze_setups) {
        for (uint64_t seed : c.seeds) {
          RunCell cell;
          cell.architecture = c.grid.front().architecture;
          cell.seed = seed;
          cell.setup = setup;
          cell.id = cell.architecture + "__" + setup + seed_suffix + std::to_string(seed);
          cells.push_back(std::move(cell));
        }
      }
      break;
  }
  return cells;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset open_dataset(const std::string& name, const ExperimentConfig& c,
                     const fs::path& root) {
  if (name == "synthetic") return synthetic_dataset(c.synthetic);
  return load_dataset(name, root);
}

std::vector<Matrix> cached_extractor(const fs::path& path, const PretrainConfig& pc,
                                     const ClassifierSpec& spec, const Dataset& source,
                                     uint64_t seed) {
  if (fs::exists(path)) {
    std::vector<Matrix> out;
    for (NamedTensor& t : load_tensors(path)) out.push_back(std::move(t.value));
    return out;
  }
  spdlog::info("pretraining {} on {} classes of {} (augmentation {})", spec.name,
               pc.num_classes_used, source.name, pc.augmentation ? "on" : "off");
  std::vector<Matrix> weights = pretrain_extractor(pc, spec, source, seed);
  std::vector<NamedTensor> tensors;
  for (size_t i = 0; i < weights.size(); ++i) {
    tensors.push_back({"extractor." + std::to_string(i), weights[i]});
  }
  fs::create_directories(path.parent_path());
  save_tensors(path, tensors);
  return weights;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RunOptions& options) {
  const std::vector<std::string> problems = validate(config);
  if (!problems.empty()) throw ConfigError(throw_joined(config.name, problems));

  ExperimentOutcome outcome;
  outcome.run_dir = run_directory(config);
  const fs::path complete = outcome.run_dir / "COMPLETE";
  if (fs::exists(complete) && !options.force) {
    outcome.results = load_results(outcome.run_dir);
    outcome.reused = true;
    return outcome;
  }

  const std::string hash = config_hash(config);
  fs::create_directories(outcome.run_dir / "runs");
  fs::create_directories(outcome.run_dir / "checkpoints");
  fs::remove(complete);
  write_text(outcome.run_dir / "config.toml", resolved_config(config));

  auto file_sink = std::make_shared<spdlog::sinks::basic_file_sink_mt>(
      (outcome.run_dir / "run.log").string());
  auto previous = spdlog::default_logger();
  auto logger = std::make_shared<spdlog::logger>(
      "plr", spdlog::sinks_init_list{file_sink, previous->sinks().front()});
  logger->set_level(previous->level());
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> prev;
    ~Restore() { spdlog::set_default_logger(prev); }
  } restore_logger{previous};

  const fs::path root = options.data_root.empty() ? default_data_root() : options.data_root;
  const Dataset dataset = open_dataset(config.dataset, config, root);
  const int tasks = config.num_tasks > 0 ? config.num_tasks
                    : config.dataset == "synthetic" ? 5
                                                    : preset_task_count(config.dataset);
  const TaskStream stream = build_stream(dataset.name, dataset.num_classes, tasks,
                                         config.split_seed, config.permute_classes);

  std::optional<Dataset> source;
  const bool sweep = config.kind == ExperimentKind::kPretrainSweep;
  if (config.pretrain.enabled || sweep) {
    if (config.pretrain.source == config.dataset) {
      source = dataset;
    } else {
      source = open_dataset(config.pretrain.source, config, root);
    }
  }

  bool all_reused = true;
  for (const RunCell& cell : expand_cells(config)) {
    const fs::path json_path = outcome.run_dir / "runs" / (cell.id + ".json");
    if (fs::exists(json_path) && !options.force) {
      outcome.results.push_back(RunResult::from_json(read_text(json_path)));
      continue;
    }
    all_reused = false;
    const ClassifierSpec spec = ClassifierSpec::preset(cell.architecture);

    ContinualConfig cc;
    cc.experiment = config.name;
    cc.architecture = cell.architecture;
    cc.mode = parse_replay_mode(config.mode);
    if (cell.strategy) cc.strategy = ReplayStrategy::parse(*cell.strategy, spec.num_levels());
    cc.train = config.train;
    cc.latent_dim = config.latent_dim;
    cc.conditional = config.conditional;
    cc.level_weights = config.level_weights;
    cc.buffer_capacity = config.buffer_capacity;
    cc.freeze = parse_freeze_setup(config.freeze);
    cc.freeze_upstream_of_replay = config.freeze_upstream_of_replay;
    cc.mfid = config.mfid;
    cc.mfid.cache_dir = outcome.run_dir / "checkpoints" / "reference";
    cc.instrument = config.instrument;
    cc.seed = cell.seed;
    cc.config_hash = hash;
    cc.checkpoint_path = outcome.run_dir / "checkpoints" / (cell.id + ".ckpt");

    if (config.pretrain.enabled || sweep) {
      PretrainConfig pc = config.pretrain.config;
      if (sweep) {
        pc.num_classes_used = cell.pretrain_classes;
        pc.augmentation = cell.pretrain_augmentation;
      }
      const fs::path cache =
          outcome.run_dir / "checkpoints" /
          ("extractor-" + spec.name + "-c" + std::to_string(pc.num_classes_used) +
           (pc.augmentation ? "-aug" : "-noaug") + "-seed" + std::to_string(cell.seed) +
           ".ckpt");
      cc.pretrained_extractor = cached_extractor(cache, pc, spec, *source, cell.seed);
    }

    RunResult result;
    if (config.kind == ExperimentKind::kFreezeSetups) {
      result = run_fig4_setup(cell.setup, dataset, stream, cc);
    } else {
      result = run_continual(dataset, stream, cc);
    }
    if (sweep) {
      result.tags["pretrain_classes"] = std::to_string(cell.pretrain_classes);
      result.tags["pretrain_augmentation"] = cell.pretrain_augmentation ? "true" : "false";
    }
    write_text(json_path, result.to_json());
    spdlog::info("{}: average accuracy {}", cell.id, format_percent(result.average_accuracy));
    outcome.results.push_back(std::move(result));
  }

  write_text(outcome.run_dir / "summary.csv", summary_csv(outcome.results));
  write_text(complete, hash + "\n");
  outcome.reused = all_reused;
  return outcome;
}

std::vector<RunResult> load_results(const fs::path& run_dir) {
  const fs::path runs = run_dir / "runs";
  if (!fs::is_directory(runs)) {
    throw IoError(run_dir.string() + " is not a run directory (no runs/)");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(runs)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunResult> out;
  for (const fs::path& f : files) out.push_back(RunResult::from_json(read_text(f)));
  return out;
}

std::string summary_csv(std::span<const RunResult> results) {
  std::string out =
      "experiment,dataset,architecture,mode,strategy,seed,relative_cost,"
      "average_accuracy,mfid,per_task_accuracy,tags,config_hash\n";
  for (const RunResult& r : results) {
    std::string per_task;
    for (size_t i = 0; i < r.per_task_accuracy.size(); ++i) {
      if (i) per_task += ";";
      per_task += fmt(r.per_task_accuracy[i], "%.6f");
    }
    std::string tags;
    for (const auto& [k, v] : r.tags) {
      if (!tags.empty()) tags += ";";
      tags += k + "=" + v;
    }
    out += csv_escape(r.experiment) + "," + r.dataset + "," + r.architecture + "," +
           r.mode + "," + csv_escape(r.strategy) + "," + std::to_string(r.seed) + "," +
           (r.relative_cost ? fmt(*r.relative_cost, "%.6f") : "") + "," +
           fmt(r.average_accuracy, "%.6f") + "," + (r.mfid ? fmt(*r.mfid, "%.4f") : "") +
           "," + per_task + "," + csv_escape(tags) + "," + r.config_hash + "\n";
  }
  return out;
}

TableId parse_table_id(std::string_view text) {
  if (text == "T1") return TableId::kT1;
  if (text == "T2") return TableId::kT2;
  throw ConfigError("unknown table id '" + std::string(text) + "' (expected T1 or T2)");
}

namespace {

const std::map<std::string, std::vector<std::string>>& standard_strategies() {
  static const std::map<std::string, std::vector<std::string>> grid{
      {"ARCH1", {"IR", "[0.7, 0.3]", "[0.5, 0.5]", "[0.3, 0.7]"}},
      {"ARCH2", {"IR", "[0.5, 0.3, 0.2]", "[0.34, 0.33, 0.33]", "[0.2, 0.3, 0.5]"}},
  };
  return grid;
}

bool same_strategy(const RunResult& r, const ReplayStrategy& s, int levels) {
  if (r.strategy.empty()) return false;
  try {
    return ReplayStrategy::parse(r.strategy, levels) == s;
  } catch (const Error&) {
    return false;
  }
}

std::string pad(const std::string& s, size_t width) {
  // Column widths count code points so "±" lines up.
  size_t n = 0;
  for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
  return s + std::string(width > n ? width - n : 0, ' ');
}

size_t display_width(const std::string& s) {
  size_t n = 0;
  for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
  return n;
}

}  // namespace

Table emit_table(std::span<const RunResult> results, TableId id) {
  Table table;
  table.header = {"Architecture", "Strategy", "R"};
  if (id == TableId::kT2) table.header.push_back("mFID");
  table.header.push_back("Accuracy");
  if (results.empty()) table.warnings.push_back("no results");

  std::vector<std::string> archs;
  for (const auto& [arch, _] : standard_strategies()) {
    const bool present = std::any_of(results.begin(), results.end(),
                                     [&](const RunResult& r) { return r.architecture == arch; });
    if (present) archs.push_back(arch);
  }
  for (const RunResult& r : results) {
    if (std::find(archs.begin(), archs.end(), r.architecture) == archs.end()) {
      archs.push_back(r.architecture);
    }
  }

  for (const std::string& arch : archs) {
    const ClassifierSpec spec = ClassifierSpec::preset(arch);
    const int levels = spec.num_levels();
    std::vector<ReplayStrategy> rows;
    if (auto it = standard_strategies().find(arch); it != standard_strategies().end()) {
      for (const std::string& s : it->second) rows.push_back(ReplayStrategy::parse(s, levels));
    }
    for (const RunResult& r : results) {
      if (r.architecture != arch || r.strategy.empty()) continue;
      const ReplayStrategy s = ReplayStrategy::parse(r.strategy, levels);
      if (std::find(rows.begin(), rows.end(), s) == rows.end()) rows.push_back(s);
    }
    bool first = true;
    for (const ReplayStrategy& s : rows) {
      std::vector<double> acc, mfid;
      for (const RunResult& r : results) {
        if (r.architecture != arch || !same_strategy(r, s, levels)) continue;
        acc.push_back(r.average_accuracy);
        if (r.mfid) mfid.push_back(*r.mfid);
      }
      std::vector<std::string> row{first ? arch : "", s.label(),
                                   format_percent(relative_cost(blocks_from_spec(spec), s))};
      first = false;
      if (id == TableId::kT2) {
        if (mfid.empty()) {
          row.push_back("MISSING");
        } else {
          double m = 0.0;
          for (double v : mfid) m += v;
          row.push_back(fmt(m / static_cast<double>(mfid.size()), "%.0f"));
        }
      }
      if (acc.empty()) {
        row.push_back("MISSING");
        table.warnings.push_back(arch + " " + s.label() + ": no runs");
      } else {
        row.push_back(format_accuracy_sem(average_accuracy_sem(acc)));
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string Table::text() const {
  std::vector<size_t> widths(header.size(), 0);
  for (size_t i = 0; i < header.size(); ++i) widths[i] = display_width(header[i]);
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      widths[i] = std::max(widths[i], display_width(row[i]));
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
      out += (i ? " | " : "") + pad(cells[i], widths[i]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  size_t total = 0;
  for (size_t w : widths) total += w;
  out += std::string(total + 3 * (widths.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  for (const std::string& w : warnings) out += "warning: " + w + "\n";
  return out;
}

std::string Table::csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
    out += "\n";
  };
  line(header);
  for (const auto& row : rows) line(row);
  return out;
}

// ---------------------------------------------------------------------------
// SVG figures

FigureId parse_figure_id(std::string_view text) {
  if (text == "F3") return FigureId::kF3;
  if (text == "F4") return FigureId::kF4;
  if (text == "cost-vs-acc") return FigureId::kCostVsAccuracy;
  throw ConfigError("unknown figure id '" + std::string(text) +
                    "' (expected F3, F4 or cost-vs-acc)");
}

std::string figure_file_name(FigureId id) {
  switch (id) {
    case FigureId::kF3:
      return "F3.svg";
    case FigureId::kF4:
      return "F4.svg";
    case FigureId::kCostVsAccuracy:
      return "cost-vs-acc.svg";
  }
  return "figure.svg";
}

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

struct Axes {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

class Svg {
 public:
  explicit Svg(const std::string& title) {
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(kW / 2, 22, title, "middle", 15);
  }
  void text(double x, double y, const std::string& s, const char* anchor = "start",
            int size = 12, const char* color = "black") {
    body_ += "<text x=\"" + fmt(x, "%.1f") + "\" y=\"" + fmt(y, "%.1f") +
             "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) +
             "\" text-anchor=\"" + anchor + "\" fill=\"" + color + "\">" +
             escape_xml(s) + "</text>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* color = "black",
            double width = 1) {
    body_ += "<line x1=\"" + fmt(x0, "%.1f") + "\" y1=\"" + fmt(y0, "%.1f") + "\" x2=\"" +
             fmt(x1, "%.1f") + "\" y2=\"" + fmt(y1, "%.1f") + "\" stroke=\"" + color +
             "\" stroke-width=\"" + fmt(width, "%.1f") + "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* color) {
    body_ += "<rect x=\"" + fmt(x, "%.1f") + "\" y=\"" + fmt(y, "%.1f") + "\" width=\"" +
             fmt(w, "%.1f") + "\" height=\"" + fmt(h, "%.1f") + "\" fill=\"" + color +
             "\"/>\n";
  }
  void circle(double x, double y, double r, const char* color) {
    body_ += "<circle cx=\"" + fmt(x, "%.1f") + "\" cy=\"" + fmt(y, "%.1f") + "\" r=\"" +
             fmt(r, "%.1f") + "\" fill=\"" + color + "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    std::string p;
    for (const auto& [x, y] : pts) p += fmt(x, "%.1f") + "," + fmt(y, "%.1f") + " ";
    body_ += "<polyline points=\"" + p + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
  }
  void axes(const Axes& a, const std::string& xlabel, const std::string& ylabel,
            bool x_ticks = true) {
    line(kLeft, kH - kBottom, kW - kRight, kH - kBottom);
    line(kLeft, kTop, kLeft, kH - kBottom);
    for (int i = 0; i <= 5; ++i) {
      const double v = a.y0 + (a.y1 - a.y0) * i / 5.0;
      const double y = a.py(v);
      line(kLeft - 4, y, kLeft, y);
      text(kLeft - 8, y + 4, fmt(100 * v, "%.0f%%"), "end", 11);
    }
    if (x_ticks) {
      for (int i = 0; i <= 5; ++i) {
        const double v = a.x0 + (a.x1 - a.x0) * i / 5.0;
        const double x = a.px(v);
        line(x, kH - kBottom, x, kH - kBottom + 4);
        text(x, kH - kBottom + 18, xlabel.back() == '%' ? fmt(100 * v, "%.0f%%")
                                                        : fmt(v, "%g"),
             "middle", 11);
      }
    }
    text(kW / 2, kH - 15, xlabel.back() == '%' ? xlabel.substr(0, xlabel.size() - 2)
                                               : xlabel,
         "middle", 12);
    body_ += "<text transform=\"translate(18," + fmt(kH / 2, "%.1f") +
             ") rotate(-90)\" font-family=\"sans-serif\" font-size=\"12\" "
             "text-anchor=\"middle\">" + escape_xml(ylabel) + "</text>\n";
  }
  void warn(const std::vector<std::string>& warnings) {
    double y = kTop + 4;
    for (const std::string& w : warnings) {
      text(kW - kRight, y, "warning: " + w, "end", 10, "#b00000");
      y += 13;
    }
  }
  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW, "%.0f") +
           "\" height=\"" + fmt(kH, "%.0f") + "\" viewBox=\"0 0 " + fmt(kW, "%.0f") + " " +
           fmt(kH, "%.0f") + "\">\n" + body_ + "</svg>\n";
  }

 private:
  std::string body_;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Figure plot_f3(std::span<const RunResult> results) {
  Figure fig;
  // augmentation -> classes -> accuracies
  std::map<std::string, std::map<int, std::vector<double>>> series;
  for (const RunResult& r : results) {
    auto k = r.tags.find("pretrain_classes");
    auto a = r.tags.find("pretrain_augmentation");
    if (k == r.tags.end() || a == r.tags.end()) continue;
    series[a->second][std::stoi(k->second)].push_back(r.average_accuracy);
  }
  std::set<int> counts;
  for (const auto& [_, pts] : series) {
    for (const auto& [k, __] : pts) counts.insert(k);
  }
  for (const char* name : {"true", "false"}) {
    if (!series.contains(name)) {
      fig.warnings.push_back(std::string("no runs with augmentation ") +
                             (std::string(name) == "true" ? "on" : "off"));
      continue;
    }
    for (int k : counts) {
      if (!series[name].contains(k)) {
        fig.warnings.push_back(std::string("augmentation ") +
                               (std::string(name) == "true" ? "on" : "off") +
                               ": missing " + std::to_string(k) + " classes");
      }
    }
  }
  Svg svg("Downstream accuracy vs pretraining classes");
  const double x0 = counts.empty() ? 0 : *counts.begin();
  const double x1 = counts.empty() ? 10 : std::max(*counts.rbegin(), *counts.begin() + 1);
  const Axes axes{x0, x1, 0.0, 1.0};
  svg.axes(axes, "pretraining classes", "average accuracy", false);
  for (int k : counts) {
    svg.line(axes.px(k), kH - kBottom, axes.px(k), kH - kBottom + 4);
    svg.text(axes.px(k), kH - kBottom + 18, std::to_string(k), "middle", 11);
  }
  int color = 0;
  double legend_y = kTop + 10;
  for (const char* name : {"true", "false"}) {
    const char* c = kPalette[color++];
    if (!series.contains(name)) continue;
    std::vector<std::pair<double, double>> pts;
    for (const auto& [k, acc] : series[name]) {
      pts.emplace_back(axes.px(k), axes.py(mean_of(acc)));
      svg.circle(axes.px(k), axes.py(mean_of(acc)), 3.5, c);
    }
    svg.polyline(pts, c);
    svg.line(kLeft + 12, legend_y, kLeft + 32, legend_y, c, 2);
    svg.text(kLeft + 38, legend_y + 4,
             std::string("with") + (std::string(name) == "true" ? "" : "out") +
                 " augmentation");
    legend_y += 16;
  }
  if (counts.empty()) fig.warnings.push_back("no pretraining sweep results");
  svg.warn(fig.warnings);
  fig.svg = svg.str();
  return fig;
}

Figure plot_f4(std::span<const RunResult> results) {
  Figure fig;
  const std::vector<std::string> ids = freezing_setup_ids();
  const std::map<std::string, std::string> labels{{"GR", "GR"},
                                                   {"IR_freeze_enc", "IR + freeze"},
                                                   {"GR_freeze_enc_dec", "GR + freeze"},
                                                   {"IR_naive", "naive IR"}};
  std::map<std::string, std::vector<double>> acc;
  for (const RunResult& r : results) {
    auto s = r.tags.find("setup");
    if (s != r.tags.end()) acc[s->second].push_back(r.average_accuracy);
  }
  for (const std::string& id : ids) {
    if (!acc.contains(id)) fig.warnings.push_back("missing setup " + id);
  }
  Svg svg("Freezing setups: average accuracy after the final task");
  const Axes axes{0, static_cast<double>(ids.size()), 0.0, 1.0};
  svg.axes(axes, "setup", "average accuracy", false);
  const double slot = (kW - kLeft - kRight) / static_cast<double>(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    svg.text(cx, kH - kBottom + 18, labels.at(ids[i]), "middle", 11);
    if (!acc.contains(ids[i])) {
      svg.text(cx, kH - kBottom - 6, "no data", "middle", 10, "#b00000");
      continue;
    }
    const MeanSem m = average_accuracy_sem(acc[ids[i]]);
    const double top = axes.py(m.mean);
    svg.rect(cx - slot * 0.3, top, slot * 0.6, kH - kBottom - top, kPalette[i]);
    if (m.sem) {
      svg.line(cx, axes.py(m.mean - *m.sem), cx, axes.py(m.mean + *m.sem));
      svg.line(cx - 6, axes.py(m.mean + *m.sem), cx + 6, axes.py(m.mean + *m.sem));
      svg.line(cx - 6, axes.py(m.mean - *m.sem), cx + 6, axes.py(m.mean - *m.sem));
    }
    svg.text(cx, top - 6, format_percent(m.mean), "middle", 11);
  }
  svg.warn(fig.warnings);
  fig.svg = svg.str();
  return fig;
}

Figure plot_cost(std::span<const RunResult> results) {
  Figure fig;
  std::map<std::pair<std::string, std::string>, std::vector<double>> acc;
  std::map<std::pair<std::string, std::string>, double> cost;
  for (const RunResult& r : results) {
    if (!r.relative_cost) continue;
    const auto key = std::make_pair(r.architecture, r.strategy_label);
    acc[key].push_back(r.average_accuracy);
    cost[key] = *r.relative_cost;
  }
  if (acc.empty()) fig.warnings.push_back("no latent-replay results with a cost");
  Svg svg("Relative replay cost vs accuracy");
  double lo = 1.0, hi = 0.0;
  for (const auto& [_, v] : acc) {
    lo = std::min(lo, mean_of(v));
    hi = std::max(hi, mean_of(v));
  }
  if (acc.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  const double margin = std::max(0.02, (hi - lo) * 0.2);
  const Axes axes{0.0, 1.05, std::max(0.0, lo - margin), std::min(1.0, hi + margin)};
  svg.axes(axes, "R %", "average accuracy");
  std::map<std::string, const char*> colors;
  for (const auto& [key, v] : acc) {
    if (!colors.contains(key.first)) colors[key.first] = kPalette[colors.size() % 6];
    const double x = axes.px(cost[key]), y = axes.py(mean_of(v));
    svg.circle(x, y, 4.5, colors[key.first]);
    svg.text(x + 7, y - 5, key.second, "start", 10, colors[key.first]);
  }
  double legend_y = kH - kBottom - 10 - 16.0 * static_cast<double>(colors.size());
  for (const auto& [arch, c] : colors) {
    svg.circle(kLeft + 20, legend_y, 4.5, c);
    svg.text(kLeft + 30, legend_y + 4, arch);
    legend_y += 16;
  }
  svg.warn(fig.warnings);
  fig.svg = svg.str();
  return fig;
}

}  // namespace

Figure emit_plot(std::span<const RunResult> results, FigureId id) {
  Figure fig;
  switch (id) {
    case FigureId::kF3:
      fig = plot_f3(results);
      break;
    case FigureId::kF4:
      fig = plot_f4(results);
      break;
    case FigureId::kCostVsAccuracy:
      fig = plot_cost(results);
      break;
  }
  for (const std::string& w : fig.warnings) spdlog::warn("{}: {}", figure_file_name(id), w);
  return fig;
}

}  // namespace plr
