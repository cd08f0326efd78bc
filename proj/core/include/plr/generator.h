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

#ifndef PLR_GENERATOR_H_
#define PLR_GENERATOR_H_

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "plr/arch.h"
#include "plr/nn.h"
#include "plr/tensor.h"

namespace plr {

enum class OutputActivation {
  kRelu,      // feature-space generation (targets are post-ReLU taps)
  kIdentity,  // image-space generation (normalized pixels)
};

struct GeneratorSpec {
  // Width of what the encoder consumes: extractor output D for latent replay,
  // the flattened image size for image-space replay.
  int input_width = 0;
  std::vector<int> hidden_widths;
  int latent_dim = 100;
  bool conditional = false;
  int num_classes = 0;
  OutputActivation input_activation = OutputActivation::kRelu;
  // Reconstruction weights: one per hidden level, then one for the input
  // level. Empty means all ones.
  std::vector<double> level_weights;
  // Multiplier on the mean per-sample KL. Non-positive selects 1/input_width,
  // which puts the KL on the same per-element scale as the MSE terms.
  double latent_weight = 0.0;

  int num_levels() const { return static_cast<int>(hidden_widths.size()); }
  double resolved_latent_weight() const;
  double level_weight(int index) const;  // index H is the input level
  void validate() const;

  static GeneratorSpec mirror(const ClassifierSpec& classifier, int latent_dim,
                              bool conditional = false);
  // Image-space variant used by standard generative replay: encoder consumes
  // the flattened image, only the image reconstruction is scored.
  static GeneratorSpec image_space(const ClassifierSpec& classifier,
                                   int latent_dim, bool conditional = false);
};

// Gaussian KL(N(mu, exp(logvar)) || N(prior_mean, I)), summed over latent
// dimensions, one value per row.
Vector kl_divergence(const Matrix& mu, const Matrix& logvar,
                     const Matrix& prior_mean);
Vector kl_divergence(const Matrix& mu, const Matrix& logvar);

struct Encoding {
  Matrix mu;
  Matrix logvar;
  Matrix z;
  Matrix noise;  // z = mu + exp(logvar / 2) * noise
};

struct GeneratorLoss {
  double recon = 0.0;
  double latent = 0.0;
  double total = 0.0;
  // Unweighted MSE per hidden level, then the input level.
  std::vector<double> per_level;
};

// Reconstruction targets: classifier taps per hidden level and the encoder
// input itself. `input` must be the batch that produced the Encoding. For an
// image-space generator (zero hidden-level weights) `levels` may be empty.
struct ReconstructionTargets {
  std::vector<Matrix> levels;
  Matrix input;
};

// Variational autoencoder whose encoder mirrors the classifier's FC stack and
// whose decoder emits a reconstruction at every hidden level.
//
// Decoder stage 0 maps z to level H-1; stage j maps level H-j to level
// H-1-j; stage H maps level 0 back to the encoder input width.
// decode_to_level(z, n) runs stages 0 .. H-1-n only.
class Generator {
  // Copyable atomic; sampling may run concurrently with evaluation.
  class StageCounter {
   public:
    StageCounter() = default;
    StageCounter(const StageCounter& other) : value_(other.get()) {}
    StageCounter& operator=(const StageCounter& other) {
      value_.store(other.get());
      return *this;
    }
    void add(int64_t n) const { value_.fetch_add(n, std::memory_order_relaxed); }
    int64_t get() const { return value_.load(std::memory_order_relaxed); }
    void reset() const { value_.store(0); }

   private:
    mutable std::atomic<int64_t> value_{0};
  };

 public:
  Generator() = default;
  static Generator build(const GeneratorSpec& spec, uint64_t seed);

  const GeneratorSpec& spec() const { return spec_; }
  int num_levels() const { return spec_.num_levels(); }
  int latent_dim() const { return spec_.latent_dim; }
  int num_decoder_stages() const { return static_cast<int>(decoder_.size()); }

  Encoding encode(const Matrix& input, Rng& rng) const;
  Encoding encode_with_noise(const Matrix& input, const Matrix& noise) const;

  Matrix decode_to_level(const Matrix& z, int level) const;
  Matrix decode_to_input(const Matrix& z) const;

  // Draws z from the prior and decodes to `level` (or to the input level when
  // level == num_levels()). In conditional mode a missing hint draws classes
  // uniformly from the active set.
  Matrix sample_features(int level, int count, std::optional<int> class_hint,
                         Rng& rng) const;
  // Same, also reporting the class used for each row (conditional mode).
  Matrix sample(int level, int count, std::optional<int> class_hint, Rng& rng,
                std::vector<int>* classes) const;

  GeneratorLoss loss(const ReconstructionTargets& targets, const Encoding& enc,
                     std::span<const int> labels = {}) const;
  // Computes the loss for `enc` (from encode_with_noise) and accumulates
  // gradients into every non-frozen parameter. Gradients are scaled by
  // `weight`.
  GeneratorLoss backward(const ReconstructionTargets& targets,
                         const Encoding& enc, std::span<const int> labels,
                         double weight = 1.0);

  void set_active_classes(std::vector<int> classes);
  const std::vector<int>& active_classes() const { return active_classes_; }

  void freeze_decoder();
  void freeze_encoder();
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;

  // Decoder stages run since construction or the last reset.
  int64_t decoder_stages_executed() const { return stages_executed_.get(); }
  void reset_stage_counter() const { stages_executed_.reset(); }

 private:
  struct DecoderTrace {
    std::vector<Matrix> outputs;  // outputs[j] = stage j output
  };
  Matrix run_decoder_stage(int stage, const Matrix& x) const;
  DecoderTrace decode_all(const Matrix& z) const;
  Matrix prior_means(std::span<const int> labels, Eigen::Index rows) const;
  int level_of_stage(int stage) const { return num_levels() - 1 - stage; }

  GeneratorSpec spec_;
  std::vector<Linear> encoder_;
  Linear mu_head_;
  Linear logvar_head_;
  std::vector<Linear> decoder_;
  Param class_means_;  // num_classes x latent_dim, conditional mode only
  std::vector<int> active_classes_;
  mutable StageCounter stages_executed_;
};

}  // namespace plr

#endif  // PLR_GENERATOR_H_
