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

#ifndef PLR_ARCH_H_
#define PLR_ARCH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "plr/nn.h"
#include "plr/tensor.h"

namespace plr {

enum class Activation { kRelu };

struct ConvLayerSpec {
  int channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
};

// Convolutional feature extractor over (channels, height, width) images.
struct ExtractorSpec {
  int in_channels = 3;
  int height = 32;
  int width = 32;
  std::vector<ConvLayerSpec> layers;

  int image_size() const { return in_channels * height * width; }
  std::vector<ConvGeometry> geometries() const;
  // Flattened extractor output width D.
  int output_width() const;
};

struct ClassifierSpec {
  std::string name;
  ExtractorSpec extractor;
  std::vector<int> hidden_widths;
  int num_classes = 0;
  Activation activation = Activation::kRelu;

  int num_levels() const { return static_cast<int>(hidden_widths.size()); }
  // Throws ConfigError.
  void validate() const;

  // "ARCH1", "ARCH2", "FMNIST3", or "SYNTH" (a small net for 1x8x8 images
  // used by tests and smoke runs).
  static ClassifierSpec preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

// Five 3x3 conv layers with channel doubling 16..256 and stride-2
// downsampling after the first; 32x32 input gives D = 256*2*2 = 1024.
ExtractorSpec cifar_extractor();
// Three 3x3 stride-2 conv layers (16, 32, 64); 28x28 input gives D = 1024.
ExtractorSpec fashion_mnist_extractor();

struct FeatureTaps {
  // levels[n] is the post-activation output of hidden layer n.
  std::vector<Matrix> levels;
};

// Where a forward pass starts.
struct Entry {
  enum class Kind { kImage, kExtractor, kLevel };
  Kind kind = Kind::kImage;
  int level = 0;

  static Entry image() { return {Kind::kImage, 0}; }
  static Entry extractor() { return {Kind::kExtractor, 0}; }
  static Entry at_level(int n) { return {Kind::kLevel, n}; }
};

// Activations recorded by a forward pass for a later backward pass.
struct ForwardTrace {
  int first_stage = 0;
  // outputs[i] is the (post-activation) output of stage first_stage + i;
  // input holds the entry activation.
  Matrix input;
  std::vector<Matrix> outputs;

  const Matrix& logits() const { return outputs.back(); }
};

enum class FreezeScope { kExtractor, kExtractorAndFcUpTo };

// Feature extractor + hidden fully-connected stack + linear output layer
// (softmax applied by the loss or by predict_proba).
//
// Stages are numbered conv_0..conv_{C-1}, fc_0..fc_{H-1}, output. Injection
// at level n enters at stage C + n + 1, the layer consuming hidden layer n's
// output.
class Classifier {
 public:
  Classifier() = default;
  static Classifier build(const ClassifierSpec& spec, uint64_t seed);

  const ClassifierSpec& spec() const { return spec_; }
  int num_levels() const { return spec_.num_levels(); }
  int num_conv() const { return static_cast<int>(convs_.size()); }
  int num_stages() const { return num_conv() + num_levels() + 1; }
  int stage_of(Entry entry) const;
  int output_stage() const { return num_stages() - 1; }
  int level_width(int level) const;
  int extractor_width() const { return spec_.extractor.output_width(); }

  struct Forward {
    Matrix logits;
    FeatureTaps taps;
    Matrix extractor_features;
  };
  Forward forward_with_taps(const Matrix& images) const;
  Matrix forward_from_level(const Matrix& features, int level) const;
  Matrix forward_from_extractor(const Matrix& features) const;
  Matrix extract(const Matrix& images) const;
  // Output of the last hidden layer given features injected at `level`.
  Matrix last_hidden_from_level(const Matrix& features, int level) const;
  Matrix predict_proba(const Matrix& images) const;

  ForwardTrace trace(const Matrix& input, Entry entry) const;
  // Accumulates gradients for every stage the trace covers. Stage weights
  // touched are added to `counter` when given.
  void backward(const ForwardTrace& trace, const Matrix& dlogits,
                TouchCounter* counter = nullptr);

  void freeze(FreezeScope scope, int level = 0);
  void unfreeze_all();
  // Per-stage freeze flags in stage order.
  std::vector<bool> frozen_mask() const;

  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  // Parameters of one stage (weight then bias).
  std::vector<Param*> stage_parameters(int stage);
  Eigen::Index stage_weight_count(int stage) const;

  // Conv weights and biases, in stage order.
  std::vector<Matrix> extractor_state() const;
  void load_extractor_state(const std::vector<Matrix>& state);

 private:
  Matrix run_stage(int stage, const Matrix& x) const;

  ClassifierSpec spec_;
  std::vector<Conv2d> convs_;
  std::vector<Linear> hidden_;
  Linear output_;
};

}  // namespace plr

#endif  // PLR_ARCH_H_
