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

#ifndef PLR_NN_H_
#define PLR_NN_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "plr/tensor.h"

namespace plr {

// A trainable tensor with its gradient accumulator and optimizer state.
//
// `touched` records whether any backward pass wrote to `grad` since the last
// zero_grad(). The optimizer skips untouched parameters, so a parameter that
// received no gradient in a step stays bit-identical, moment estimates
// included.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  int64_t adam_steps = 0;
  bool frozen = false;
  bool touched = false;

  Param() = default;
  Param(std::string param_name, Matrix init);

  Eigen::Index size() const { return value.size(); }
  void zero_grad();
  // No-op on frozen parameters.
  void accumulate(const Matrix& g);
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every parameter that is touched and not frozen.
  void step(std::span<Param* const> params) const;

  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
};

void zero_grad(std::span<Param* const> params);

// Per-stage count of weight-gradient contributions. A linear or conv stage
// with W weights adds W for every batch row that reaches its backward pass.
// Biases are not counted.
struct TouchCounter {
  std::vector<uint64_t> per_stage;

  void add(std::size_t stage, uint64_t count);
  uint64_t total() const;
  uint64_t range(std::size_t first, std::size_t last) const;  // [first, last)
  void reset() { per_stage.assign(per_stage.size(), 0); }
};

// Fully-connected layer y = x W + b, with W stored in_features x out_features.
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, const std::string& name, Rng& rng);

  int in_features() const { return static_cast<int>(weight.value.rows()); }
  int out_features() const { return static_cast<int>(weight.value.cols()); }
  Eigen::Index weight_count() const { return weight.size(); }

  Matrix forward(const Matrix& x) const;
  // Accumulates parameter gradients; returns dL/dx when `need_input_grad`.
  Matrix backward(const Matrix& x, const Matrix& dy, bool need_input_grad);

  Param weight;
  Param bias;
};

struct ConvGeometry {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int padding = 1;

  int out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
  int out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
  int in_size() const { return in_channels * in_height * in_width; }
  int out_size() const { return out_channels * out_height() * out_width(); }
};

// 2-D convolution over channel-major (C, H, W) flattened rows, implemented as
// im2col followed by a GEMM per image.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const ConvGeometry& geometry, const std::string& name, Rng& rng);

  const ConvGeometry& geometry() const { return geometry_; }
  Eigen::Index weight_count() const { return weight.size(); }

  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& x, const Matrix& dy, bool need_input_grad);

  Param weight;  // (in_channels * kernel * kernel) x out_channels
  Param bias;    // 1 x out_channels

 private:
  Matrix im2col(const double* image) const;
  void col2im(const Matrix& cols, double* image) const;

  ConvGeometry geometry_;
};

void relu_inplace(Matrix& x);
// dy restricted to positions where the activation output is positive.
Matrix relu_backward(const Matrix& activated, const Matrix& dy);

Matrix softmax(const Matrix& logits, double temperature = 1.0);
Matrix log_softmax(const Matrix& logits, double temperature = 1.0);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // dL/dlogits
};

// Mean cross-entropy against hard labels.
LossAndGrad cross_entropy(const Matrix& logits, std::span<const int> labels);

// Mean soft-target cross-entropy at temperature T, scaled by T^2 so gradient
// magnitudes stay comparable across temperatures.
LossAndGrad distillation(const Matrix& logits, const Matrix& target_probs,
                         double temperature);

// Mean over all elements of (prediction - target)^2.
LossAndGrad mean_squared_error(const Matrix& prediction, const Matrix& target);

std::vector<int> argmax_rows(const Matrix& m);

}  // namespace plr

#endif  // PLR_NN_H_
