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

#include "plr/nn.h"

#include <cmath>
#include <numeric>

#include "plr/error.h"
#include "plr/random.h"

namespace plr {
namespace {

Matrix fan_in_uniform(Eigen::Index rows, Eigen::Index cols, int fan_in,
                      Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = uniform(rng, -bound, bound);
  }
  return m;
}

}  // namespace

Param::Param(std::string param_name, Matrix init)
    : name(std::move(param_name)), value(std::move(init)) {
  grad = Matrix::Zero(value.rows(), value.cols());
  adam_m = Matrix::Zero(value.rows(), value.cols());
  adam_v = Matrix::Zero(value.rows(), value.cols());
}

void Param::zero_grad() {
  grad.setZero();
  touched = false;
}

void Param::accumulate(const Matrix& g) {
  if (frozen) return;
  grad += g;
  touched = true;
}

void Adam::step(std::span<Param* const> params) const {
  for (Param* p : params) {
    if (p->frozen || !p->touched) continue;
    ++p->adam_steps;
    const double t = static_cast<double>(p->adam_steps);
    const double bias1 = 1.0 - std::pow(config_.beta1, t);
    const double bias2 = 1.0 - std::pow(config_.beta2, t);
    p->adam_m = config_.beta1 * p->adam_m + (1.0 - config_.beta1) * p->grad;
    p->adam_v = config_.beta2 * p->adam_v +
                (1.0 - config_.beta2) * p->grad.cwiseProduct(p->grad);
    const double step = config_.learning_rate / bias1;
    p->value.array() -=
        step * p->adam_m.array() /
        ((p->adam_v.array() / bias2).sqrt() + config_.epsilon);
  }
}

void zero_grad(std::span<Param* const> params) {
  for (Param* p : params) p->zero_grad();
}

void TouchCounter::add(std::size_t stage, uint64_t count) {
  if (stage >= per_stage.size()) per_stage.resize(stage + 1, 0);
  per_stage[stage] += count;
}

uint64_t TouchCounter::total() const {
  return std::accumulate(per_stage.begin(), per_stage.end(), uint64_t{0});
}

uint64_t TouchCounter::range(std::size_t first, std::size_t last) const {
  uint64_t sum = 0;
  for (std::size_t i = first; i < last && i < per_stage.size(); ++i) {
    sum += per_stage[i];
  }
  return sum;
}

Linear::Linear(int in_features, int out_features, const std::string& name,
               Rng& rng) {
  if (in_features <= 0 || out_features <= 0) {
    throw ConfigError("linear layer '" + name + "' needs positive widths");
  }
  weight = Param(name + ".weight",
                 fan_in_uniform(in_features, out_features, in_features, rng));
  bias = Param(name + ".bias", fan_in_uniform(1, out_features, in_features, rng));
}

Matrix Linear::forward(const Matrix& x) const {
  if (x.cols() != weight.value.rows()) {
    throw InputError(weight.name + ": expected width " +
                     std::to_string(weight.value.rows()) + ", got " +
                     std::to_string(x.cols()));
  }
  Matrix y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy,
                        bool need_input_grad) {
  if (!weight.frozen) {
    weight.accumulate(x.transpose() * dy);
    bias.accumulate(dy.colwise().sum());
  }
  if (!need_input_grad) return Matrix();
  return dy * weight.value.transpose();
}

Conv2d::Conv2d(const ConvGeometry& geometry, const std::string& name, Rng& rng)
    : geometry_(geometry) {
  const ConvGeometry& g = geometry_;
  if (g.in_channels <= 0 || g.out_channels <= 0 || g.kernel <= 0 ||
      g.stride <= 0 || g.padding < 0 || g.out_height() <= 0 ||
      g.out_width() <= 0) {
    throw ConfigError("conv layer '" + name + "' has invalid geometry");
  }
  const int fan_in = g.in_channels * g.kernel * g.kernel;
  weight = Param(name + ".weight",
                 fan_in_uniform(fan_in, g.out_channels, fan_in, rng));
  bias = Param(name + ".bias", fan_in_uniform(1, g.out_channels, fan_in, rng));
}

Matrix Conv2d::im2col(const double* image) const {
  const ConvGeometry& g = geometry_;
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int k = g.kernel;
  Matrix cols = Matrix::Zero(oh * ow, g.in_channels * k * k);
  for (int c = 0; c < g.in_channels; ++c) {
    const double* plane = image + c * g.in_height * g.in_width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const int col = (c * k + ki) * k + kj;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.stride - g.padding + ki;
          if (iy < 0 || iy >= g.in_height) continue;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.stride - g.padding + kj;
            if (ix < 0 || ix >= g.in_width) continue;
            cols(y * ow + x, col) = plane[iy * g.in_width + ix];
          }
        }
      }
    }
  }
  return cols;
}

void Conv2d::col2im(const Matrix& cols, double* image) const {
  const ConvGeometry& g = geometry_;
  const int oh = g.out_height();
  const int ow = g.out_width();
  const int k = g.kernel;
  for (int c = 0; c < g.in_channels; ++c) {
    double* plane = image + c * g.in_height * g.in_width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const int col = (c * k + ki) * k + kj;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.stride - g.padding + ki;
          if (iy < 0 || iy >= g.in_height) continue;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.stride - g.padding + kj;
            if (ix < 0 || ix >= g.in_width) continue;
            plane[iy * g.in_width + ix] += cols(y * ow + x, col);
          }
        }
      }
    }
  }
}

Matrix Conv2d::forward(const Matrix& x) const {
  const ConvGeometry& g = geometry_;
  if (x.cols() != g.in_size()) {
    throw InputError(weight.name + ": expected image size " +
                     std::to_string(g.in_size()) + ", got " +
                     std::to_string(x.cols()));
  }
  const int spatial = g.out_height() * g.out_width();
  Matrix out(x.rows(), g.out_size());
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    Matrix y = im2col(x.row(n).data()) * weight.value;
    y.rowwise() += bias.value.row(0);
    // (spatial x channels) -> channel-major row
    Eigen::Map<Matrix>(out.row(n).data(), g.out_channels, spatial) =
        y.transpose();
  }
  return out;
}

Matrix Conv2d::backward(const Matrix& x, const Matrix& dy,
                        bool need_input_grad) {
  const ConvGeometry& g = geometry_;
  const int spatial = g.out_height() * g.out_width();
  Matrix dw = Matrix::Zero(weight.value.rows(), weight.value.cols());
  Matrix db = Matrix::Zero(1, g.out_channels);
  Matrix dx;
  if (need_input_grad) dx = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const Matrix dout =
        Eigen::Map<const Matrix>(dy.row(n).data(), g.out_channels, spatial)
            .transpose();
    if (!weight.frozen) {
      dw.noalias() += im2col(x.row(n).data()).transpose() * dout;
      db += dout.colwise().sum();
    }
    if (need_input_grad) {
      col2im(dout * weight.value.transpose(), dx.row(n).data());
    }
  }
  if (!weight.frozen) {
    weight.accumulate(dw);
    bias.accumulate(db);
  }
  return dx;
}

void relu_inplace(Matrix& x) { x = x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& activated, const Matrix& dy) {
  return (activated.array() > 0.0).select(dy, 0.0);
}

Matrix log_softmax(const Matrix& logits, double temperature) {
  Matrix scaled = logits / temperature;
  const Eigen::VectorXd row_max = scaled.rowwise().maxCoeff();
  scaled.colwise() -= row_max;
  const Eigen::VectorXd log_norm =
      scaled.array().exp().rowwise().sum().log().matrix();
  scaled.colwise() -= log_norm;
  return scaled;
}

Matrix softmax(const Matrix& logits, double temperature) {
  return log_softmax(logits, temperature).array().exp().matrix();
}

LossAndGrad cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw InputError("cross_entropy: label count does not match batch");
  }
  LossAndGrad out;
  const Eigen::Index batch = logits.rows();
  if (batch == 0) {
    out.grad = Matrix::Zero(0, logits.cols());
    return out;
  }
  const Matrix logp = log_softmax(logits);
  out.grad = logp.array().exp().matrix();
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= logits.cols()) {
      throw InputError("cross_entropy: label out of range");
    }
    out.loss -= logp(i, y);
    out.grad(i, y) -= 1.0;
  }
  out.loss /= static_cast<double>(batch);
  out.grad /= static_cast<double>(batch);
  return out;
}

LossAndGrad distillation(const Matrix& logits, const Matrix& target_probs,
                         double temperature) {
  if (logits.rows() != target_probs.rows() ||
      logits.cols() != target_probs.cols()) {
    throw InputError("distillation: target shape does not match logits");
  }
  LossAndGrad out;
  const Eigen::Index batch = logits.rows();
  if (batch == 0) {
    out.grad = Matrix::Zero(0, logits.cols());
    return out;
  }
  const Matrix logp = log_softmax(logits, temperature);
  const double t2 = temperature * temperature;
  out.loss = -t2 * (target_probs.array() * logp.array()).sum() /
             static_cast<double>(batch);
  out.grad = (logp.array().exp() - target_probs.array()).matrix() *
             (temperature / static_cast<double>(batch));
  return out;
}

LossAndGrad mean_squared_error(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw InputError("mean_squared_error: shape mismatch");
  }
  LossAndGrad out;
  const double n = static_cast<double>(prediction.size());
  if (n == 0) {
    out.grad = Matrix::Zero(prediction.rows(), prediction.cols());
    return out;
  }
  const Matrix diff = prediction - target;
  out.loss = diff.squaredNorm() / n;
  out.grad = diff * (2.0 / n);
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index idx;
    m.row(i).maxCoeff(&idx);
    out[static_cast<size_t>(i)] = static_cast<int>(idx);
  }
  return out;
}

}  // namespace plr
