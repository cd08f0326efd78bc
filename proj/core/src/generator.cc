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

#include "plr/generator.h"

#include <cmath>

#include "plr/error.h"
#include "plr/random.h"

namespace plr {

double GeneratorSpec::resolved_latent_weight() const {
  if (latent_weight > 0.0) return latent_weight;
  return 1.0 / static_cast<double>(input_width);
}

double GeneratorSpec::level_weight(int index) const {
  if (level_weights.empty()) return 1.0;
  return level_weights.at(static_cast<size_t>(index));
}

void GeneratorSpec::validate() const {
  if (latent_dim <= 0) throw ConfigError("latent_dim must be positive");
  if (input_width <= 0) throw ConfigError("generator input width must be positive");
  if (hidden_widths.empty()) throw ConfigError("generator needs hidden levels");
  for (int w : hidden_widths) {
    if (w <= 0) throw ConfigError("generator widths must be positive");
  }
  if (!level_weights.empty() &&
      level_weights.size() != hidden_widths.size() + 1) {
    throw ConfigError("level_weights needs one entry per hidden level plus one");
  }
  for (double w : level_weights) {
    if (w < 0.0) throw ConfigError("level_weights must be non-negative");
  }
  if (conditional && num_classes <= 0) {
    throw ConfigError("conditional generator needs num_classes > 0");
  }
}

GeneratorSpec GeneratorSpec::mirror(const ClassifierSpec& classifier,
                                    int latent_dim, bool conditional) {
  classifier.validate();
  GeneratorSpec spec;
  spec.input_width = classifier.extractor.output_width();
  spec.hidden_widths = classifier.hidden_widths;
  spec.latent_dim = latent_dim;
  spec.conditional = conditional;
  spec.num_classes = classifier.num_classes;
  spec.input_activation = classifier.extractor.layers.empty()
                              ? OutputActivation::kIdentity
                              : OutputActivation::kRelu;
  return spec;
}

GeneratorSpec GeneratorSpec::image_space(const ClassifierSpec& classifier,
                                         int latent_dim, bool conditional) {
  classifier.validate();
  GeneratorSpec spec;
  spec.input_width = classifier.extractor.image_size();
  spec.hidden_widths = classifier.hidden_widths;
  spec.latent_dim = latent_dim;
  spec.conditional = conditional;
  spec.num_classes = classifier.num_classes;
  spec.input_activation = OutputActivation::kIdentity;
  spec.level_weights.assign(classifier.hidden_widths.size(), 0.0);
  spec.level_weights.push_back(1.0);
  return spec;
}

Vector kl_divergence(const Matrix& mu, const Matrix& logvar,
                     const Matrix& prior_mean) {
  const Matrix diff = mu - prior_mean;
  return 0.5 * (logvar.array().exp() + diff.array().square() - 1.0 -
                logvar.array())
                   .rowwise()
                   .sum()
                   .matrix();
}

Vector kl_divergence(const Matrix& mu, const Matrix& logvar) {
  return kl_divergence(mu, logvar, Matrix::Zero(mu.rows(), mu.cols()));
}

Generator Generator::build(const GeneratorSpec& spec, uint64_t seed) {
  spec.validate();
  Generator g;
  g.spec_ = spec;
  Rng rng(seed);
  const int levels = spec.num_levels();
  int in = spec.input_width;
  for (int i = 0; i < levels; ++i) {
    const int out = spec.hidden_widths[static_cast<size_t>(i)];
    g.encoder_.emplace_back(in, out, "enc" + std::to_string(i), rng);
    in = out;
  }
  g.mu_head_ = Linear(in, spec.latent_dim, "mu", rng);
  g.logvar_head_ = Linear(in, spec.latent_dim, "logvar", rng);
  g.decoder_.emplace_back(spec.latent_dim, spec.hidden_widths.back(), "dec0",
                          rng);
  for (int j = 1; j <= levels; ++j) {
    const int from = spec.hidden_widths[static_cast<size_t>(levels - j)];
    const int to = (j == levels)
                       ? spec.input_width
                       : spec.hidden_widths[static_cast<size_t>(levels - 1 - j)];
    g.decoder_.emplace_back(from, to, "dec" + std::to_string(j), rng);
  }
  if (spec.conditional) {
    g.class_means_ = Param("class_means",
                           standard_normal(spec.num_classes, spec.latent_dim, rng));
    for (int c = 0; c < spec.num_classes; ++c) g.active_classes_.push_back(c);
  }
  return g;
}

Encoding Generator::encode(const Matrix& input, Rng& rng) const {
  return encode_with_noise(input,
                           standard_normal(input.rows(), spec_.latent_dim, rng));
}

Encoding Generator::encode_with_noise(const Matrix& input,
                                      const Matrix& noise) const {
  if (input.cols() != spec_.input_width) {
    throw InputError("generator expects width " +
                     std::to_string(spec_.input_width) + ", got " +
                     std::to_string(input.cols()));
  }
  if (noise.rows() != input.rows() || noise.cols() != spec_.latent_dim) {
    throw InputError("noise shape does not match batch x latent_dim");
  }
  Matrix h = input;
  for (const Linear& layer : encoder_) {
    h = layer.forward(h);
    relu_inplace(h);
  }
  Encoding enc;
  enc.mu = mu_head_.forward(h);
  enc.logvar = logvar_head_.forward(h);
  enc.noise = noise;
  enc.z = enc.mu + ((0.5 * enc.logvar.array()).exp() * noise.array()).matrix();
  return enc;
}

Matrix Generator::run_decoder_stage(int stage, const Matrix& x) const {
  stages_executed_.add(1);
  Matrix y = decoder_[static_cast<size_t>(stage)].forward(x);
  const bool is_input_stage = stage == num_levels();
  if (!is_input_stage || spec_.input_activation == OutputActivation::kRelu) {
    relu_inplace(y);
  }
  return y;
}

Matrix Generator::decode_to_level(const Matrix& z, int level) const {
  if (level < 0 || level > num_levels()) {
    throw InputError("decode level " + std::to_string(level) +
                     " out of range [0, " + std::to_string(num_levels()) + "]");
  }
  if (z.cols() != spec_.latent_dim) {
    throw InputError("latent batch has the wrong width");
  }
  // Level n < H needs stages 0 .. H-1-n; the input level needs all H+1.
  const int stages =
      level == num_levels() ? num_decoder_stages() : num_levels() - level;
  Matrix x = z;
  for (int s = 0; s < stages; ++s) x = run_decoder_stage(s, x);
  return x;
}

Matrix Generator::decode_to_input(const Matrix& z) const {
  return decode_to_level(z, num_levels());
}

Generator::DecoderTrace Generator::decode_all(const Matrix& z) const {
  DecoderTrace t;
  const Matrix* x = &z;
  for (int s = 0; s < num_decoder_stages(); ++s) {
    t.outputs.push_back(run_decoder_stage(s, *x));
    x = &t.outputs.back();
  }
  return t;
}

void Generator::set_active_classes(std::vector<int> classes) {
  for (int c : classes) {
    if (c < 0 || c >= spec_.num_classes) {
      throw InputError("active class out of range");
    }
  }
  active_classes_ = std::move(classes);
}

Matrix Generator::prior_means(std::span<const int> labels,
                              Eigen::Index rows) const {
  Matrix m = Matrix::Zero(rows, spec_.latent_dim);
  if (!spec_.conditional) return m;
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw InputError("conditional generator needs one label per row");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int c = labels[static_cast<size_t>(i)];
    if (c < 0 || c >= spec_.num_classes) throw InputError("label out of range");
    m.row(i) = class_means_.value.row(c);
  }
  return m;
}

Matrix Generator::sample(int level, int count, std::optional<int> class_hint,
                         Rng& rng, std::vector<int>* classes) const {
  if (count < 0) throw InputError("sample count must be non-negative");
  if (class_hint.has_value() && !spec_.conditional) {
    throw ConfigError("class hint given to an unconditional generator");
  }
  if (level < 0 || level > num_levels()) {
    throw InputError("sample level out of range");
  }
  const int width = level == num_levels()
                        ? spec_.input_width
                        : spec_.hidden_widths[static_cast<size_t>(level)];
  if (classes != nullptr) classes->clear();
  if (count == 0) return Matrix(0, width);

  Matrix z = standard_normal(count, spec_.latent_dim, rng);
  if (spec_.conditional) {
    if (!class_hint.has_value() && active_classes_.empty()) {
      throw ConfigError("conditional sampling with no active classes");
    }
    std::vector<int> drawn(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int c = class_hint.has_value()
                        ? *class_hint
                        : active_classes_[static_cast<size_t>(uniform_index(
                              rng, static_cast<int64_t>(active_classes_.size())))];
      drawn[static_cast<size_t>(i)] = c;
    }
    z += prior_means(drawn, count);
    if (classes != nullptr) *classes = std::move(drawn);
  }
  return decode_to_level(z, level);
}

Matrix Generator::sample_features(int level, int count,
                                  std::optional<int> class_hint, Rng& rng) const {
  return sample(level, count, class_hint, rng, nullptr);
}

GeneratorLoss Generator::loss(const ReconstructionTargets& targets,
                              const Encoding& enc,
                              std::span<const int> labels) const {
  return const_cast<Generator*>(this)->backward(targets, enc, labels, 0.0);
}

GeneratorLoss Generator::backward(const ReconstructionTargets& targets,
                                  const Encoding& enc,
                                  std::span<const int> labels, double weight) {
  const int levels = num_levels();
  const Eigen::Index batch = enc.z.rows();
  if (targets.input.rows() != batch || targets.input.cols() != spec_.input_width) {
    throw InputError("reconstruction target for the input level has the wrong shape");
  }
  for (int n = 0; n < levels; ++n) {
    if (spec_.level_weight(n) == 0.0) continue;
    if (static_cast<int>(targets.levels.size()) != levels) {
      throw InputError("reconstruction targets need one tensor per level");
    }
  }

  GeneratorLoss out;
  out.per_level.assign(static_cast<size_t>(levels + 1), 0.0);

  // Encoder activations are recomputed here so gradients can flow back.
  std::vector<Matrix> enc_acts{targets.input};
  for (const Linear& layer : encoder_) {
    Matrix h = layer.forward(enc_acts.back());
    relu_inplace(h);
    enc_acts.push_back(std::move(h));
  }
  const DecoderTrace dec = decode_all(enc.z);

  // Reconstruction terms: stage j < H reconstructs level H-1-j, stage H the
  // input.
  std::vector<Matrix> d_out(static_cast<size_t>(num_decoder_stages()));
  for (int s = 0; s < num_decoder_stages(); ++s) {
    const bool is_input = s == levels;
    const int index = is_input ? levels : level_of_stage(s);
    const double w = spec_.level_weight(index);
    const Matrix& out_s = dec.outputs[static_cast<size_t>(s)];
    if (!is_input && static_cast<int>(targets.levels.size()) != levels) {
      d_out[static_cast<size_t>(s)] = Matrix::Zero(out_s.rows(), out_s.cols());
      continue;
    }
    const Matrix& target =
        is_input ? targets.input : targets.levels[static_cast<size_t>(index)];
    LossAndGrad mse = mean_squared_error(out_s, target);
    out.per_level[static_cast<size_t>(index)] = mse.loss;
    out.recon += w * mse.loss;
    d_out[static_cast<size_t>(s)] = mse.grad * (w * weight);
  }

  const double latent_weight = spec_.resolved_latent_weight();
  const Matrix prior = prior_means(labels, batch);
  const Vector kl = kl_divergence(enc.mu, enc.logvar, prior);
  out.latent = batch > 0 ? latent_weight * kl.mean() : 0.0;
  out.total = out.recon + out.latent;
  if (weight == 0.0 || batch == 0) return out;

  // Decoder backward, deepest reconstruction first.
  Matrix upstream;
  for (int s = num_decoder_stages() - 1; s >= 0; --s) {
    Matrix dy = d_out[static_cast<size_t>(s)];
    if (upstream.size() > 0) dy += upstream;
    const Matrix& y = dec.outputs[static_cast<size_t>(s)];
    const bool relu = s != levels ||
                      spec_.input_activation == OutputActivation::kRelu;
    if (relu) dy = relu_backward(y, dy);
    const Matrix& x = s == 0 ? enc.z : dec.outputs[static_cast<size_t>(s - 1)];
    upstream = decoder_[static_cast<size_t>(s)].backward(x, dy, true);
  }
  const Matrix& dz = upstream;

  const double kl_scale = weight * latent_weight / static_cast<double>(batch);
  const Matrix diff = enc.mu - prior;
  const Matrix std_dev = (0.5 * enc.logvar.array()).exp().matrix();
  Matrix dmu = dz + kl_scale * diff;
  Matrix dlogvar =
      (dz.array() * enc.noise.array() * std_dev.array() * 0.5).matrix() +
      kl_scale * 0.5 * (enc.logvar.array().exp() - 1.0).matrix();
  if (spec_.conditional && !class_means_.frozen) {
    Matrix dmeans = Matrix::Zero(class_means_.value.rows(), class_means_.value.cols());
    for (Eigen::Index i = 0; i < batch; ++i) {
      dmeans.row(labels[static_cast<size_t>(i)]) -= kl_scale * diff.row(i);
    }
    class_means_.accumulate(dmeans);
  }

  const Matrix& h = enc_acts.back();
  Matrix dh = mu_head_.backward(h, dmu, true) +
              logvar_head_.backward(h, dlogvar, true);
  for (int i = static_cast<int>(encoder_.size()) - 1; i >= 0; --i) {
    dh = relu_backward(enc_acts[static_cast<size_t>(i + 1)], dh);
    dh = encoder_[static_cast<size_t>(i)].backward(
        enc_acts[static_cast<size_t>(i)], dh, i > 0);
  }
  return out;
}

void Generator::freeze_decoder() {
  for (Linear& l : decoder_) {
    l.weight.frozen = true;
    l.bias.frozen = true;
  }
}

void Generator::freeze_encoder() {
  for (Linear& l : encoder_) {
    l.weight.frozen = true;
    l.bias.frozen = true;
  }
  mu_head_.weight.frozen = mu_head_.bias.frozen = true;
  logvar_head_.weight.frozen = logvar_head_.bias.frozen = true;
}

std::vector<Param*> Generator::parameters() {
  std::vector<Param*> out;
  for (Linear& l : encoder_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  out.push_back(&mu_head_.weight);
  out.push_back(&mu_head_.bias);
  out.push_back(&logvar_head_.weight);
  out.push_back(&logvar_head_.bias);
  for (Linear& l : decoder_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  if (spec_.conditional) out.push_back(&class_means_);
  return out;
}

std::vector<const Param*> Generator::parameters() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<Generator*>(this)->parameters()) out.push_back(p);
  return out;
}

}  // namespace plr
