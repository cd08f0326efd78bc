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

#include "plr/arch.h"

#include <algorithm>

#include "plr/error.h"

namespace plr {

std::vector<ConvGeometry> ExtractorSpec::geometries() const {
  std::vector<ConvGeometry> out;
  int c = in_channels, h = height, w = width;
  for (const ConvLayerSpec& layer : layers) {
    ConvGeometry g;
    g.in_channels = c;
    g.in_height = h;
    g.in_width = w;
    g.out_channels = layer.channels;
    g.kernel = layer.kernel;
    g.stride = layer.stride;
    g.padding = layer.padding;
    out.push_back(g);
    c = g.out_channels;
    h = g.out_height();
    w = g.out_width();
  }
  return out;
}

int ExtractorSpec::output_width() const {
  if (layers.empty()) return image_size();
  return geometries().back().out_size();
}

ExtractorSpec cifar_extractor() {
  ExtractorSpec e;
  e.in_channels = 3;
  e.height = 32;
  e.width = 32;
  e.layers = {{16, 3, 1, 1}, {32, 3, 2, 1}, {64, 3, 2, 1}, {128, 3, 2, 1},
              {256, 3, 2, 1}};
  return e;
}

ExtractorSpec fashion_mnist_extractor() {
  ExtractorSpec e;
  e.in_channels = 1;
  e.height = 28;
  e.width = 28;
  e.layers = {{16, 3, 2, 1}, {32, 3, 2, 1}, {64, 3, 2, 1}};
  return e;
}

void ClassifierSpec::validate() const {
  if (hidden_widths.empty()) {
    throw ConfigError("classifier '" + name + "' has an empty hidden stack");
  }
  for (int w : hidden_widths) {
    if (w <= 0) {
      throw ConfigError("classifier '" + name + "' has a non-positive width");
    }
  }
  if (num_classes <= 0) {
    throw ConfigError("classifier '" + name + "' needs num_classes > 0");
  }
  if (extractor.in_channels <= 0 || extractor.height <= 0 ||
      extractor.width <= 0) {
    throw ConfigError("classifier '" + name + "' has an invalid image shape");
  }
  for (const ConvGeometry& g : extractor.geometries()) {
    if (g.out_channels <= 0 || g.kernel <= 0 || g.stride <= 0 ||
        g.out_height() <= 0 || g.out_width() <= 0) {
      throw ConfigError("classifier '" + name + "' has an invalid conv layer");
    }
  }
}

ClassifierSpec ClassifierSpec::preset(std::string_view name) {
  ClassifierSpec spec;
  spec.name = std::string(name);
  if (name == "ARCH1") {
    spec.extractor = cifar_extractor();
    spec.hidden_widths = {2000, 2000};
    spec.num_classes = 100;
  } else if (name == "ARCH2") {
    spec.extractor = cifar_extractor();
    spec.hidden_widths = {1000, 1000, 1000};
    spec.num_classes = 100;
  } else if (name == "FMNIST3") {
    spec.extractor = fashion_mnist_extractor();
    spec.hidden_widths = {50, 50, 50};
    spec.num_classes = 10;
  } else if (name == "SYNTH") {
    spec.extractor.in_channels = 1;
    spec.extractor.height = 8;
    spec.extractor.width = 8;
    spec.extractor.layers = {{4, 3, 2, 1}, {8, 3, 2, 1}};
    spec.hidden_widths = {64, 32};
    spec.num_classes = 10;
  } else {
    throw ConfigError("unknown architecture preset '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<std::string> ClassifierSpec::preset_names() {
  return {"ARCH1", "ARCH2", "FMNIST3", "SYNTH"};
}

Classifier Classifier::build(const ClassifierSpec& spec, uint64_t seed) {
  spec.validate();
  Classifier c;
  c.spec_ = spec;
  Rng rng(seed);
  int i = 0;
  for (const ConvGeometry& g : spec.extractor.geometries()) {
    c.convs_.emplace_back(g, "conv" + std::to_string(i++), rng);
  }
  int in = spec.extractor.output_width();
  for (size_t n = 0; n < spec.hidden_widths.size(); ++n) {
    c.hidden_.emplace_back(in, spec.hidden_widths[n], "fc" + std::to_string(n),
                           rng);
    in = spec.hidden_widths[n];
  }
  c.output_ = Linear(in, spec.num_classes, "output", rng);
  return c;
}

int Classifier::stage_of(Entry entry) const {
  switch (entry.kind) {
    case Entry::Kind::kImage:
      return 0;
    case Entry::Kind::kExtractor:
      return num_conv();
    case Entry::Kind::kLevel:
      if (entry.level < 0 || entry.level >= num_levels()) {
        throw InputError("injection level " + std::to_string(entry.level) +
                         " out of range [0, " + std::to_string(num_levels()) +
                         ")");
      }
      return num_conv() + entry.level + 1;
  }
  return 0;
}

int Classifier::level_width(int level) const {
  if (level < 0 || level >= num_levels()) {
    throw InputError("level " + std::to_string(level) + " out of range");
  }
  return spec_.hidden_widths[static_cast<size_t>(level)];
}

Matrix Classifier::run_stage(int stage, const Matrix& x) const {
  if (stage < num_conv()) {
    Matrix y = convs_[static_cast<size_t>(stage)].forward(x);
    relu_inplace(y);
    return y;
  }
  const int fc = stage - num_conv();
  if (fc < num_levels()) {
    Matrix y = hidden_[static_cast<size_t>(fc)].forward(x);
    relu_inplace(y);
    return y;
  }
  return output_.forward(x);
}

Classifier::Forward Classifier::forward_with_taps(const Matrix& images) const {
  if (images.cols() != spec_.extractor.image_size()) {
    throw InputError("image batch width " + std::to_string(images.cols()) +
                     " does not match " +
                     std::to_string(spec_.extractor.image_size()));
  }
  Forward out;
  Matrix x = images;
  for (int s = 0; s < num_conv(); ++s) x = run_stage(s, x);
  out.extractor_features = x;
  for (int n = 0; n < num_levels(); ++n) {
    x = run_stage(num_conv() + n, x);
    out.taps.levels.push_back(x);
  }
  out.logits = run_stage(output_stage(), x);
  return out;
}

Matrix Classifier::forward_from_level(const Matrix& features, int level) const {
  const int first = stage_of(Entry::at_level(level));
  if (features.cols() != level_width(level)) {
    throw InputError("features of width " + std::to_string(features.cols()) +
                     " injected at level " + std::to_string(level) +
                     " of width " + std::to_string(level_width(level)));
  }
  Matrix x = features;
  for (int s = first; s < num_stages(); ++s) x = run_stage(s, x);
  return x;
}

Matrix Classifier::forward_from_extractor(const Matrix& features) const {
  if (features.cols() != extractor_width()) {
    throw InputError("extractor features have the wrong width");
  }
  Matrix x = features;
  for (int s = num_conv(); s < num_stages(); ++s) x = run_stage(s, x);
  return x;
}

Matrix Classifier::extract(const Matrix& images) const {
  if (images.cols() != spec_.extractor.image_size()) {
    throw InputError("image batch has the wrong width");
  }
  Matrix x = images;
  for (int s = 0; s < num_conv(); ++s) x = run_stage(s, x);
  return x;
}

Matrix Classifier::last_hidden_from_level(const Matrix& features,
                                          int level) const {
  const int first = stage_of(Entry::at_level(level));
  if (features.cols() != level_width(level)) {
    throw InputError("features have the wrong width for their level");
  }
  Matrix x = features;
  for (int s = first; s < output_stage(); ++s) x = run_stage(s, x);
  return x;
}

Matrix Classifier::predict_proba(const Matrix& images) const {
  return softmax(forward_with_taps(images).logits);
}

ForwardTrace Classifier::trace(const Matrix& input, Entry entry) const {
  ForwardTrace t;
  t.first_stage = stage_of(entry);
  int expected = 0;
  if (entry.kind == Entry::Kind::kImage) {
    expected = spec_.extractor.image_size();
  } else if (entry.kind == Entry::Kind::kExtractor) {
    expected = extractor_width();
  } else {
    expected = level_width(entry.level);
  }
  if (input.cols() != expected) {
    throw InputError("trace input width " + std::to_string(input.cols()) +
                     " != " + std::to_string(expected));
  }
  t.input = input;
  const Matrix* x = &t.input;
  for (int s = t.first_stage; s < num_stages(); ++s) {
    t.outputs.push_back(run_stage(s, *x));
    x = &t.outputs.back();
  }
  return t;
}

void Classifier::backward(const ForwardTrace& trace, const Matrix& dlogits,
                          TouchCounter* counter) {
  Matrix dy = dlogits;
  const uint64_t rows = static_cast<uint64_t>(dlogits.rows());
  for (int s = num_stages() - 1; s >= trace.first_stage; --s) {
    const size_t i = static_cast<size_t>(s - trace.first_stage);
    const Matrix& x = (i == 0) ? trace.input : trace.outputs[i - 1];
    const bool need_dx = s > trace.first_stage;
    bool frozen = false;
    if (s == output_stage()) {
      dy = output_.backward(x, dy, need_dx);
      frozen = output_.weight.frozen;
    } else if (s >= num_conv()) {
      Linear& layer = hidden_[static_cast<size_t>(s - num_conv())];
      dy = layer.backward(x, relu_backward(trace.outputs[i], dy), need_dx);
      frozen = layer.weight.frozen;
    } else {
      Conv2d& layer = convs_[static_cast<size_t>(s)];
      dy = layer.backward(x, relu_backward(trace.outputs[i], dy), need_dx);
      frozen = layer.weight.frozen;
    }
    if (counter != nullptr && !frozen) {
      counter->add(static_cast<size_t>(s),
                   rows * static_cast<uint64_t>(stage_weight_count(s)));
    }
  }
}

void Classifier::freeze(FreezeScope scope, int level) {
  for (Conv2d& c : convs_) {
    c.weight.frozen = true;
    c.bias.frozen = true;
  }
  if (scope == FreezeScope::kExtractorAndFcUpTo) {
    if (level < 0 || level >= num_levels()) {
      throw InputError("freeze level out of range");
    }
    for (int n = 0; n <= level; ++n) {
      hidden_[static_cast<size_t>(n)].weight.frozen = true;
      hidden_[static_cast<size_t>(n)].bias.frozen = true;
    }
  }
}

void Classifier::unfreeze_all() {
  for (Param* p : parameters()) p->frozen = false;
}

std::vector<bool> Classifier::frozen_mask() const {
  std::vector<bool> mask;
  for (const Conv2d& c : convs_) mask.push_back(c.weight.frozen);
  for (const Linear& l : hidden_) mask.push_back(l.weight.frozen);
  mask.push_back(output_.weight.frozen);
  return mask;
}

std::vector<Param*> Classifier::parameters() {
  std::vector<Param*> out;
  for (int s = 0; s < num_stages(); ++s) {
    for (Param* p : stage_parameters(s)) out.push_back(p);
  }
  return out;
}

std::vector<const Param*> Classifier::parameters() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<Classifier*>(this)->parameters()) out.push_back(p);
  return out;
}

std::vector<Param*> Classifier::stage_parameters(int stage) {
  if (stage < 0 || stage >= num_stages()) {
    throw InputError("stage out of range");
  }
  if (stage < num_conv()) {
    Conv2d& c = convs_[static_cast<size_t>(stage)];
    return {&c.weight, &c.bias};
  }
  if (stage < output_stage()) {
    Linear& l = hidden_[static_cast<size_t>(stage - num_conv())];
    return {&l.weight, &l.bias};
  }
  return {&output_.weight, &output_.bias};
}

Eigen::Index Classifier::stage_weight_count(int stage) const {
  if (stage < num_conv()) return convs_[static_cast<size_t>(stage)].weight_count();
  if (stage < output_stage()) {
    return hidden_[static_cast<size_t>(stage - num_conv())].weight_count();
  }
  return output_.weight_count();
}

std::vector<Matrix> Classifier::extractor_state() const {
  std::vector<Matrix> out;
  for (const Conv2d& c : convs_) {
    out.push_back(c.weight.value);
    out.push_back(c.bias.value);
  }
  return out;
}

void Classifier::load_extractor_state(const std::vector<Matrix>& state) {
  if (state.size() != 2 * convs_.size()) {
    throw InputError("extractor state has the wrong number of tensors");
  }
  for (size_t i = 0; i < convs_.size(); ++i) {
    const Matrix& w = state[2 * i];
    const Matrix& b = state[2 * i + 1];
    if (w.rows() != convs_[i].weight.value.rows() ||
        w.cols() != convs_[i].weight.value.cols() ||
        b.cols() != convs_[i].bias.value.cols()) {
      throw InputError("extractor state shape mismatch at conv" +
                       std::to_string(i));
    }
    convs_[i].weight.value = w;
    convs_[i].bias.value = b;
  }
}

}  // namespace plr
