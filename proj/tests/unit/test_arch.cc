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

#include <gtest/gtest.h>

#include "plr/arch.h"
#include "plr/error.h"
#include "test_util.h"

namespace plr {
namespace {

using testing::central_difference;
using testing::random_matrix;
using testing::relative_error;

// Plain MLP on 2-dim input: an empty extractor with a 1x1x2 "image".
ClassifierSpec toy_spec(std::vector<int> hidden, int classes) {
  ClassifierSpec s;
  s.name = "toy";
  s.extractor.in_channels = 2;
  s.extractor.height = 1;
  s.extractor.width = 1;
  s.hidden_widths = std::move(hidden);
  s.num_classes = classes;
  return s;
}

void set(Param& p, std::initializer_list<double> values) {
  ASSERT_EQ(static_cast<size_t>(p.size()), values.size());
  std::copy(values.begin(), values.end(), p.value.data());
}

Classifier hand_set_toy() {
  Classifier c = Classifier::build(toy_spec({2, 2}, 2), 0);
  std::vector<Param*> p = c.parameters();
  // W stored in x out, row-major.
  set(*p[0], {0.5, -1.0, 0.25, 0.75});
  set(*p[1], {0.1, -0.2});
  set(*p[2], {1.0, 2.0, -1.0, 0.5});
  set(*p[3], {0.3, 0.1});
  set(*p[4], {2.0, -1.0, 1.0, 1.0});
  set(*p[5], {0.0, 0.5});
  return c;
}

TEST(ToyMlp, ForwardMatchesHandComputation) {
  const Classifier c = hand_set_toy();
  Matrix x(1, 2);
  x << 1.0, -2.0;
  const Classifier::Forward f = c.forward_with_taps(x);
  // h0 = relu([0, -2.5] + [0.1, -0.2]) = [0.1, 0]
  EXPECT_DOUBLE_EQ(f.taps.levels[0](0, 0), 0.1);
  EXPECT_DOUBLE_EQ(f.taps.levels[0](0, 1), 0.0);
  // h1 = relu([0.1, 0.2] + [0.3, 0.1]) = [0.4, 0.3]
  EXPECT_NEAR(f.taps.levels[1](0, 0), 0.4, 1e-15);
  EXPECT_NEAR(f.taps.levels[1](0, 1), 0.3, 1e-15);
  // logits = [0.8 + 0.3, -0.4 + 0.3] + [0, 0.5]
  EXPECT_NEAR(f.logits(0, 0), 1.1, 1e-15);
  EXPECT_NEAR(f.logits(0, 1), 0.4, 1e-15);
}

TEST(ToyMlp, GradientsMatchCentralDifferences) {
  Classifier c = hand_set_toy();
  Matrix x(2, 2);
  x << 1.0, -2.0, 0.7, 0.4;
  const std::vector<int> labels{1, 0};
  auto loss = [&] {
    return cross_entropy(c.forward_with_taps(x).logits, labels).loss;
  };
  std::vector<Param*> params = c.parameters();
  zero_grad(params);
  const ForwardTrace t = c.trace(x, Entry::image());
  c.backward(t, cross_entropy(t.logits(), labels).grad);
  for (Param* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index k = 0; k < p->value.cols(); ++k) {
        const double numeric = central_difference(*p, r, k, loss);
        EXPECT_LT(relative_error(p->grad(r, k), numeric, 1e-10), 1e-4)
            << p->name << "(" << r << "," << k << ")";
      }
    }
  }
}

TEST(Classifier, SmallMlpTapsMatchMatrixOracle) {
  const Classifier c = Classifier::build(toy_spec({3, 3}, 4), 17);
  std::vector<const Param*> p = c.parameters();
  const Matrix x = random_matrix(6, 2, 18);
  Matrix h0 = ((x * p[0]->value).rowwise() + p[1]->value.row(0)).cwiseMax(0.0);
  Matrix h1 = ((h0 * p[2]->value).rowwise() + p[3]->value.row(0)).cwiseMax(0.0);
  Matrix out = (h1 * p[4]->value).rowwise() + p[5]->value.row(0);
  const Classifier::Forward f = c.forward_with_taps(x);
  EXPECT_TRUE(f.taps.levels[0].isApprox(h0, 1e-14));
  EXPECT_TRUE(f.taps.levels[1].isApprox(h1, 1e-14));
  EXPECT_TRUE(f.logits.isApprox(out, 1e-14));
}

TEST(Classifier, ConvGradientsMatchCentralDifferences) {
  Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 3);
  const Matrix x = random_matrix(3, 64, 4);
  const std::vector<int> labels{1, 4, 7};
  auto loss = [&] { return cross_entropy(c.forward_with_taps(x).logits, labels).loss; };
  std::vector<Param*> params = c.parameters();
  zero_grad(params);
  const ForwardTrace t = c.trace(x, Entry::image());
  c.backward(t, cross_entropy(t.logits(), labels).grad);
  Rng rng(5);
  for (Param* p : params) {
    for (int trial = 0; trial < 6; ++trial) {
      const Eigen::Index r = static_cast<Eigen::Index>(rng() % p->value.rows());
      const Eigen::Index k = static_cast<Eigen::Index>(rng() % p->value.cols());
      const double numeric = central_difference(*p, r, k, loss);
      EXPECT_LT(relative_error(p->grad(r, k), numeric, 1e-9), 1e-4) << p->name;
    }
  }
}

TEST(Classifier, PresetShapes) {
  const ClassifierSpec a1 = ClassifierSpec::preset("ARCH1");
  EXPECT_EQ(a1.hidden_widths, (std::vector<int>{2000, 2000}));
  EXPECT_EQ(a1.num_classes, 100);
  EXPECT_EQ(a1.extractor.output_width(), 1024);
  const ClassifierSpec a2 = ClassifierSpec::preset("ARCH2");
  EXPECT_EQ(a2.hidden_widths, (std::vector<int>{1000, 1000, 1000}));
  const ClassifierSpec f3 = ClassifierSpec::preset("FMNIST3");
  EXPECT_EQ(f3.hidden_widths, (std::vector<int>{50, 50, 50}));
  EXPECT_EQ(f3.num_classes, 10);
  EXPECT_EQ(f3.extractor.image_size(), 784);
  EXPECT_THROW(ClassifierSpec::preset("ARCH9"), Error);
}

TEST(Classifier, StageIndexing) {
  const Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 1);
  EXPECT_EQ(c.num_conv(), 2);
  EXPECT_EQ(c.stage_of(Entry::image()), 0);
  EXPECT_EQ(c.stage_of(Entry::extractor()), 2);
  EXPECT_EQ(c.stage_of(Entry::at_level(0)), 3);
  EXPECT_EQ(c.stage_of(Entry::at_level(1)), 4);
  EXPECT_EQ(c.output_stage(), 4);
}

TEST(Classifier, TapTailEquivalence) {
  for (const char* name : {"SYNTH", "FMNIST3"}) {
    const Classifier c = Classifier::build(ClassifierSpec::preset(name), 9);
    const Matrix x = random_matrix(50, c.spec().extractor.image_size(), 10);
    const Classifier::Forward f = c.forward_with_taps(x);
    EXPECT_TRUE(c.forward_from_extractor(f.extractor_features).isApprox(f.logits, 1e-12));
    for (int n = 0; n < c.num_levels(); ++n) {
      EXPECT_TRUE(c.forward_from_level(f.taps.levels[static_cast<size_t>(n)], n)
                      .isApprox(f.logits, 1e-12))
          << name << " level " << n;
    }
  }
}

TEST(Classifier, DeepestInjectionIsOutputLayerOnly) {
  const Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 2);
  const Matrix h = random_matrix(4, c.level_width(1), 3).cwiseAbs();
  const std::vector<const Param*> p = c.parameters();
  const Matrix expected = (h * p[p.size() - 2]->value).rowwise() + p.back()->value.row(0);
  EXPECT_TRUE(c.forward_from_level(h, 1).isApprox(expected, 1e-14));
}

TEST(Classifier, RejectsWrongWidths) {
  const Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 2);
  EXPECT_THROW(c.forward_from_level(Matrix::Zero(2, 5), 0), Error);
  EXPECT_THROW(c.forward_from_level(Matrix::Zero(2, 64), 7), Error);
  EXPECT_THROW(c.forward_with_taps(Matrix::Zero(2, 10)), Error);
}

TEST(Classifier, InjectionGradientIsZeroUpstream) {
  Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 4);
  for (int n = 0; n < c.num_levels(); ++n) {
    std::vector<Param*> params = c.parameters();
    zero_grad(params);
    const Matrix h = random_matrix(5, c.level_width(n), 6).cwiseAbs();
    const ForwardTrace t = c.trace(h, Entry::at_level(n));
    const std::vector<int> labels{0, 1, 2, 3, 4};
    c.backward(t, cross_entropy(t.logits(), labels).grad);
    const int first_updated = c.stage_of(Entry::at_level(n));
    for (int s = 0; s < c.num_stages(); ++s) {
      for (Param* p : c.stage_parameters(s)) {
        if (s < first_updated) {
          EXPECT_FALSE(p->touched) << p->name;
          EXPECT_TRUE((p->grad.array() == 0.0).all()) << p->name;
        } else {
          EXPECT_TRUE(p->touched) << p->name;
        }
      }
    }
  }
}

TEST(Classifier, FreezeKeepsParametersBitIdentical) {
  Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 5);
  c.freeze(FreezeScope::kExtractor);
  const std::vector<Matrix> before = c.extractor_state();
  const Matrix x = random_matrix(8, 64, 7);
  const std::vector<int> labels{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<Param*> params = c.parameters();
  const Matrix fc_before = params[4]->value;
  for (int step = 0; step < 3; ++step) {
    zero_grad(params);
    const ForwardTrace t = c.trace(x, Entry::image());
    c.backward(t, cross_entropy(t.logits(), labels).grad);
    Adam(AdamConfig{1e-2}).step(params);
  }
  const std::vector<Matrix> after = c.extractor_state();
  for (size_t i = 0; i < before.size(); ++i) {
    EXPECT_TRUE((before[i].array() == after[i].array()).all());
  }
  EXPECT_FALSE((params[4]->value.array() == fc_before.array()).all());
  EXPECT_EQ(c.frozen_mask(), (std::vector<bool>{true, true, false, false, false}));
}

TEST(Classifier, UnfrozenExtractorChanges) {
  Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 5);
  const std::vector<Matrix> before = c.extractor_state();
  const Matrix x = random_matrix(8, 64, 7);
  const std::vector<int> labels{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<Param*> params = c.parameters();
  zero_grad(params);
  const ForwardTrace t = c.trace(x, Entry::image());
  c.backward(t, cross_entropy(t.logits(), labels).grad);
  Adam(AdamConfig{1e-2}).step(params);
  EXPECT_FALSE((c.extractor_state()[0].array() == before[0].array()).all());
}

TEST(Classifier, FreezeUpToLevel) {
  Classifier c = Classifier::build(ClassifierSpec::preset("FMNIST3"), 5);
  c.freeze(FreezeScope::kExtractorAndFcUpTo, 1);
  EXPECT_EQ(c.frozen_mask(),
            (std::vector<bool>{true, true, true, true, true, false, false}));
  EXPECT_THROW(c.freeze(FreezeScope::kExtractorAndFcUpTo, 3), Error);
  c.unfreeze_all();
  for (bool f : c.frozen_mask()) EXPECT_FALSE(f);
}

TEST(Classifier, DeterministicInitialization) {
  const Classifier a = Classifier::build(ClassifierSpec::preset("SYNTH"), 11);
  const Classifier b = Classifier::build(ClassifierSpec::preset("SYNTH"), 11);
  const Classifier d = Classifier::build(ClassifierSpec::preset("SYNTH"), 12);
  const auto pa = a.parameters(), pb = b.parameters(), pd = d.parameters();
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE((pa[i]->value.array() == pb[i]->value.array()).all());
    any_diff |= !(pa[i]->value.array() == pd[i]->value.array()).all();
  }
  EXPECT_TRUE(any_diff);
  for (const Param* p : pa) EXPECT_FALSE(p->frozen);
}

TEST(Classifier, ExtractorStateRoundTrip) {
  Classifier a = Classifier::build(ClassifierSpec::preset("SYNTH"), 1);
  Classifier b = Classifier::build(ClassifierSpec::preset("SYNTH"), 2);
  b.load_extractor_state(a.extractor_state());
  const Matrix x = random_matrix(3, 64, 4);
  EXPECT_TRUE(a.extract(x).isApprox(b.extract(x)));
  EXPECT_THROW(b.load_extractor_state({}), Error);
}

TEST(Classifier, BackwardCountsWeightTouches) {
  Classifier c = Classifier::build(ClassifierSpec::preset("SYNTH"), 1);
  TouchCounter counter;
  counter.per_stage.assign(static_cast<size_t>(c.num_stages()), 0);
  const Matrix h = random_matrix(7, c.level_width(0), 3).cwiseAbs();
  const ForwardTrace t = c.trace(h, Entry::at_level(0));
  const std::vector<int> labels(7, 1);
  c.backward(t, cross_entropy(t.logits(), labels).grad, &counter);
  EXPECT_EQ(counter.range(0, 3), 0u);
  EXPECT_EQ(counter.per_stage[3], 7u * 64u * 32u);
  EXPECT_EQ(counter.per_stage[4], 7u * 32u * 10u);
  EXPECT_EQ(counter.total(), 7u * (64u * 32u + 32u * 10u));
  const Matrix h0 = random_matrix(7, c.extractor_width(), 3).cwiseAbs();
  counter.reset();
  const ForwardTrace t0 = c.trace(h0, Entry::extractor());
  c.backward(t0, cross_entropy(t0.logits(), labels).grad, &counter);
  EXPECT_EQ(counter.per_stage[2], 7u * 32u * 64u);
}

}  // namespace
}  // namespace plr
