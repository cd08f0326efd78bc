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

#include <set>

#include "plr/error.h"
#include "plr/generator.h"
#include "test_util.h"

namespace plr {
namespace {

using testing::central_difference;
using testing::random_matrix;
using testing::relative_error;

GeneratorSpec toy_spec(bool conditional) {
  GeneratorSpec s;
  s.input_width = 3;
  s.hidden_widths = {2, 2};
  s.latent_dim = 2;
  s.conditional = conditional;
  s.num_classes = conditional ? 3 : 0;
  s.level_weights = {0.5, 2.0, 1.0};
  s.latent_weight = 0.3;
  return s;
}

TEST(Kl, StandardCases) {
  Matrix mu = Matrix::Zero(2, 4), logvar = Matrix::Zero(2, 4);
  mu(0, 0) = 1.0;
  const Vector kl = kl_divergence(mu, logvar);
  EXPECT_NEAR(kl(0), 0.5, 1e-15);
  EXPECT_NEAR(kl(1), 0.0, 1e-15);
  // Unit mean shift with matching prior mean is free.
  EXPECT_NEAR(kl_divergence(mu, logvar, mu)(0), 0.0, 1e-15);
  // 0.5 * (e - 1 - 1) for logvar = 1 in one dimension.
  logvar(1, 2) = 1.0;
  EXPECT_NEAR(kl_divergence(Matrix::Zero(2, 4), logvar)(1), 0.5 * (std::exp(1.0) - 2.0), 1e-14);
}

TEST(Kl, NonNegative) {
  const Matrix mu = random_matrix(50, 5, 1), logvar = random_matrix(50, 5, 2);
  const Vector kl = kl_divergence(mu, logvar);
  EXPECT_GE(kl.minCoeff(), 0.0);
}

TEST(GeneratorSpec, MirrorAndDefaults) {
  const GeneratorSpec s = GeneratorSpec::mirror(ClassifierSpec::preset("ARCH1"), 100);
  EXPECT_EQ(s.input_width, 1024);
  EXPECT_EQ(s.hidden_widths, (std::vector<int>{2000, 2000}));
  EXPECT_EQ(s.input_activation, OutputActivation::kRelu);
  EXPECT_DOUBLE_EQ(s.resolved_latent_weight(), 1.0 / 1024.0);
  EXPECT_DOUBLE_EQ(s.level_weight(2), 1.0);
  const GeneratorSpec img = GeneratorSpec::image_space(ClassifierSpec::preset("SYNTH"), 8);
  EXPECT_EQ(img.input_width, 64);
  EXPECT_EQ(img.input_activation, OutputActivation::kIdentity);
  GeneratorSpec bad = s;
  bad.level_weights = {1.0};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Generator, DecodeRunsOnlyNeededStages) {
  const Generator g = Generator::build(
      GeneratorSpec::mirror(ClassifierSpec::preset("FMNIST3"), 8), 1);
  ASSERT_EQ(g.num_decoder_stages(), 4);
  const Matrix z = random_matrix(5, 8, 2);
  for (int level = 0; level < 3; ++level) {
    g.reset_stage_counter();
    const Matrix f = g.decode_to_level(z, level);
    EXPECT_EQ(f.cols(), 50);
    EXPECT_EQ(g.decoder_stages_executed(), 3 - level) << "level " << level;
    EXPECT_GE(f.minCoeff(), 0.0);
  }
  g.reset_stage_counter();
  EXPECT_EQ(g.decode_to_input(z).cols(), 1024);
  EXPECT_EQ(g.decoder_stages_executed(), 4);
  EXPECT_THROW(g.decode_to_level(z, 4), Error);
  EXPECT_THROW(g.decode_to_level(z, -1), Error);
}

TEST(Generator, SamplingDecodesPriorDraws) {
  const Generator g = Generator::build(
      GeneratorSpec::mirror(ClassifierSpec::preset("FMNIST3"), 8), 1);
  Rng a(3), b(3);
  const Matrix sampled = g.sample_features(2, 4, std::nullopt, a);
  const Matrix z = standard_normal(4, 8, b);
  EXPECT_TRUE(sampled.isApprox(g.decode_to_level(z, 2)));
  EXPECT_EQ(g.sample_features(3, 0, std::nullopt, a).cols(), 1024);
}

class ToyVae : public ::testing::TestWithParam<bool> {};

TEST_P(ToyVae, GradientsMatchCentralDifferences) {
  const bool conditional = GetParam();
  Generator g = Generator::build(toy_spec(conditional), 7);
  const Matrix input = random_matrix(4, 3, 8).cwiseAbs();
  const Matrix noise = random_matrix(4, 2, 9);
  const ReconstructionTargets targets{
      {random_matrix(4, 2, 10).cwiseAbs(), random_matrix(4, 2, 11).cwiseAbs()}, input};
  const std::vector<int> labels = conditional ? std::vector<int>{0, 2, 1, 2}
                                              : std::vector<int>{};
  auto loss = [&] {
    return g.loss(targets, g.encode_with_noise(input, noise), labels).total;
  };
  std::vector<Param*> params = g.parameters();
  zero_grad(params);
  g.backward(targets, g.encode_with_noise(input, noise), labels, 1.0);
  for (Param* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        EXPECT_LT(relative_error(p->grad(r, c), central_difference(*p, r, c, loss), 1e-9),
                  1e-4)
            << p->name << "(" << r << "," << c << ")";
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, ToyVae, ::testing::Values(false, true));

TEST(Generator, BackwardScalesWithWeight) {
  Generator g = Generator::build(toy_spec(false), 7);
  const Matrix input = random_matrix(4, 3, 8).cwiseAbs();
  const Matrix noise = random_matrix(4, 2, 9);
  const ReconstructionTargets targets{
      {random_matrix(4, 2, 10).cwiseAbs(), random_matrix(4, 2, 11).cwiseAbs()}, input};
  std::vector<Param*> params = g.parameters();
  zero_grad(params);
  g.backward(targets, g.encode_with_noise(input, noise), {}, 1.0);
  const Matrix full = params[0]->grad;
  zero_grad(params);
  const GeneratorLoss l = g.backward(targets, g.encode_with_noise(input, noise), {}, 0.25);
  EXPECT_TRUE(params[0]->grad.isApprox(0.25 * full));
  EXPECT_NEAR(l.total, l.recon + l.latent, 1e-15);
  EXPECT_EQ(l.per_level.size(), 3u);
}

TEST(Generator, LossDoesNotTouchParameters) {
  Generator g = Generator::build(toy_spec(false), 7);
  const Matrix input = random_matrix(4, 3, 8).cwiseAbs();
  const ReconstructionTargets targets{
      {random_matrix(4, 2, 10).cwiseAbs(), random_matrix(4, 2, 11).cwiseAbs()}, input};
  std::vector<Param*> params = g.parameters();
  zero_grad(params);
  Rng rng(1);
  g.loss(targets, g.encode(input, rng));
  for (const Param* p : params) EXPECT_FALSE(p->touched);
}

TEST(Generator, ConditionalSamplingRespectsActiveClasses) {
  Generator g = Generator::build(
      GeneratorSpec::mirror(ClassifierSpec::preset("SYNTH"), 4, true), 2);
  Rng rng(3);
  g.set_active_classes({});
  EXPECT_THROW(g.sample_features(0, 4, std::nullopt, rng), Error);
  g.set_active_classes({2, 5});
  std::vector<int> classes;
  const Matrix f = g.sample(0, 200, std::nullopt, rng, &classes);
  EXPECT_EQ(f.rows(), 200);
  const std::set<int> seen(classes.begin(), classes.end());
  EXPECT_EQ(seen, (std::set<int>{2, 5}));
  g.sample(1, 10, 5, rng, &classes);
  for (int c : classes) EXPECT_EQ(c, 5);
  EXPECT_THROW(g.set_active_classes({10}), Error);

  const Generator plain = Generator::build(
      GeneratorSpec::mirror(ClassifierSpec::preset("SYNTH"), 4), 2);
  EXPECT_THROW(plain.sample_features(0, 1, 3, rng), Error);
}

TEST(Generator, FreezingStopsUpdates) {
  Generator g = Generator::build(toy_spec(false), 7);
  g.freeze_decoder();
  const std::vector<Param*> params = g.parameters();
  const std::vector<Matrix> before = [&] {
    std::vector<Matrix> v;
    for (const Param* p : params) v.push_back(p->value);
    return v;
  }();
  const Matrix input = random_matrix(4, 3, 8).cwiseAbs();
  const ReconstructionTargets targets{
      {random_matrix(4, 2, 10).cwiseAbs(), random_matrix(4, 2, 11).cwiseAbs()}, input};
  zero_grad(params);
  g.backward(targets, g.encode_with_noise(input, random_matrix(4, 2, 9)), {}, 1.0);
  Adam(AdamConfig{1e-2}).step(params);
  // Encoder: 2 layers + 2 heads = 8 params, decoder after that.
  for (size_t i = 0; i < params.size(); ++i) {
    const bool same = (params[i]->value.array() == before[i].array()).all();
    EXPECT_EQ(same, i >= 8) << params[i]->name;
  }
  g.freeze_encoder();
  for (const Param* p : g.parameters()) EXPECT_TRUE(p->frozen);
}

TEST(Generator, ShapeErrors) {
  const Generator g = Generator::build(toy_spec(false), 7);
  EXPECT_THROW(g.encode_with_noise(Matrix::Zero(2, 4), Matrix::Zero(2, 2)), Error);
  EXPECT_THROW(g.encode_with_noise(Matrix::Zero(2, 3), Matrix::Zero(2, 3)), Error);
  const ReconstructionTargets missing{{}, Matrix::Zero(2, 3)};
  EXPECT_THROW(g.loss(missing, g.encode_with_noise(Matrix::Zero(2, 3), Matrix::Zero(2, 2))),
               Error);
}

}  // namespace
}  // namespace plr
