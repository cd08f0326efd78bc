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

#ifndef PLR_METRICS_H_
#define PLR_METRICS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plr/arch.h"
#include "plr/tensor.h"

namespace plr {

// Diagonal ridge added to both covariances before the matrix square root.
inline constexpr double kCovarianceRidge = 1e-6;

struct GaussianStats {
  Vector mean;
  Matrix covariance;  // symmetric PSD

  // Sample mean and unbiased covariance of the rows, symmetrized with
  // negative eigenvalues clamped to zero.
  static GaussianStats fit(const Matrix& samples);
};

// ||mu_a - mu_b||^2 + Tr(A + B - 2 (A B)^{1/2}) with A, B the ridged
// covariances. The square-root trace is taken from the eigenvalues of the
// symmetric product A^{1/2} B A^{1/2}. Throws InputError on a dimension
// mismatch.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct MeanSem {
  double mean = 0.0;
  std::optional<double> sem;  // absent for fewer than two values
};

// Mean and standard error (sample std / sqrt(n)) across seeds.
MeanSem average_accuracy_sem(std::span<const double> values);

// "71.2% ± 0.7%"; a missing SEM prints as "71.2%".
std::string format_accuracy_sem(const MeanSem& m);
// "52.4%"
std::string format_percent(double fraction);

// Frechet distance between last-hidden-layer representations of a reference
// classifier for (a) real images and (b) generated features injected at
// `level`. level == reference.num_levels() means generated images.
double modified_fid(const Matrix& generated, int level, const Matrix& real_images,
                    const Classifier& reference, int batch_size = 512);

struct RunResult {
  std::string experiment;
  std::string dataset;
  std::string architecture;
  std::string mode;
  std::string strategy;        // "[0.7, 0.3]", "IR", or "" for GR/none
  std::string strategy_label;  // "S=[0.7, 0.3]" or "Internal Replay"
  std::optional<double> relative_cost;
  std::vector<double> per_task_accuracy;
  double average_accuracy = 0.0;
  std::optional<double> mfid;
  std::optional<double> replay_touches_per_sample;
  uint64_t seed = 0;
  std::string config_hash;
  // Grid coordinates beyond (architecture, strategy, seed), e.g. the freezing
  // setup or pretraining class count.
  std::map<std::string, std::string> tags;
  double wall_clock_seconds = 0.0;

  // Throws InputError when the per-task list is empty or out of [0, 1].
  void finalize();
  std::string to_json(bool include_wall_clock = true) const;
  static RunResult from_json(const std::string& text);
};

}  // namespace plr

#endif  // PLR_METRICS_H_
