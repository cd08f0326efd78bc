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

#include "plr/metrics.h"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "plr/error.h"

namespace plr {
namespace {

Matrix clamp_psd(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector values = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

GaussianStats GaussianStats::fit(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw InputError("need at least two samples to fit a Gaussian");
  }
  GaussianStats s;
  s.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - s.mean.transpose();
  s.covariance = clamp_psd((centered.transpose() * centered) /
                           static_cast<double>(samples.rows() - 1));
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() ||
      a.covariance.rows() != a.mean.size() ||
      b.covariance.rows() != b.mean.size()) {
    throw InputError("frechet_distance: dimension mismatch");
  }
  const Eigen::Index d = a.mean.size();
  const Matrix ridge = kCovarianceRidge * Matrix::Identity(d, d);
  const Matrix ca = 0.5 * (a.covariance + a.covariance.transpose()) + ridge;
  const Matrix cb = 0.5 * (b.covariance + b.covariance.transpose()) + ridge;

  Eigen::SelfAdjointEigenSolver<Matrix> eig_a(ca);
  const Vector sqrt_vals = eig_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix sqrt_a =
      eig_a.eigenvectors() * sqrt_vals.asDiagonal() * eig_a.eigenvectors().transpose();
  Matrix inner = sqrt_a * cb * sqrt_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig_inner(inner, Eigen::EigenvaluesOnly);
  const double trace_sqrt = eig_inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + ca.trace() + cb.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, value);
}

MeanSem average_accuracy_sem(std::span<const double> values) {
  if (values.empty()) throw InputError("no values to average");
  MeanSem out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * fraction);
  return buf;
}

std::string format_accuracy_sem(const MeanSem& m) {
  if (!m.sem.has_value()) return format_percent(m.mean);
  return format_percent(m.mean) + " ± " + format_percent(*m.sem);
}

double modified_fid(const Matrix& generated, int level, const Matrix& real_images,
                    const Classifier& reference, int batch_size) {
  const int levels = reference.num_levels();
  if (level < 0 || level > levels) {
    throw ConfigError("modified FID level out of range for the reference model");
  }
  const int expected = level == levels ? reference.spec().extractor.image_size()
                                       : reference.level_width(level);
  if (generated.cols() != expected) {
    throw ConfigError("generated features do not match the reference architecture");
  }
  const int rep_width = reference.level_width(levels - 1);
  Matrix real_rep(real_images.rows(), rep_width);
  for (Eigen::Index s = 0; s < real_images.rows(); s += batch_size) {
    const Eigen::Index n = std::min<Eigen::Index>(batch_size, real_images.rows() - s);
    real_rep.middleRows(s, n) =
        reference.forward_with_taps(real_images.middleRows(s, n)).taps.levels.back();
  }
  Matrix gen_rep(generated.rows(), rep_width);
  for (Eigen::Index s = 0; s < generated.rows(); s += batch_size) {
    const Eigen::Index n = std::min<Eigen::Index>(batch_size, generated.rows() - s);
    const Matrix chunk = generated.middleRows(s, n);
    gen_rep.middleRows(s, n) =
        level == levels ? reference.forward_with_taps(chunk).taps.levels.back()
                        : reference.last_hidden_from_level(chunk, level);
  }
  return frechet_distance(GaussianStats::fit(real_rep), GaussianStats::fit(gen_rep));
}

void RunResult::finalize() {
  if (per_task_accuracy.empty()) throw InputError("run has no task accuracies");
  for (double a : per_task_accuracy) {
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("accuracy outside [0, 1]");
  }
  average_accuracy =
      std::accumulate(per_task_accuracy.begin(), per_task_accuracy.end(), 0.0) /
      static_cast<double>(per_task_accuracy.size());
}

std::string RunResult::to_json(bool include_wall_clock) const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["dataset"] = dataset;
  j["architecture"] = architecture;
  j["mode"] = mode;
  j["strategy"] = strategy;
  j["strategy_label"] = strategy_label;
  j["relative_cost"] = relative_cost ? nlohmann::json(*relative_cost) : nullptr;
  j["per_task_accuracy"] = per_task_accuracy;
  j["average_accuracy"] = average_accuracy;
  j["mfid"] = mfid ? nlohmann::json(*mfid) : nullptr;
  j["replay_touches_per_sample"] = replay_touches_per_sample
                                       ? nlohmann::json(*replay_touches_per_sample)
                                       : nullptr;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["tags"] = tags;
  if (include_wall_clock) j["wall_clock_seconds"] = wall_clock_seconds;
  return j.dump(2) + "\n";
}

RunResult RunResult::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("cannot parse run result: ") + e.what());
  }
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  RunResult r;
  try {
    r.experiment = j.value("experiment", "");
    r.dataset = j.at("dataset").get<std::string>();
    r.architecture = j.at("architecture").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.strategy = j.value("strategy", "");
    r.strategy_label = j.value("strategy_label", "");
    r.relative_cost = opt("relative_cost");
    r.per_task_accuracy = j.at("per_task_accuracy").get<std::vector<double>>();
    r.average_accuracy = j.at("average_accuracy").get<double>();
    r.mfid = opt("mfid");
    r.replay_touches_per_sample = opt("replay_touches_per_sample");
    r.seed = j.at("seed").get<uint64_t>();
    r.config_hash = j.value("config_hash", "");
    if (j.contains("tags")) {
      r.tags = j["tags"].get<std::map<std::string, std::string>>();
    }
    r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed run result: ") + e.what());
  }
  return r;
}

}  // namespace plr
