/*
 * Copyright 2026 The bbfi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BBFI_SIM_H_
#define BBFI_SIM_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "bbfi/data.h"
#include "bbfi/importance.h"
#include "bbfi/models.h"
#include "bbfi/shapley.h"

namespace bbfi {

enum class GeneratorKind {
  // Y = X1 + X2 + 10 X1 1{X3 = 0} + 10 X2 1{X3 = 1} + e,
  // X1, X2 ~ N(0, 1), X3 ~ Bernoulli(0.5) stored as categorical {"0", "1"}.
  kSwitchInteraction,
  // Y = X1 + X2 + X3 + X1 X2 + e, X1, X2, X3 ~ N(0, 1).
  kLinearInteraction,
};

// The noise term is N(0, 0.5) read as a variance, i.e. sd = sqrt(0.5).
inline const double kDefaultNoiseSd = std::sqrt(0.5);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kSwitchInteraction;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  double noise_sd = kDefaultNoiseSd;
};

// Row r draws from CounterStream(DeriveKey(seed, {r})): X1, X2 (X3) as
// normals, then (switch generator) X3 = 1{uniform < 0.5}, then the noise
// normal.
Dataset Generate(const GeneratorSpec& spec);

enum class Learner { kLinear, kLinearInteractions, kForest, kKnn };

std::string LearnerName(Learner learner);
Learner ParseLearner(const std::string& name);

struct LearnerOptions {
  ForestParams forest;
  std::size_t knn_k = 10;
};

std::unique_ptr<Predictor> FitLearner(Learner learner, const Dataset& train,
                                      std::uint64_t seed,
                                      const LearnerOptions& options = {});

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};
MeanSd Summarize(const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Switch-interaction study: global and X3-conditional PFI of X1 and X2.

struct Sim1Options {
  std::size_t train_n = 2000;
  std::size_t test_n = 100;
  std::size_t reps = 20;
  std::uint64_t seed = 1;
  Learner learner = Learner::kForest;
  LearnerOptions learner_options;
  double noise_sd = kDefaultNoiseSd;
};

struct Sim1Report {
  Sim1Options options;
  std::string model;
  // Per repetition, difference PFI (V-statistic, all observed grid points).
  std::vector<double> pfi_x1, pfi_x2;
  // Conditional PFI given X3 = 0 / X3 = 1, from the same matrices.
  std::vector<double> pfi_x1_x3_0, pfi_x2_x3_0, pfi_x1_x3_1, pfi_x2_x3_1;
  // PI curves of the first repetition for X1 and X2: all rows, X3 = 0, X3 = 1.
  std::vector<Curve> pi_curves;
};

Sim1Report RunSim1(const Sim1Options& options);
// Uses `model` instead of fitting one; options.train_n is ignored.
Sim1Report RunSim1WithModel(const Predictor& model, const Sim1Options& options);

void WriteSim1Csv(const Sim1Report& report, std::ostream& out);
std::string Sim1Summary(const Sim1Report& report);

// ---------------------------------------------------------------------------
// Linear-interaction study: SFIMP vs. difference and ratio PFI across models.

struct Sim2Options {
  std::size_t train_n = 2000;
  std::size_t test_n = 100;
  std::size_t reps = 20;
  std::uint64_t seed = 1;
  std::vector<Learner> learners = {Learner::kKnn, Learner::kForest, Learner::kLinear,
                                   Learner::kLinearInteractions};
  LearnerOptions learner_options;
  std::size_t m_feat = 100;
  std::size_t m_obs = 5;
  double noise_sd = kDefaultNoiseSd;
};

struct Sim2ModelResult {
  Learner learner = Learner::kLinear;
  std::string model;
  // Indexed [rep][feature].
  std::vector<std::vector<double>> difference_pfi;
  std::vector<std::vector<double>> ratio_pfi;
  std::vector<std::vector<double>> sfimp;
  std::vector<std::vector<double>> sfimp_se;
  // Per repetition: test MSE, v(P), and whether sum(phi) was within four
  // standard errors of v(P).
  std::vector<double> mse;
  std::vector<double> total;
  std::vector<bool> efficiency_ok;

  // Per-repetition importance ratios of feature j (0 or 1) to X3.
  std::vector<double> Ratios(const std::vector<std::vector<double>>& values,
                             std::size_t j) const;
};

struct Sim2Report {
  Sim2Options options;
  std::vector<Sim2ModelResult> models;
};

Sim2Report RunSim2(const Sim2Options& options);

void WriteSim2Csv(const Sim2Report& report, std::ostream& out);
std::string Sim2Summary(const Sim2Report& report);

}  // namespace bbfi

#endif  // BBFI_SIM_H_
