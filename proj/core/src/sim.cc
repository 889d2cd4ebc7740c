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

#include "bbfi/sim.h"

#include <cstdio>
#include <ostream>

#include "bbfi/error.h"
#include "bbfi/numeric.h"
#include "bbfi/random.h"
#include "bbfi/shapley.h"
#include "bbfi/table_io.h"

namespace bbfi {
namespace {

// Stream tags under the master seed.
constexpr std::uint64_t kTrainTag = 0;
constexpr std::uint64_t kTestTag = 1;
constexpr std::uint64_t kModelTag = 2;
constexpr std::uint64_t kShapleyTag = 3;

std::string Fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Dataset Generate(const GeneratorSpec& spec) {
  if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) {
    throw Error("noise_sd must be a finite number >= 0");
  }
  const bool sw = spec.kind == GeneratorKind::kSwitchInteraction;
  Schema schema;
  schema.names = {"X1", "X2", "X3"};
  schema.kinds = {FeatureKind::Numeric(), FeatureKind::Numeric(),
                  sw ? FeatureKind::Categorical({"0", "1"}) : FeatureKind::Numeric()};
  Matrix x(spec.n, 3);
  std::vector<double> y(spec.n);
  for (std::size_t r = 0; r < spec.n; ++r) {
    CounterStream stream(DeriveKey(spec.seed, {r}));
    const double x1 = stream.NextNormal();
    const double x2 = stream.NextNormal();
    double x3 = 0.0;
    if (sw) {
      x3 = stream.NextUniform() < 0.5 ? 1.0 : 0.0;
    } else {
      x3 = stream.NextNormal();
    }
    const double eps = spec.noise_sd * stream.NextNormal();
    x(r, 0) = x1;
    x(r, 1) = x2;
    x(r, 2) = x3;
    y[r] = sw ? x1 + x2 + 10.0 * x1 * (x3 == 0.0 ? 1.0 : 0.0) +
                    10.0 * x2 * (x3 == 1.0 ? 1.0 : 0.0) + eps
              : x1 + x2 + x3 + x1 * x2 + eps;
  }
  return Dataset(std::move(schema), std::move(x), std::move(y), "Y");
}

std::string LearnerName(Learner learner) {
  switch (learner) {
    case Learner::kLinear:
      return "linear";
    case Learner::kLinearInteractions:
      return "linear_interactions";
    case Learner::kForest:
      return "forest";
    case Learner::kKnn:
      return "knn";
  }
  return "";
}

Learner ParseLearner(const std::string& name) {
  for (Learner l : {Learner::kLinear, Learner::kLinearInteractions, Learner::kForest,
                    Learner::kKnn}) {
    if (LearnerName(l) == name) return l;
  }
  throw Error("unknown learner '" + name +
              "' (expected linear, linear_interactions, forest or knn)");
}

std::unique_ptr<Predictor> FitLearner(Learner learner, const Dataset& train, std::uint64_t seed,
                                      const LearnerOptions& options) {
  switch (learner) {
    case Learner::kLinear:
      return std::make_unique<LinearModel>(FitLinear(train, false));
    case Learner::kLinearInteractions:
      return std::make_unique<LinearModel>(FitLinear(train, true));
    case Learner::kForest:
      return std::make_unique<ForestModel>(FitForest(train, options.forest, seed));
    case Learner::kKnn:
      return std::make_unique<KnnModel>(FitKnn(train, options.knn_k));
  }
  throw Error("unknown learner");
}

MeanSd Summarize(const std::vector<double>& values) {
  return {Mean(values), StandardDeviation(values)};
}

// ---------------------------------------------------------------------------
// Switch-interaction study

namespace {

void CheckReps(std::size_t reps, std::size_t test_n) {
  if (reps < 1) throw Error("reps must be at least 1");
  if (test_n < 1) throw Error("test_n must be at least 1");
}

Curve GroupPiCurve(const ImportanceMatrix& m, const std::vector<bool>& mask,
                   const std::string& label) {
  Curve curve = PiCurve(m);
  curve.label = label;
  const auto order = m.SortedGridOrder();
  for (std::size_t a = 0; a < order.size(); ++a) {
    RunningMean mean;
    for (std::size_t i = 0; i < m.num_obs(); ++i) {
      if (mask[i]) mean.Add(m.cell(order[a], i));
    }
    curve.ordinates[a] = mean.value();
  }
  return curve;
}

}  // namespace

Sim1Report RunSim1(const Sim1Options& options) {
  CheckReps(options.reps, options.test_n);
  const Dataset train = Generate({GeneratorKind::kSwitchInteraction, options.train_n,
                                  DeriveKey(options.seed, {kTrainTag}), options.noise_sd});
  const auto model = FitLearner(options.learner, train, DeriveKey(options.seed, {kModelTag}),
                                options.learner_options);
  return RunSim1WithModel(*model, options);
}

Sim1Report RunSim1WithModel(const Predictor& model, const Sim1Options& options) {
  CheckReps(options.reps, options.test_n);
  Sim1Report report;
  report.options = options;
  report.model = model.Describe();
  const LossFn loss(LossKind::kSquared);
  for (std::size_t rep = 0; rep < options.reps; ++rep) {
    const Dataset test = Generate({GeneratorKind::kSwitchInteraction, options.test_n,
                                   DeriveKey(options.seed, {kTestTag, rep}), options.noise_sd});
    const auto groups = GroupsByFeature(test, 2, std::nullopt);
    for (std::size_t j : {0, 1}) {
      const ImportanceMatrix m =
          DeltaLossMatrix(model, test, FeatureSet({j}), GridSpec::AllObserved(), loss);
      const auto cond = ConditionalPfi(m, groups);
      auto group = [&](const char* label) {
        auto it = cond.find(label);
        return it == cond.end() ? std::nan("") : it->second;
      };
      (j == 0 ? report.pfi_x1 : report.pfi_x2).push_back(Mean(m.observation_means()));
      (j == 0 ? report.pfi_x1_x3_0 : report.pfi_x2_x3_0).push_back(group("X3=0"));
      (j == 0 ? report.pfi_x1_x3_1 : report.pfi_x2_x3_1).push_back(group("X3=1"));
      if (rep == 0) {
        const std::string name = test.feature_names()[j];
        Curve all = PiCurve(m);
        all.label = "PI " + name;
        report.pi_curves.push_back(std::move(all));
        for (const auto& [label, mask] : groups) {
          report.pi_curves.push_back(GroupPiCurve(m, mask, "PI " + name + " | " + label));
        }
      }
    }
  }
  return report;
}

void WriteSim1Csv(const Sim1Report& report, std::ostream& out) {
  WriteCsvRow(out, std::vector<std::string>{"rep", "pfi_x1", "pfi_x2", "pfi_x1_x3_0",
                                            "pfi_x2_x3_0", "pfi_x1_x3_1", "pfi_x2_x3_1"});
  for (std::size_t r = 0; r < report.pfi_x1.size(); ++r) {
    WriteCsvRow(out, std::vector<std::string>{
                         std::to_string(r), FormatNumber(report.pfi_x1[r]),
                         FormatNumber(report.pfi_x2[r]), FormatNumber(report.pfi_x1_x3_0[r]),
                         FormatNumber(report.pfi_x2_x3_0[r]), FormatNumber(report.pfi_x1_x3_1[r]),
                         FormatNumber(report.pfi_x2_x3_1[r])});
  }
}

std::string Sim1Summary(const Sim1Report& report) {
  const Sim1Options& o = report.options;
  std::string s;
  s += "switch-interaction study: Y = X1 + X2 + 10 X1 1{X3=0} + 10 X2 1{X3=1} + e\n";
  s += "noise: N(0, " + Fixed(o.noise_sd * o.noise_sd, 4) + ") with the second parameter read as "
       "the variance (sd " + Fixed(o.noise_sd, 4) + ")\n";
  s += "train_n=" + std::to_string(o.train_n) + " test_n=" + std::to_string(o.test_n) +
       " reps=" + std::to_string(o.reps) + " seed=" + std::to_string(o.seed) +
       " model=" + report.model + "\n";
  s += "difference PFI, squared loss, mean (sd) over reps\n";
  auto line = [&](const char* label, const std::vector<double>& a, const std::vector<double>& b) {
    const MeanSd x1 = Summarize(a), x2 = Summarize(b);
    s += std::string(label) + "  X1: " + Fixed(x1.mean) + " (" + Fixed(x1.sd) + ")  X2: " +
         Fixed(x2.mean) + " (" + Fixed(x2.sd) + ")\n";
  };
  line("global      ", report.pfi_x1, report.pfi_x2);
  line("given X3=0  ", report.pfi_x1_x3_0, report.pfi_x2_x3_0);
  line("given X3=1  ", report.pfi_x1_x3_1, report.pfi_x2_x3_1);
  return s;
}

// ---------------------------------------------------------------------------
// Linear-interaction study

std::vector<double> Sim2ModelResult::Ratios(const std::vector<std::vector<double>>& values,
                                            std::size_t j) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& rep : values) out.push_back(rep.at(j) / rep.at(2));
  return out;
}

Sim2Report RunSim2(const Sim2Options& options) {
  CheckReps(options.reps, options.test_n);
  if (options.learners.empty()) throw Error("at least one learner is required");
  Sim2Report report;
  report.options = options;
  const Dataset train = Generate({GeneratorKind::kLinearInteraction, options.train_n,
                                  DeriveKey(options.seed, {kTrainTag}), options.noise_sd});
  const LossFn loss(LossKind::kSquared);

  for (std::size_t mi = 0; mi < options.learners.size(); ++mi) {
    const Learner learner = options.learners[mi];
    const auto model = FitLearner(learner, train, DeriveKey(options.seed, {kModelTag, mi}),
                                  options.learner_options);
    Sim2ModelResult result;
    result.learner = learner;
    result.model = model->Describe();
    for (std::size_t rep = 0; rep < options.reps; ++rep) {
      const Dataset test = Generate({GeneratorKind::kLinearInteraction, options.test_n,
                                     DeriveKey(options.seed, {kTestTag, rep}), options.noise_sd});
      std::vector<double> diff(3), ratio(3);
      for (std::size_t j = 0; j < 3; ++j) {
        const ImportanceResult pfi = Pfi(*model, test, FeatureSet({j}), loss,
                                         PfiMode::kDifference, EstimatorKind::VStatistic());
        if (pfi.baseline_ge <= kDegenerateBaseline) {
          throw Error("degenerate baseline: " + result.model + " fits the test set exactly");
        }
        diff[j] = pfi.value;
        ratio[j] = pfi.replaced_ge / pfi.baseline_ge;
      }
      ShapleyConfig config;
      config.mode = ShapleyConfig::Mode::kApprox;
      config.m_feat = options.m_feat;
      config.m_obs = options.m_obs;
      config.seed = DeriveKey(options.seed, {kShapleyTag, mi, rep});
      const ShapleyResult shap = ShapleyApprox(*model, test, loss, config);

      double sum = 0.0, var = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        sum += shap.phi[j];
        var += shap.standard_errors[j] * shap.standard_errors[j];
      }
      result.difference_pfi.push_back(diff);
      result.ratio_pfi.push_back(ratio);
      result.sfimp.push_back(shap.phi);
      result.sfimp_se.push_back(shap.standard_errors);
      result.mse.push_back(EmpiricalGe(*model, test, loss));
      result.total.push_back(shap.total);
      result.efficiency_ok.push_back(std::abs(sum - shap.total) < 4.0 * std::sqrt(var));
    }
    report.models.push_back(std::move(result));
  }
  return report;
}

void WriteSim2Csv(const Sim2Report& report, std::ostream& out) {
  WriteCsvRow(out, std::vector<std::string>{"model", "rep", "feature", "difference_pfi",
                                            "ratio_pfi", "sfimp", "sfimp_se", "mse", "total"});
  for (const auto& m : report.models) {
    for (std::size_t r = 0; r < m.mse.size(); ++r) {
      for (std::size_t j = 0; j < 3; ++j) {
        WriteCsvRow(out, std::vector<std::string>{
                             LearnerName(m.learner), std::to_string(r), "X" + std::to_string(j + 1),
                             FormatNumber(m.difference_pfi[r][j]), FormatNumber(m.ratio_pfi[r][j]),
                             FormatNumber(m.sfimp[r][j]), FormatNumber(m.sfimp_se[r][j]),
                             FormatNumber(m.mse[r]), FormatNumber(m.total[r])});
      }
    }
  }
}

std::string Sim2Summary(const Sim2Report& report) {
  const Sim2Options& o = report.options;
  std::string s;
  s += "linear-interaction study: Y = X1 + X2 + X3 + X1 X2 + e\n";
  s += "noise: N(0, " + Fixed(o.noise_sd * o.noise_sd, 4) + ") with the second parameter read as "
       "the variance (sd " + Fixed(o.noise_sd, 4) + ")\n";
  s += "train_n=" + std::to_string(o.train_n) + " test_n=" + std::to_string(o.test_n) +
       " reps=" + std::to_string(o.reps) + " seed=" + std::to_string(o.seed) +
       " m_feat=" + std::to_string(o.m_feat) + " m_obs=" + std::to_string(o.m_obs) + "\n";
  s += "median importance ratio over reps (X1/X3, X2/X3)\n";
  for (const auto& m : report.models) {
    auto med = [&](const std::vector<std::vector<double>>& v, std::size_t j) {
      return Fixed(Median(m.Ratios(v, j)), 2);
    };
    std::size_t ok = 0;
    for (bool b : m.efficiency_ok) ok += b ? 1 : 0;
    s += "  " + LearnerName(m.learner) + " [" + m.model + "]: PFI diff " +
         med(m.difference_pfi, 0) + ", " + med(m.difference_pfi, 1) + "; PFI ratio " +
         med(m.ratio_pfi, 0) + ", " + med(m.ratio_pfi, 1) + "; SFIMP " + med(m.sfimp, 0) +
         ", " + med(m.sfimp, 1) + "; efficiency " + std::to_string(ok) + "/" +
         std::to_string(m.efficiency_ok.size()) + "\n";
  }
  s += "first repetition (model MSE, SFIMP per feature, share of v(P))\n";
  for (const auto& m : report.models) {
    double sum = 0.0;
    for (double v : m.sfimp[0]) sum += v;
    s += "  " + LearnerName(m.learner) + ": mse " + Fixed(m.mse[0]);
    for (std::size_t j = 0; j < 3; ++j) {
      s += "  X" + std::to_string(j + 1) + " " + Fixed(m.sfimp[0][j]);
      if (std::abs(sum) > 1e-12) s += " (" + Fixed(100.0 * m.sfimp[0][j] / sum, 1) + "%)";
    }
    s += "  v(P) " + Fixed(m.total[0]) + "\n";
  }
  return s;
}

}  // namespace bbfi
