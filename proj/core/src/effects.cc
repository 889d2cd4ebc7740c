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

#include "bbfi/effects.h"

#include <algorithm>

#include "bbfi/error.h"
#include "bbfi/numeric.h"
#include "bbfi/parallel.h"
#include "bbfi/shapley.h"
#include "replace.h"

namespace bbfi {
namespace {

std::vector<double> PredictChecked(const Predictor& model, const Matrix& rows) {
  std::vector<double> pred = model.Predict(rows);
  if (pred.size() != rows.rows()) throw Error("model returned the wrong number of predictions");
  return pred;
}

struct GridPredictions {
  std::vector<GridPoint> grid;
  std::vector<std::size_t> order;  // grid indices sorted by the first feature
  std::vector<std::vector<double>> pred;  // pred[k][i]
};

GridPredictions PredictOverGrid(const Predictor& model, const Dataset& d, const FeatureSet& s,
                                const GridSpec& spec) {
  CheckSchemaMatches(model, d);
  GridPredictions out;
  out.grid = spec.Resolve(d, s);
  out.order.resize(out.grid.size());
  for (std::size_t k = 0; k < out.order.size(); ++k) out.order[k] = k;
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    return out.grid[a].values.front() < out.grid[b].values.front();
  });
  out.pred.resize(out.grid.size());
  ParallelFor(out.grid.size(), [&](std::size_t k) {
    out.pred[k] = PredictChecked(model, internal::WithColumns(d.x(), s, out.grid[k].values));
  });
  return out;
}

Curve Skeleton(const Dataset& d, const FeatureSet& s, const GridPredictions& g) {
  Curve curve;
  const FeatureKind& kind = d.kind(s.front());
  for (std::size_t k : g.order) {
    const double v = g.grid[k].values.front();
    curve.abscissa.push_back(v);
    if (kind.is_categorical()) curve.abscissa_labels.push_back(kind.levels()[static_cast<std::size_t>(v)]);
  }
  return curve;
}

std::string Label(const Dataset& d, const FeatureSet& s) {
  std::string out;
  for (std::size_t j : s.indices()) out += (out.empty() ? "" : ",") + d.feature_names()[j];
  return out;
}

}  // namespace

Curve PdFunction(const Predictor& model, const Dataset& d, const FeatureSet& s,
                 const GridSpec& grid) {
  if (s.empty()) {
    CheckSchemaMatches(model, d);
    Curve curve;
    curve.label = "PD (no features)";
    curve.abscissa.push_back(0.0);
    curve.ordinates.push_back(Mean(PredictChecked(model, d.x())));
    return curve;
  }
  const GridPredictions g = PredictOverGrid(model, d, s, grid);
  Curve curve = Skeleton(d, s, g);
  curve.label = "PD " + Label(d, s);
  for (std::size_t k : g.order) curve.ordinates.push_back(Mean(g.pred[k]));
  return curve;
}

std::vector<Curve> IceCurves(const Predictor& model, const Dataset& d, const FeatureSet& s,
                             const GridSpec& grid) {
  const GridPredictions g = PredictOverGrid(model, d, s, grid);
  const Curve skeleton = Skeleton(d, s, g);
  std::vector<Curve> curves(d.n(), skeleton);
  for (std::size_t i = 0; i < d.n(); ++i) {
    curves[i].label = "ICE " + std::to_string(i);
    curves[i].observation = i;
    for (std::size_t k : g.order) curves[i].ordinates.push_back(g.pred[k][i]);
  }
  return curves;
}

EffectAndImportanceCurves PdAndPiCurves(const Predictor& model, const Dataset& d, LossFn loss,
                                        const FeatureSet& s, const GridSpec& grid) {
  const GridPredictions g = PredictOverGrid(model, d, s, grid);
  const std::vector<double> base_pred = PredictChecked(model, d.x());
  std::vector<double> baseline(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) baseline[i] = loss(base_pred[i], d.y()[i]);

  const Curve skeleton = Skeleton(d, s, g);
  const std::string label = Label(d, s);
  EffectAndImportanceCurves out;
  out.pd = skeleton;
  out.pd.label = "PD " + label;
  out.pi = skeleton;
  out.pi.label = "PI " + label;
  out.ice.assign(d.n(), skeleton);
  out.ici.assign(d.n(), skeleton);
  for (std::size_t i = 0; i < d.n(); ++i) {
    out.ice[i].label = "ICE " + std::to_string(i);
    out.ici[i].label = "ICI " + std::to_string(i);
    out.ice[i].observation = out.ici[i].observation = i;
  }
  for (std::size_t k : g.order) {
    RunningMean pd, pi;
    for (std::size_t i = 0; i < d.n(); ++i) {
      const double f = g.pred[k][i];
      const double delta = loss(f, d.y()[i]) - baseline[i];
      pd.Add(f);
      pi.Add(delta);
      out.ice[i].ordinates.push_back(f);
      out.ici[i].ordinates.push_back(delta);
    }
    out.pd.ordinates.push_back(pd.value());
    out.pi.ordinates.push_back(pi.value());
  }
  return out;
}

EffectShapley ShapleyEffect(const Predictor& model, const Dataset& d, std::span<const double> x,
                            EffectShapleyMode mode) {
  CheckSchemaMatches(model, d);
  if (x.size() != d.p()) {
    throw Error("observation has " + std::to_string(x.size()) + " values, expected " +
                std::to_string(d.p()));
  }
  d.schema().ValidateRow(x);
  const std::size_t p = d.p();

  EffectShapley out;
  out.observation.assign(x.begin(), x.end());
  out.baseline = Mean(PredictChecked(model, d.x()));
  Matrix single(1, p);
  std::copy(x.begin(), x.end(), single.row(0).begin());
  out.prediction = PredictChecked(model, single).front();

  CharacteristicCache game(p, [&](Coalition mask) {
    if (mask == 0) return 0.0;
    const FeatureSet s = FeatureSet::FromMask(mask);
    std::vector<double> tuple;
    for (std::size_t j : s.indices()) tuple.push_back(x[j]);
    return Mean(PredictChecked(model, internal::WithColumns(d.x(), s, tuple))) - out.baseline;
  });

  if (mode.type == EffectShapleyMode::Type::kExact) {
    out.phi = ExactShapleyValues(game);
    return out;
  }
  SampledShapley sampled = SamplePermutationShapley(
      p, mode.m, mode.seed, [&](std::size_t j, Coalition s, std::uint64_t) {
        return game.Value(s | (Coalition{1} << j)) - game.Value(s);
      });
  out.phi = std::move(sampled.phi);
  out.standard_errors = std::move(sampled.standard_errors);
  return out;
}

}  // namespace bbfi
