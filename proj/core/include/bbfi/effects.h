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

#ifndef BBFI_EFFECTS_H_
#define BBFI_EFFECTS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bbfi/data.h"
#include "bbfi/importance.h"
#include "bbfi/loss.h"
#include "bbfi/models.h"

namespace bbfi {

// Partial dependence: at grid point k, (1/n) sum_i f(x_S^(k), x_C^(i)).
// For an empty S the curve has a single point, the mean prediction.
Curve PdFunction(const Predictor& model, const Dataset& d, const FeatureSet& s,
                 const GridSpec& grid);

// One curve per observation: f(x_S^(k), x_C^(i)) over the sorted grid.
std::vector<Curve> IceCurves(const Predictor& model, const Dataset& d,
                             const FeatureSet& s, const GridSpec& grid);

struct EffectAndImportanceCurves {
  Curve pd;
  Curve pi;
  std::vector<Curve> ice;
  std::vector<Curve> ici;
};

// PD, PI, ICE and ICI from a single pass over the grid: one batched
// prediction per grid point, then both the prediction and the loss change
// are averaged over observations.
EffectAndImportanceCurves PdAndPiCurves(const Predictor& model, const Dataset& d,
                                        LossFn loss, const FeatureSet& s,
                                        const GridSpec& grid);

struct EffectShapleyMode {
  enum class Type { kExact, kSampled };
  Type type = Type::kExact;
  std::size_t m = 0;
  std::uint64_t seed = 0;

  static EffectShapleyMode Exact() { return {}; }
  static EffectShapleyMode Sampled(std::size_t m, std::uint64_t seed) {
    return {Type::kSampled, m, seed};
  }
};

struct EffectShapley {
  std::vector<double> observation;
  std::vector<double> phi;
  // Mean prediction over the data, f_empty.
  double baseline = 0.0;
  // f(x).
  double prediction = 0.0;
  // Sampled mode only.
  std::vector<double> standard_errors;
};

// Shapley attribution of one prediction with game value
//   v(S) = (1/n) sum_i f(x_S, x_C^(i)) - (1/n) sum_i f(x^(i)).
// Exact mode weights all 2^p coalitions. Sampled mode draws m feature
// permutations per feature with the shared permutation sampler and
// evaluates each marginal contribution exactly on the data, memoising
// coalition values.
EffectShapley ShapleyEffect(const Predictor& model, const Dataset& d,
                            std::span<const double> x, EffectShapleyMode mode);

}  // namespace bbfi

#endif  // BBFI_EFFECTS_H_
