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

#ifndef BBFI_SHAPLEY_H_
#define BBFI_SHAPLEY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "bbfi/data.h"
#include "bbfi/importance.h"
#include "bbfi/loss.h"
#include "bbfi/models.h"

namespace bbfi {

// Bitmask over feature indices; bit j set means feature j is in the coalition.
using Coalition = std::uint64_t;

inline constexpr std::size_t kMaxExactFeatures = 12;

// Memoised characteristic function v: 2^P -> R.
//
// The model-backed game is v(S) = GE_S - GE_empty, where GE_S keeps the
// features of S and replaces those of the complement, and GE_empty replaces
// all of them. Values are usually negative: using features lowers the error.
// With an approx estimator, coalition S draws its observation permutations
// from DeriveKey(seed, {S, l}), so a cache hit is an exact replay.
class CharacteristicCache {
 public:
  using GameFunction = std::function<double(Coalition)>;

  CharacteristicCache(const Predictor& model, const Dataset& d, LossFn loss,
                      EstimatorKind estimator = EstimatorKind::VStatistic());
  // Synthetic game over p players; `game` must return 0 for the empty set.
  CharacteristicCache(std::size_t p, GameFunction game);

  CharacteristicCache(const CharacteristicCache&) = delete;
  CharacteristicCache& operator=(const CharacteristicCache&) = delete;

  std::size_t p() const { return p_; }
  double Value(Coalition s);
  double Value(const FeatureSet& s) { return Value(s.Mask()); }
  // Replaced-feature error GE_S (model-backed games only).
  double GeKept(Coalition s);
  // Number of distinct coalitions evaluated so far.
  std::size_t evaluations() const;

 private:
  double Compute(Coalition s);

  std::size_t p_;
  const Predictor* model_ = nullptr;
  const Dataset* data_ = nullptr;
  LossFn loss_;
  EstimatorKind estimator_;
  GameFunction game_;
  mutable std::shared_mutex mu_;
  std::unordered_map<Coalition, double> values_;
  std::unordered_map<Coalition, double> ge_;
};

// Delta_j(S) = v(S + {j}) - v(S); fails if j is in S.
double MarginalContribution(CharacteristicCache& cache, std::size_t j,
                            const FeatureSet& s);

// Exact Shapley values of the cached game via coalition weights
// |S|! (p - |S| - 1)! / p!. Requires p <= kMaxExactFeatures.
std::vector<double> ExactShapleyValues(CharacteristicCache& cache);

// Permutation sampling shared by every Monte-Carlo Shapley estimator. For each
// feature j and iteration t < m, a feature permutation is drawn uniformly
// (Fisher-Yates) from DeriveKey(seed, {j, t}); S is the set of features
// preceding j. `marginal(j, S, key)` returns the sampled contribution, where
// key = DeriveKey(seed, {j, t, 1}) seeds any further randomness. Features
// are processed concurrently; results do not depend on the worker count.
using MarginalSampler =
    std::function<double(std::size_t j, Coalition s, std::uint64_t key)>;

struct SampledShapley {
  std::vector<double> phi;
  // Standard error of each phi from the spread of its iteration values.
  std::vector<double> standard_errors;
  // Per-feature contributions Delta_j^(t), t = 0..m-1.
  std::vector<std::vector<double>> contributions;
};

SampledShapley SamplePermutationShapley(std::size_t p, std::size_t m,
                                        std::uint64_t seed,
                                        const MarginalSampler& marginal);

struct ShapleyConfig {
  enum class Mode { kExact, kApprox };
  Mode mode = Mode::kApprox;
  std::size_t m_feat = 100;
  std::size_t m_obs = 5;
  std::uint64_t seed = 0;

  std::string Describe() const;
};

struct ShapleyResult {
  std::vector<std::string> feature_names;
  std::vector<double> phi;
  // Empty in exact mode.
  std::vector<double> standard_errors;
  // v(P) = GE_P - GE_empty with the full V-statistic.
  double total = 0.0;
  // phi_j / sum(phi); empty when sum(phi) is numerically zero.
  std::vector<double> proportions;
  ShapleyConfig config;
};

// Shapley feature importance from the exact game (full V-statistic per
// coalition); deterministic.
ShapleyResult ShapleyExact(const Predictor& model, const Dataset& d, LossFn loss,
                           const ShapleyConfig& config);

// Monte-Carlo approximation. For feature j and iteration t: draw a feature
// permutation, let S be the features before j, then for each of m_obs
// observation permutations tau accumulate
//   GE_S     += (1/n) sum_i L(f(x_S^(i), x_C^(tau(i))), y_i)
//   GE_{S+j} += the same with j kept,
// sharing tau between the two, and record Delta_j^(t) = (GE_{S+j} - GE_S)/m_obs.
// phi_j is the mean of Delta_j^(t) over t.
ShapleyResult ShapleyApprox(const Predictor& model, const Dataset& d, LossFn loss,
                            const ShapleyConfig& config);

// Dispatches on config.mode.
ShapleyResult ComputeShapley(const Predictor& model, const Dataset& d, LossFn loss,
                             const ShapleyConfig& config);

// phi_j / sum(phi); fails with "nothing to explain" when |sum(phi)| <= 1e-12.
std::vector<double> ExplainedProportion(const ShapleyResult& result);

}  // namespace bbfi

#endif  // BBFI_SHAPLEY_H_
