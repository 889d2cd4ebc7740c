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

#include "bbfi/shapley.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>

#include "bbfi/error.h"
#include "bbfi/numeric.h"
#include "bbfi/parallel.h"
#include "bbfi/random.h"

namespace bbfi {
namespace {

Coalition FullMask(std::size_t p) {
  return p == 64 ? ~Coalition{0} : (Coalition{1} << p) - 1;
}

FeatureSet ToFeatureSet(Coalition mask) { return FeatureSet::FromMask(mask); }

// (1/n) sum_i L(f(x^(i) with columns `replaced` taken from row tau(i)), y_i).
double MeanLossReplacedFrom(const Predictor& model, const Dataset& d, Coalition replaced,
                            std::span<const std::size_t> tau, LossFn loss) {
  if (replaced == 0) return EmpiricalGe(model, d, loss);
  Matrix x = d.x();
  const FeatureSet c = ToFeatureSet(replaced);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j : c.indices()) x(r, j) = d.at(tau[r], j);
  }
  const std::vector<double> pred = model.Predict(x);
  RunningMean mean;
  for (std::size_t i = 0; i < pred.size(); ++i) mean.Add(loss(pred[i], d.y()[i]));
  return mean.value();
}

double SortedSum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

}  // namespace

// ---------------------------------------------------------------------------
// Characteristic function

CharacteristicCache::CharacteristicCache(const Predictor& model, const Dataset& d, LossFn loss,
                                         EstimatorKind estimator)
    : p_(d.p()), model_(&model), data_(&d), loss_(loss), estimator_(estimator) {
  CheckSchemaMatches(model, d);
  if (p_ > 63) throw Error("coalitions are limited to 63 features");
}

CharacteristicCache::CharacteristicCache(std::size_t p, GameFunction game)
    : p_(p), game_(std::move(game)) {
  if (p_ < 1 || p_ > 63) throw Error("synthetic games need 1..63 players");
  if (game_(0) != 0.0) throw Error("a characteristic function must vanish on the empty set");
}

std::size_t CharacteristicCache::evaluations() const {
  std::shared_lock lock(mu_);
  return model_ ? ge_.size() : values_.size();
}

double CharacteristicCache::GeKept(Coalition s) {
  if (!model_) throw Error("GE is only defined for model-backed games");
  if ((s & ~FullMask(p_)) != 0) throw Error("coalition refers to features beyond p");
  {
    std::shared_lock lock(mu_);
    if (auto it = ge_.find(s); it != ge_.end()) return it->second;
  }
  const Coalition replaced = FullMask(p_) & ~s;
  double ge = 0.0;
  if (replaced == 0) {
    ge = EmpiricalGe(*model_, *data_, loss_);
  } else if (estimator_.type == EstimatorKind::Type::kApprox) {
    RunningMean mean;
    for (std::size_t l = 0; l < estimator_.m; ++l) {
      CounterStream stream(DeriveKey(estimator_.seed, {s, l}));
      const auto tau = RandomPermutation(data_->n(), stream);
      mean.Add(MeanLossReplacedFrom(*model_, *data_, replaced, tau, loss_));
    }
    ge = mean.value();
  } else {
    ge = GeReplaced(*model_, *data_, ToFeatureSet(replaced), loss_, estimator_);
  }
  std::unique_lock lock(mu_);
  return ge_.emplace(s, ge).first->second;
}

double CharacteristicCache::Compute(Coalition s) {
  if (game_) return s == 0 ? 0.0 : game_(s);
  return GeKept(s) - GeKept(0);
}

double CharacteristicCache::Value(Coalition s) {
  if ((s & ~FullMask(p_)) != 0) throw Error("coalition refers to features beyond p");
  {
    std::shared_lock lock(mu_);
    if (auto it = values_.find(s); it != values_.end()) return it->second;
  }
  const double v = Compute(s);
  std::unique_lock lock(mu_);
  return values_.emplace(s, v).first->second;
}

double MarginalContribution(CharacteristicCache& cache, std::size_t j, const FeatureSet& s) {
  if (j >= cache.p()) throw Error("feature index out of range");
  if (s.contains(j)) throw Error("feature " + std::to_string(j) + " is already in the coalition");
  const Coalition mask = s.Mask();
  return cache.Value(mask | (Coalition{1} << j)) - cache.Value(mask);
}

std::vector<double> ExactShapleyValues(CharacteristicCache& cache) {
  const std::size_t p = cache.p();
  if (p > kMaxExactFeatures) {
    throw Error("exact Shapley values need p <= " + std::to_string(kMaxExactFeatures) +
                " (p = " + std::to_string(p) + "); use approx mode");
  }
  // weight[s] = s! (p - s - 1)! / p! = 1 / (p * C(p-1, s))
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) {
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) {
      binom = binom * static_cast<double>(p - 1 - s + k) / static_cast<double>(k);
    }
    weight[s] = 1.0 / (static_cast<double>(p) * binom);
  }
  const Coalition full = FullMask(p);
  std::vector<double> phi(p);
  for (std::size_t j = 0; j < p; ++j) {
    const Coalition bit = Coalition{1} << j;
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << (p - 1));
    for (Coalition s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const double delta = cache.Value(s | bit) - cache.Value(s);
      terms.push_back(weight[static_cast<std::size_t>(std::popcount(s))] * delta);
    }
    phi[j] = SortedSum(std::move(terms));
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Permutation sampling

SampledShapley SamplePermutationShapley(std::size_t p, std::size_t m, std::uint64_t seed,
                                        const MarginalSampler& marginal) {
  if (p < 1 || p > 63) throw Error("permutation sampling needs 1..63 features");
  if (m < 1) throw Error("at least one feature permutation is required");
  SampledShapley out;
  out.phi.resize(p);
  out.standard_errors.resize(p);
  out.contributions.assign(p, std::vector<double>(m));
  ParallelFor(p, [&](std::size_t j) {
    for (std::size_t t = 0; t < m; ++t) {
      CounterStream stream(DeriveKey(seed, {j, t}));
      const std::vector<std::size_t> pi = RandomPermutation(p, stream);
      Coalition s = 0;
      for (std::size_t f : pi) {
        if (f == j) break;
        s |= Coalition{1} << f;
      }
      out.contributions[j][t] = marginal(j, s, DeriveKey(seed, {j, t, 1}));
    }
    out.phi[j] = Mean(out.contributions[j]);
    out.standard_errors[j] =
        StandardDeviation(out.contributions[j]) / std::sqrt(static_cast<double>(m));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Shapley feature importance

std::string ShapleyConfig::Describe() const {
  if (mode == Mode::kExact) return "exact";
  return "approx(m_feat=" + std::to_string(m_feat) + ", m_obs=" + std::to_string(m_obs) +
         ", seed=" + std::to_string(seed) + ")";
}

namespace {

ShapleyResult Finish(const Dataset& d, const ShapleyConfig& config, std::vector<double> phi,
                     double total) {
  ShapleyResult result;
  result.feature_names = d.feature_names();
  result.phi = std::move(phi);
  result.total = total;
  result.config = config;
  double sum = 0.0;
  for (double v : result.phi) sum += v;
  if (std::abs(sum) > 1e-12) {
    for (double v : result.phi) result.proportions.push_back(v / sum);
  }
  return result;
}

}  // namespace

ShapleyResult ShapleyExact(const Predictor& model, const Dataset& d, LossFn loss,
                           const ShapleyConfig& config) {
  CharacteristicCache cache(model, d, loss);
  std::vector<double> phi = ExactShapleyValues(cache);
  const double total = cache.Value(FullMask(d.p()));
  return Finish(d, config, std::move(phi), total);
}

ShapleyResult ShapleyApprox(const Predictor& model, const Dataset& d, LossFn loss,
                            const ShapleyConfig& config) {
  CheckSchemaMatches(model, d);
  if (config.m_feat < 1 || config.m_obs < 1) throw Error("m_feat and m_obs must be at least 1");
  const std::size_t p = d.p();
  const Coalition full = FullMask(p);

  SampledShapley sampled = SamplePermutationShapley(
      p, config.m_feat, config.seed, [&](std::size_t j, Coalition s, std::uint64_t key) {
        const Coalition with_j = s | (Coalition{1} << j);
        double ge_s = 0.0, ge_sj = 0.0;
        for (std::size_t l = 0; l < config.m_obs; ++l) {
          CounterStream stream(DeriveKey(key, {l}));
          const auto tau = RandomPermutation(d.n(), stream);
          ge_s += MeanLossReplacedFrom(model, d, full & ~s, tau, loss);
          ge_sj += MeanLossReplacedFrom(model, d, full & ~with_j, tau, loss);
        }
        return (ge_sj - ge_s) / static_cast<double>(config.m_obs);
      });

  const double total = EmpiricalGe(model, d, loss) -
                       GeReplaced(model, d, FeatureSet::All(p), loss, EstimatorKind::VStatistic());
  ShapleyResult result = Finish(d, config, std::move(sampled.phi), total);
  result.standard_errors = std::move(sampled.standard_errors);
  return result;
}

ShapleyResult ComputeShapley(const Predictor& model, const Dataset& d, LossFn loss,
                             const ShapleyConfig& config) {
  return config.mode == ShapleyConfig::Mode::kExact ? ShapleyExact(model, d, loss, config)
                                                    : ShapleyApprox(model, d, loss, config);
}

std::vector<double> ExplainedProportion(const ShapleyResult& result) {
  double sum = 0.0;
  for (double v : result.phi) sum += v;
  if (std::abs(sum) <= 1e-12) throw Error("nothing to explain: Shapley values sum to zero");
  std::vector<double> out;
  for (double v : result.phi) out.push_back(v / sum);
  return out;
}

}  // namespace bbfi
