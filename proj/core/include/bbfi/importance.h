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

#ifndef BBFI_IMPORTANCE_H_
#define BBFI_IMPORTANCE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbfi/data.h"
#include "bbfi/loss.h"
#include "bbfi/models.h"

namespace bbfi {

// A replacement tuple for the features of S, in FeatureSet index order.
struct GridPoint {
  std::vector<double> values;
  // Row the tuple was copied from, if it came from the data.
  std::optional<std::size_t> source_row;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

// How replacement values for S are chosen. Tuples for |S| > 1 always come
// from a single source row; marginal values are never crossed.
class GridSpec {
 public:
  enum class Strategy { kAllObserved, kSample, kExplicit };

  static GridSpec AllObserved();
  // m distinct rows drawn with `seed`, kept in row order.
  static GridSpec Sample(std::size_t m, std::uint64_t seed);
  static GridSpec Explicit(std::vector<std::vector<double>> tuples);
  // AllObserved for n <= 500, Sample(100, seed) above.
  static GridSpec Default(std::size_t n, std::uint64_t seed);

  Strategy strategy() const { return strategy_; }
  std::size_t m() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  std::string Describe() const;

  std::vector<GridPoint> Resolve(const Dataset& d, const FeatureSet& s) const;

 private:
  Strategy strategy_ = Strategy::kAllObserved;
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<double>> tuples_;
};

// Ordered (abscissa, ordinate) pairs. For a categorical abscissa the values
// are level indices and `abscissa_labels` holds the level names.
struct Curve {
  std::string label;
  std::vector<double> abscissa;
  std::vector<double> ordinates;
  std::vector<std::string> abscissa_labels;
  // Row the curve belongs to, for ICI and ICE curves.
  std::optional<std::size_t> observation;

  std::size_t size() const { return abscissa.size(); }
};

// Loss changes Delta L_i(x_S^(k)) = L(f(x_S^(k), x_C^(i)), y_i) - L(f(x_i), y_i)
// for every grid point k and observation i. Cells are kept when
// n_grid * n <= the cell cap; the per-grid-point and per-observation means
// are always available.
class ImportanceMatrix {
 public:
  const FeatureSet& features() const { return features_; }
  const std::vector<GridPoint>& grid() const { return grid_; }
  LossFn loss() const { return loss_; }
  std::size_t num_grid() const { return grid_.size(); }
  std::size_t num_obs() const { return baseline_.size(); }
  const std::vector<double>& baseline() const { return baseline_; }

  bool materialized() const { return cells_.has_value(); }
  // Requires materialized().
  double cell(std::size_t k, std::size_t i) const;
  const Matrix& cells() const;

  // (1/n) sum_i cell(k, i) for every k.
  const std::vector<double>& grid_means() const { return grid_means_; }
  // (1/n_grid) sum_k cell(k, i) for every i.
  const std::vector<double>& observation_means() const { return observation_means_; }

  // Grid indices ordered by the first feature of S (stable).
  std::vector<std::size_t> SortedGridOrder() const;
  // Plot coordinate of grid point k and its label (level name or empty).
  double Abscissa(std::size_t k) const { return grid_[k].values.front(); }
  const std::string& feature_label() const { return feature_label_; }
  const std::vector<std::string>& level_labels() const { return level_labels_; }

  // Assembles a matrix from precomputed cells (e.g. a stored fixture).
  static ImportanceMatrix FromCells(FeatureSet features, std::vector<GridPoint> grid,
                                    LossFn loss, std::vector<double> baseline,
                                    Matrix cells, std::string feature_label = "x",
                                    std::vector<std::string> level_labels = {});

 private:
  friend ImportanceMatrix DeltaLossMatrix(const Predictor&, const Dataset&,
                                          const FeatureSet&, const GridSpec&,
                                          LossFn, std::size_t);
  void FinishAggregates();

  FeatureSet features_;
  std::vector<GridPoint> grid_;
  LossFn loss_;
  std::vector<double> baseline_;
  std::optional<Matrix> cells_;
  std::vector<double> grid_means_;
  std::vector<double> observation_means_;
  std::string feature_label_;
  std::vector<std::string> level_labels_;
};

inline constexpr std::size_t kDefaultCellCap = 100'000'000;

// One batched prediction for the baseline plus one per grid point.
ImportanceMatrix DeltaLossMatrix(const Predictor& model, const Dataset& d,
                                 const FeatureSet& s, const GridSpec& grid,
                                 LossFn loss, std::size_t cell_cap = kDefaultCellCap);

struct EstimatorKind {
  enum class Type { kVStatistic, kUStatistic, kApprox };
  Type type = Type::kVStatistic;
  // Number of observation permutations for kApprox.
  std::size_t m = 0;
  std::uint64_t seed = 0;

  static EstimatorKind VStatistic() { return {}; }
  static EstimatorKind UStatistic() { return {Type::kUStatistic, 0, 0}; }
  static EstimatorKind Approx(std::size_t m, std::uint64_t seed);
  std::string Describe() const;
};

// Generalisation error with the features of S replaced:
//   v-statistic: (1/n) sum_i (1/n) sum_k L(f(x_S^(k), x_C^(i)), y_i)
//   u-statistic: (1/n) sum_i (1/(n-1)) sum_{k != i} L(...)
//   approx:      (1/n) sum_i (1/m) sum_{l<=m} L(f(x_S^(tau_l(i)), x_C^(i)), y_i)
// with the m permutations tau_l drawn up front from the seed.
double GeReplaced(const Predictor& model, const Dataset& d, const FeatureSet& s,
                  LossFn loss, EstimatorKind estimator);

// The permutation form for caller-supplied observation permutations. Row i
// takes the S-values of row perm[i].
double GeFromPermutations(const Predictor& model, const Dataset& d, const FeatureSet& s,
                          LossFn loss, std::span<const std::vector<std::size_t>> perms);

// The m permutations an approx estimator uses.
std::vector<std::vector<std::size_t>> DrawObservationPermutations(std::size_t n,
                                                                  std::size_t m,
                                                                  std::uint64_t seed);

enum class PfiMode { kDifference, kRatio };

struct ImportanceResult {
  FeatureSet features;
  PfiMode mode = PfiMode::kDifference;
  EstimatorKind estimator;
  double value = 0.0;
  double baseline_ge = 0.0;
  double replaced_ge = 0.0;
};

// Baselines at or below this are rejected in ratio mode.
inline constexpr double kDegenerateBaseline = 1e-12;

ImportanceResult Pfi(const Predictor& model, const Dataset& d, const FeatureSet& s,
                     LossFn loss, PfiMode mode, EstimatorKind estimator);

// One curve per observation over the sorted grid. With omit_own_point, grid
// points copied from the curve's own row are dropped.
std::vector<Curve> IciCurves(const ImportanceMatrix& m, bool omit_own_point = false);
Curve PiCurve(const ImportanceMatrix& m);
double LocalImportance(const ImportanceMatrix& m, std::size_t i);

// Mean local importance over the rows of each group; the grid is not
// restricted to the group.
std::map<std::string, double> ConditionalPfi(
    const ImportanceMatrix& m, const std::map<std::string, std::vector<bool>>& groups);

// Variant that recomputes each group's difference PFI on the group's rows
// alone, so the grid is restricted to the group as well.
std::map<std::string, double> ConditionalPfiSubsetGrid(
    const Predictor& model, const Dataset& d, const FeatureSet& s, LossFn loss,
    const std::map<std::string, std::vector<bool>>& groups);

// Row masks: one group per level of a categorical feature (levels without rows
// are skipped), or "<name><threshold" / "<name>>=<threshold>" for a numeric one.
std::map<std::string, std::vector<bool>> GroupsByFeature(const Dataset& d,
                                                         std::size_t feature,
                                                         std::optional<double> threshold);

// Long-form export: grid_index, grid value per feature of S, observation,
// delta_loss.
void WriteImportanceMatrixCsv(const ImportanceMatrix& m, const Dataset& d,
                              std::ostream& out);

}  // namespace bbfi

#endif  // BBFI_IMPORTANCE_H_
