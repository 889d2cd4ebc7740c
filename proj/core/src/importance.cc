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

#include "bbfi/importance.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "bbfi/error.h"
#include "bbfi/numeric.h"
#include "bbfi/parallel.h"
#include "bbfi/random.h"
#include "bbfi/table_io.h"
#include "replace.h"

namespace bbfi {
namespace {

using internal::WithColumns;

// Streaming buffers never hold more than this many losses at once.
constexpr std::size_t kStreamBlockCells = std::size_t{1} << 22;

void CheckFeatureSet(const Dataset& d, const FeatureSet& s) {
  if (s.empty()) throw Error("feature set S must not be empty");
  s.CheckWithin(d.p());
}

void CheckTuple(const Dataset& d, const FeatureSet& s, std::span<const double> tuple) {
  if (tuple.size() != s.size()) {
    throw Error("grid tuple has " + std::to_string(tuple.size()) + " values, S has " +
                std::to_string(s.size()) + " features");
  }
  for (std::size_t a = 0; a < s.size(); ++a) {
    const std::size_t j = s.indices()[a];
    const double v = tuple[a];
    if (!std::isfinite(v)) throw Error("grid value for '" + d.feature_names()[j] + "' is not finite");
    const FeatureKind& kind = d.kind(j);
    if (kind.is_categorical() &&
        (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(kind.num_levels()))) {
      throw Error("grid value " + FormatNumber(v) + " is outside the levels of '" +
                  d.feature_names()[j] + "'");
    }
  }
}

// Row i takes its S values from row source[i].
Matrix WithColumnsFrom(const Matrix& x, const FeatureSet& s, std::span<const std::size_t> source) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j : s.indices()) out(r, j) = x(source[r], j);
  }
  return out;
}

std::vector<double> Losses(const Predictor& model, const Matrix& rows,
                           const std::vector<double>& y, LossFn loss) {
  std::vector<double> pred = model.Predict(rows);
  if (pred.size() != rows.rows()) throw Error("model returned the wrong number of predictions");
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = loss(pred[i], y[i]);
  return pred;
}

// Computes the loss vector L(f(x_S^(k), x_C^(i)), y^(i)) over i for every grid
// point k. Blocks of grid points run in parallel; `sink` sees them in order.
void ForEachGridLosses(const Predictor& model, const Dataset& d, const FeatureSet& s,
                       const std::vector<GridPoint>& grid, LossFn loss, std::size_t block_cells,
                       const std::function<void(std::size_t, std::span<const double>)>& sink) {
  const std::size_t block = std::max<std::size_t>(1, std::min(grid.size(), block_cells / d.n()));
  std::vector<std::vector<double>> rows(block);
  for (std::size_t start = 0; start < grid.size(); start += block) {
    const std::size_t count = std::min(block, grid.size() - start);
    ParallelFor(count, [&](std::size_t b) {
      rows[b] = Losses(model, WithColumns(d.x(), s, grid[start + b].values), d.y(), loss);
    });
    for (std::size_t b = 0; b < count; ++b) sink(start + b, rows[b]);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids

GridSpec GridSpec::AllObserved() { return GridSpec(); }

GridSpec GridSpec::Sample(std::size_t m, std::uint64_t seed) {
  if (m < 1) throw Error("grid sample size must be at least 1");
  GridSpec spec;
  spec.strategy_ = Strategy::kSample;
  spec.m_ = m;
  spec.seed_ = seed;
  return spec;
}

GridSpec GridSpec::Explicit(std::vector<std::vector<double>> tuples) {
  if (tuples.empty()) throw Error("explicit grid must not be empty");
  GridSpec spec;
  spec.strategy_ = Strategy::kExplicit;
  spec.m_ = tuples.size();
  spec.tuples_ = std::move(tuples);
  return spec;
}

GridSpec GridSpec::Default(std::size_t n, std::uint64_t seed) {
  return n <= 500 ? AllObserved() : Sample(100, seed);
}

std::string GridSpec::Describe() const {
  switch (strategy_) {
    case Strategy::kAllObserved:
      return "all_observed";
    case Strategy::kSample:
      return "sample(m=" + std::to_string(m_) + ", seed=" + std::to_string(seed_) + ")";
    case Strategy::kExplicit:
      return "explicit(" + std::to_string(tuples_.size()) + " points)";
  }
  return "";
}

std::vector<GridPoint> GridSpec::Resolve(const Dataset& d, const FeatureSet& s) const {
  CheckFeatureSet(d, s);
  auto from_row = [&](std::size_t r) {
    GridPoint point;
    for (std::size_t j : s.indices()) point.values.push_back(d.at(r, j));
    point.source_row = r;
    return point;
  };
  std::vector<GridPoint> grid;
  switch (strategy_) {
    case Strategy::kAllObserved:
      for (std::size_t r = 0; r < d.n(); ++r) grid.push_back(from_row(r));
      break;
    case Strategy::kSample: {
      if (m_ > d.n()) {
        throw Error("grid sample size " + std::to_string(m_) + " exceeds n = " +
                    std::to_string(d.n()));
      }
      CounterStream stream(DeriveKey(seed_, {0x6A1D}));
      for (std::size_t r : SampleWithoutReplacement(d.n(), m_, stream)) grid.push_back(from_row(r));
      break;
    }
    case Strategy::kExplicit:
      for (const auto& tuple : tuples_) {
        CheckTuple(d, s, tuple);
        grid.push_back(GridPoint{tuple, std::nullopt});
      }
      break;
  }
  return grid;
}

// ---------------------------------------------------------------------------
// The loss-change matrix

double ImportanceMatrix::cell(std::size_t k, std::size_t i) const { return cells()(k, i); }

const Matrix& ImportanceMatrix::cells() const {
  if (!cells_) {
    throw Error("the loss-change matrix exceeded the cell cap and was not kept; "
                "only aggregates are available");
  }
  return *cells_;
}

std::vector<std::size_t> ImportanceMatrix::SortedGridOrder() const {
  std::vector<std::size_t> order(grid_.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return grid_[a].values.front() < grid_[b].values.front();
  });
  return order;
}

void ImportanceMatrix::FinishAggregates() {
  const Matrix& c = *cells_;
  grid_means_.assign(c.rows(), 0.0);
  std::vector<RunningMean> obs(c.cols());
  for (std::size_t k = 0; k < c.rows(); ++k) {
    RunningMean row;
    for (std::size_t i = 0; i < c.cols(); ++i) {
      row.Add(c(k, i));
      obs[i].Add(c(k, i));
    }
    grid_means_[k] = row.value();
  }
  observation_means_.resize(c.cols());
  for (std::size_t i = 0; i < c.cols(); ++i) observation_means_[i] = obs[i].value();
}

ImportanceMatrix ImportanceMatrix::FromCells(FeatureSet features, std::vector<GridPoint> grid,
                                             LossFn loss, std::vector<double> baseline,
                                             Matrix cells, std::string feature_label,
                                             std::vector<std::string> level_labels) {
  if (features.empty()) throw Error("feature set S must not be empty");
  if (grid.empty() || baseline.empty()) throw Error("loss-change matrix must not be empty");
  if (cells.rows() != grid.size() || cells.cols() != baseline.size()) {
    throw Error("cell matrix is " + std::to_string(cells.rows()) + "x" +
                std::to_string(cells.cols()) + ", expected " + std::to_string(grid.size()) +
                "x" + std::to_string(baseline.size()));
  }
  for (const GridPoint& point : grid) {
    if (point.values.size() != features.size()) throw Error("grid tuple width differs from |S|");
  }
  ImportanceMatrix m;
  m.features_ = std::move(features);
  m.grid_ = std::move(grid);
  m.loss_ = loss;
  m.baseline_ = std::move(baseline);
  m.cells_ = std::move(cells);
  m.feature_label_ = std::move(feature_label);
  m.level_labels_ = std::move(level_labels);
  m.FinishAggregates();
  return m;
}

ImportanceMatrix DeltaLossMatrix(const Predictor& model, const Dataset& d, const FeatureSet& s,
                                 const GridSpec& grid_spec, LossFn loss, std::size_t cell_cap) {
  CheckSchemaMatches(model, d);
  ImportanceMatrix m;
  m.features_ = s;
  m.grid_ = grid_spec.Resolve(d, s);
  m.loss_ = loss;
  m.baseline_ = Losses(model, d.x(), d.y(), loss);
  for (std::size_t j : s.indices()) {
    if (!m.feature_label_.empty()) m.feature_label_ += ",";
    m.feature_label_ += d.feature_names()[j];
  }
  if (d.kind(s.front()).is_categorical()) m.level_labels_ = d.kind(s.front()).levels();

  const std::size_t n = d.n();
  const std::size_t n_grid = m.grid_.size();
  const bool keep = n_grid <= cell_cap / n;
  if (keep) m.cells_ = Matrix(n_grid, n);

  m.grid_means_.assign(n_grid, 0.0);
  std::vector<RunningMean> obs(n);
  ForEachGridLosses(model, d, s, m.grid_, loss, keep ? n_grid * n : kStreamBlockCells,
                    [&](std::size_t k, std::span<const double> losses) {
                      RunningMean row;
                      for (std::size_t i = 0; i < n; ++i) {
                        const double delta = losses[i] - m.baseline_[i];
                        if (keep) (*m.cells_)(k, i) = delta;
                        row.Add(delta);
                        obs[i].Add(delta);
                      }
                      m.grid_means_[k] = row.value();
                    });
  m.observation_means_.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.observation_means_[i] = obs[i].value();
  return m;
}

// ---------------------------------------------------------------------------
// Generalization error under replacement

EstimatorKind EstimatorKind::Approx(std::size_t m, std::uint64_t seed) {
  if (m < 1) throw Error("approx estimator needs m >= 1 permutations");
  return {Type::kApprox, m, seed};
}

std::string EstimatorKind::Describe() const {
  switch (type) {
    case Type::kVStatistic:
      return "v_statistic";
    case Type::kUStatistic:
      return "u_statistic";
    case Type::kApprox:
      return "approx(m=" + std::to_string(m) + ", seed=" + std::to_string(seed) + ")";
  }
  return "";
}

std::vector<std::vector<std::size_t>> DrawObservationPermutations(std::size_t n, std::size_t m,
                                                                  std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> perms(m);
  for (std::size_t l = 0; l < m; ++l) {
    CounterStream stream(DeriveKey(seed, {0x7A0, l}));
    perms[l] = RandomPermutation(n, stream);
  }
  return perms;
}

double GeFromPermutations(const Predictor& model, const Dataset& d, const FeatureSet& s,
                          LossFn loss, std::span<const std::vector<std::size_t>> perms) {
  CheckSchemaMatches(model, d);
  CheckFeatureSet(d, s);
  if (perms.empty()) throw Error("at least one observation permutation is required");
  for (const auto& tau : perms) {
    std::vector<bool> seen(d.n(), false);
    bool ok = tau.size() == d.n();
    for (std::size_t r : tau) {
      if (!ok) break;
      ok = r < d.n() && !seen[r];
      if (ok) seen[r] = true;
    }
    if (!ok) throw Error("observation permutation is not a permutation of 0..n-1");
  }
  std::vector<double> means(perms.size());
  ParallelFor(perms.size(), [&](std::size_t l) {
    means[l] = Mean(Losses(model, WithColumnsFrom(d.x(), s, perms[l]), d.y(), loss));
  });
  return Mean(means);
}

double GeReplaced(const Predictor& model, const Dataset& d, const FeatureSet& s, LossFn loss,
                  EstimatorKind estimator) {
  CheckSchemaMatches(model, d);
  CheckFeatureSet(d, s);
  if (estimator.type == EstimatorKind::Type::kApprox) {
    const auto perms = DrawObservationPermutations(d.n(), estimator.m, estimator.seed);
    return GeFromPermutations(model, d, s, loss, perms);
  }
  const bool u = estimator.type == EstimatorKind::Type::kUStatistic;
  if (u && d.n() < 2) throw Error("the U-statistic needs n >= 2");

  // (1/n) sum_i (1/n) sum_k, or (1/(n-1)) sum_{k != i} for the U-statistic.
  const std::vector<GridPoint> grid = GridSpec::AllObserved().Resolve(d, s);
  std::vector<RunningMean> inner(d.n());
  ForEachGridLosses(model, d, s, grid, loss, kStreamBlockCells,
                    [&](std::size_t k, std::span<const double> losses) {
                      for (std::size_t i = 0; i < d.n(); ++i) {
                        if (!(u && i == k)) inner[i].Add(losses[i]);
                      }
                    });
  RunningMean outer;
  for (const RunningMean& mean : inner) outer.Add(mean.value());
  return outer.value();
}

ImportanceResult Pfi(const Predictor& model, const Dataset& d, const FeatureSet& s, LossFn loss,
                     PfiMode mode, EstimatorKind estimator) {
  ImportanceResult result;
  result.features = s;
  result.mode = mode;
  result.estimator = estimator;
  result.baseline_ge = EmpiricalGe(model, d, loss);
  if (mode == PfiMode::kRatio && result.baseline_ge <= kDegenerateBaseline) {
    throw Error("degenerate baseline: model error " + FormatShort(result.baseline_ge) +
                " is too small for ratio importance; use difference mode");
  }
  result.replaced_ge = GeReplaced(model, d, s, loss, estimator);
  result.value = mode == PfiMode::kDifference ? result.replaced_ge - result.baseline_ge
                                              : result.replaced_ge / result.baseline_ge;
  return result;
}

// ---------------------------------------------------------------------------
// Curves and local importance

namespace {

Curve SkeletonCurve(const ImportanceMatrix& m, const std::vector<std::size_t>& order) {
  Curve curve;
  for (std::size_t k : order) {
    curve.abscissa.push_back(m.Abscissa(k));
    if (!m.level_labels().empty()) {
      curve.abscissa_labels.push_back(m.level_labels()[static_cast<std::size_t>(m.Abscissa(k))]);
    }
  }
  return curve;
}

}  // namespace

std::vector<Curve> IciCurves(const ImportanceMatrix& m, bool omit_own_point) {
  const std::vector<std::size_t> order = m.SortedGridOrder();
  const Matrix& cells = m.cells();
  std::vector<Curve> curves;
  curves.reserve(m.num_obs());
  for (std::size_t i = 0; i < m.num_obs(); ++i) {
    std::vector<std::size_t> kept;
    for (std::size_t k : order) {
      if (omit_own_point && m.grid()[k].source_row == i) continue;
      kept.push_back(k);
    }
    Curve curve = SkeletonCurve(m, kept);
    curve.label = "ICI " + std::to_string(i);
    curve.observation = i;
    for (std::size_t k : kept) curve.ordinates.push_back(cells(k, i));
    curves.push_back(std::move(curve));
  }
  return curves;
}

Curve PiCurve(const ImportanceMatrix& m) {
  const std::vector<std::size_t> order = m.SortedGridOrder();
  Curve curve = SkeletonCurve(m, order);
  curve.label = "PI " + m.feature_label();
  for (std::size_t k : order) curve.ordinates.push_back(m.grid_means()[k]);
  return curve;
}

double LocalImportance(const ImportanceMatrix& m, std::size_t i) {
  if (i >= m.num_obs()) {
    throw Error("observation " + std::to_string(i) + " out of range (n = " +
                std::to_string(m.num_obs()) + ")");
  }
  return m.observation_means()[i];
}

// ---------------------------------------------------------------------------
// Conditional importance

std::map<std::string, double> ConditionalPfi(
    const ImportanceMatrix& m, const std::map<std::string, std::vector<bool>>& groups) {
  std::map<std::string, double> out;
  for (const auto& [label, mask] : groups) {
    if (mask.size() != m.num_obs()) throw Error("group mask for '" + label + "' has wrong length");
    RunningMean mean;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) mean.Add(m.observation_means()[i]);
    }
    if (mean.count() == 0) throw Error("group '" + label + "' is empty");
    out[label] = mean.value();
  }
  return out;
}

std::map<std::string, double> ConditionalPfiSubsetGrid(
    const Predictor& model, const Dataset& d, const FeatureSet& s, LossFn loss,
    const std::map<std::string, std::vector<bool>>& groups) {
  std::map<std::string, double> out;
  for (const auto& [label, mask] : groups) {
    if (mask.size() != d.n()) throw Error("group mask for '" + label + "' has wrong length");
    if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
      throw Error("group '" + label + "' is empty");
    }
    const Dataset subset = SubsetRows(d, mask);
    out[label] = Pfi(model, subset, s, loss, PfiMode::kDifference, EstimatorKind::VStatistic())
                     .value;
  }
  return out;
}

std::map<std::string, std::vector<bool>> GroupsByFeature(const Dataset& d, std::size_t feature,
                                                         std::optional<double> threshold) {
  if (feature >= d.p()) throw Error("conditioning feature out of range");
  const std::string& name = d.feature_names()[feature];
  std::map<std::string, std::vector<bool>> groups;
  if (d.kind(feature).is_categorical()) {
    if (threshold) throw Error("'" + name + "' is categorical; a threshold does not apply");
    const auto& levels = d.kind(feature).levels();
    for (std::size_t l = 0; l < levels.size(); ++l) {
      std::vector<bool> mask(d.n());
      bool any = false;
      for (std::size_t i = 0; i < d.n(); ++i) {
        mask[i] = d.at(i, feature) == static_cast<double>(l);
        any = any || mask[i];
      }
      if (any) groups[name + "=" + levels[l]] = std::move(mask);
    }
    return groups;
  }
  if (!threshold) throw Error("conditioning on numeric '" + name + "' needs a threshold");
  std::vector<bool> below(d.n()), above(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    below[i] = d.at(i, feature) < *threshold;
    above[i] = !below[i];
  }
  const std::string t = FormatShort(*threshold);
  if (std::find(below.begin(), below.end(), true) != below.end()) {
    groups[name + "<" + t] = std::move(below);
  }
  if (std::find(above.begin(), above.end(), true) != above.end()) {
    groups[name + ">=" + t] = std::move(above);
  }
  return groups;
}

void WriteImportanceMatrixCsv(const ImportanceMatrix& m, const Dataset& d, std::ostream& out) {
  const Matrix& cells = m.cells();
  std::vector<std::string> header{"grid_index"};
  const auto s = m.features().indices();
  for (std::size_t j : s) {
    header.push_back(s.size() == 1 ? "grid_value" : "grid_value_" + d.feature_names()[j]);
  }
  header.push_back("observation");
  header.push_back("delta_loss");
  WriteCsvRow(out, header);

  std::vector<std::string> row;
  for (std::size_t k = 0; k < m.num_grid(); ++k) {
    std::vector<std::string> prefix{std::to_string(k)};
    for (std::size_t a = 0; a < s.size(); ++a) {
      const double v = m.grid()[k].values[a];
      const FeatureKind& kind = d.kind(s[a]);
      prefix.push_back(kind.is_categorical() ? kind.levels()[static_cast<std::size_t>(v)]
                                             : FormatNumber(v));
    }
    for (std::size_t i = 0; i < m.num_obs(); ++i) {
      row = prefix;
      row.push_back(std::to_string(i));
      row.push_back(FormatNumber(cells(k, i)));
      WriteCsvRow(out, row);
    }
  }
}

}  // namespace bbfi
