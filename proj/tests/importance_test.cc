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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "bbfi/error.h"
#include "bbfi/importance.h"
#include "bbfi/parallel.h"
#include "test_util.h"

namespace bbfi {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

// Grid point k (rows) against observation i (columns).
constexpr double kFig2Cells[3][3] = {{0, 0.6, 0.3}, {0.65, 0, 0.25}, {0.7, 0.5, 0}};

// x1 = i and x2 = i for observation i in 1..3, y = 0, absolute loss. The model
// is zero on the diagonal, so every loss change equals a table entry.
struct Fig2 {
  Dataset d = testing::MakeDataset({{1, 1}, {2, 2}, {3, 3}}, {0, 0, 0});
  FunctionPredictor model{testing::NumericSchema(2), [](std::span<const double> x) {
                            return kFig2Cells[static_cast<int>(x[0]) - 1]
                                             [static_cast<int>(x[1]) - 1];
                          }};
  LossFn loss{LossKind::kAbsolute};

  ImportanceMatrix Matrix() const {
    return DeltaLossMatrix(model, d, FeatureSet({0}), GridSpec::AllObserved(), loss);
  }
};

ImportanceMatrix StoredFig2() {
  bbfi::Matrix cells(3, 3);
  std::vector<GridPoint> grid;
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3; ++i) cells(k, i) = kFig2Cells[k][i];
    grid.push_back({{static_cast<double>(k + 1)}, k});
  }
  return ImportanceMatrix::FromCells(FeatureSet({0}), std::move(grid),
                                     LossFn(LossKind::kAbsolute), {0, 0, 0},
                                     std::move(cells), "x1");
}

TEST(Fig2Test, StoredCellsGivePiCurve) {
  const Curve pi = PiCurve(StoredFig2());
  EXPECT_THAT(pi.abscissa, ElementsAre(1, 2, 3));
  EXPECT_THAT(pi.ordinates, ElementsAre(0.3, 0.3, 0.4));
}

TEST(Fig2Test, ModelReproducesCells) {
  const ImportanceMatrix m = Fig2().Matrix();
  ASSERT_TRUE(m.materialized());
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m.cell(k, i), kFig2Cells[k][i]);
  }
  EXPECT_THAT(PiCurve(m).ordinates, ElementsAre(0.3, 0.3, 0.4));
  EXPECT_EQ(PiCurve(m).label, "PI x1");
}

TEST(Fig2Test, DifferencePfiIsOneThird) {
  const Fig2 f;
  const ImportanceResult r = Pfi(f.model, f.d, FeatureSet({0}), f.loss, PfiMode::kDifference,
                                 EstimatorKind::VStatistic());
  EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.baseline_ge, 0.0);
}

TEST(Fig2Test, IciCurvesAndOmitOwnPoint) {
  const ImportanceMatrix m = Fig2().Matrix();
  const auto curves = IciCurves(m);
  ASSERT_EQ(curves.size(), 3u);
  EXPECT_THAT(curves[0].abscissa, ElementsAre(1, 2, 3));
  EXPECT_THAT(curves[0].ordinates, ElementsAre(0, 0.65, 0.7));
  EXPECT_EQ(curves[0].observation, 0u);
  const auto omitted = IciCurves(m, true);
  EXPECT_THAT(omitted[0].abscissa, ElementsAre(2, 3));
  EXPECT_THAT(omitted[0].ordinates, ElementsAre(0.65, 0.7));
}

TEST(Fig2Test, LocalImportance) {
  const ImportanceMatrix m = Fig2().Matrix();
  EXPECT_NEAR(LocalImportance(m, 0), 0.45, 1e-15);
  EXPECT_NEAR(LocalImportance(m, 2), 0.55 / 3.0, 1e-15);
  // The mean of the local importances is the PFI.
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) sum += LocalImportance(m, i);
  EXPECT_NEAR(sum / 3.0, 1.0 / 3.0, 1e-15);
}

TEST(Fig2Test, CsvExport) {
  const Fig2 f;
  std::ostringstream out;
  WriteImportanceMatrixCsv(f.Matrix(), f.d, out);
  const std::string csv = out.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "grid_index,grid_value,observation,delta_loss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  EXPECT_THAT(csv, HasSubstr("\n1,2,0,0.65"));
}

// Brute-force estimators straight from the definitions.
double BruteGe(const Predictor& model, const Dataset& d, std::size_t j, LossFn loss,
               bool skip_own) {
  double outer = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    double inner = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < d.n(); ++k) {
      if (skip_own && k == i) continue;
      std::vector<double> row(d.x().row(i).begin(), d.x().row(i).end());
      row[j] = d.at(k, j);
      Matrix one(1, d.p());
      std::copy(row.begin(), row.end(), one.row(0).begin());
      inner += loss(model.Predict(one).front(), d.y()[i]);
      ++count;
    }
    outer += inner / static_cast<double>(count);
  }
  return outer / static_cast<double>(d.n());
}

TEST(EstimatorTest, VAndUMatchBruteForce) {
  const Dataset d = testing::RandomDataset(12, 3, 1);
  const auto model = testing::RandomModel(3, 2);
  const LossFn loss;
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(GeReplaced(model, d, FeatureSet({j}), loss, EstimatorKind::VStatistic()),
                BruteGe(model, d, j, loss, false), 1e-12);
    EXPECT_NEAR(GeReplaced(model, d, FeatureSet({j}), loss, EstimatorKind::UStatistic()),
                BruteGe(model, d, j, loss, true), 1e-12);
  }
}

TEST(EstimatorTest, AllPermutationsEqualVStatistic) {
  const Dataset d = testing::RandomDataset(5, 2, 3);
  const auto model = testing::RandomModel(2, 4);
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> perm(5);
  std::iota(perm.begin(), perm.end(), 0);
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  ASSERT_EQ(perms.size(), 120u);
  EXPECT_NEAR(GeFromPermutations(model, d, FeatureSet({1}), LossFn(), perms),
              GeReplaced(model, d, FeatureSet({1}), LossFn(), EstimatorKind::VStatistic()),
              1e-12);
}

TEST(EstimatorTest, IdentityPermutationGivesBaseline) {
  const Dataset d = testing::RandomDataset(8, 2, 3);
  const auto model = testing::RandomModel(2, 4);
  std::vector<std::size_t> id(8);
  std::iota(id.begin(), id.end(), 0);
  const std::vector<std::vector<std::size_t>> perms{id};
  EXPECT_NEAR(GeFromPermutations(model, d, FeatureSet({0}), LossFn(), perms),
              EmpiricalGe(model, d, LossFn()), 1e-15);
}

TEST(EstimatorTest, ApproxConvergesAndIsSeeded) {
  const Dataset d = testing::RandomDataset(60, 2, 5);
  const auto model = testing::RandomModel(2, 6);
  const FeatureSet s({0});
  const double v = GeReplaced(model, d, s, LossFn(), EstimatorKind::VStatistic());
  const double a1 = GeReplaced(model, d, s, LossFn(), EstimatorKind::Approx(400, 7));
  EXPECT_NEAR(a1, v, 0.05 * v);
  EXPECT_EQ(a1, GeReplaced(model, d, s, LossFn(), EstimatorKind::Approx(400, 7)));
  EXPECT_NE(a1, GeReplaced(model, d, s, LossFn(), EstimatorKind::Approx(400, 8)));
}

TEST(EstimatorTest, PermutationsAreValid) {
  const auto perms = DrawObservationPermutations(30, 4, 1);
  ASSERT_EQ(perms.size(), 4u);
  for (auto p : perms) {
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(p[i], i);
  }
  EXPECT_NE(perms[0], perms[1]);
  const std::vector<std::vector<std::size_t>> bad{{0, 0, 1}};
  const Dataset d = testing::RandomDataset(3, 1, 1);
  EXPECT_THROW(GeFromPermutations(testing::RandomModel(1, 1), d, FeatureSet({0}), LossFn(), bad),
               Error);
  EXPECT_THROW(EstimatorKind::Approx(0, 1), Error);
}

TEST(EstimatorTest, Describe) {
  EXPECT_EQ(EstimatorKind::VStatistic().Describe(), "v_statistic");
  EXPECT_EQ(EstimatorKind::UStatistic().Describe(), "u_statistic");
  EXPECT_EQ(EstimatorKind::Approx(5, 9).Describe(), "approx(m=5, seed=9)");
}

TEST(PfiTest, PerfectModelAndDummyFeature) {
  const Dataset base = testing::RandomDataset(40, 2, 8);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = 2.0 * base.at(i, 0);
  const Dataset d(base.schema(), base.x(), y);
  const FunctionPredictor model(base.schema(), [](auto x) { return 2.0 * x[0]; });
  for (const auto est : {EstimatorKind::VStatistic(), EstimatorKind::UStatistic(),
                         EstimatorKind::Approx(3, 1)}) {
    const auto dummy = Pfi(model, d, FeatureSet({1}), LossFn(), PfiMode::kDifference, est);
    EXPECT_EQ(dummy.value, 0.0);
    const auto used = Pfi(model, d, FeatureSet({0}), LossFn(), PfiMode::kDifference, est);
    EXPECT_GT(used.value, 1.0);
  }
  EXPECT_THAT(
      [&] {
        try {
          Pfi(model, d, FeatureSet({0}), LossFn(), PfiMode::kRatio, EstimatorKind::VStatistic());
        } catch (const Error& e) {
          return std::string(e.what());
        }
        return std::string();
      }(),
      HasSubstr("degenerate baseline"));
}

TEST(PfiTest, ConstantModelHasNoImportance) {
  const Dataset d = testing::RandomDataset(25, 3, 9);
  const FunctionPredictor model(d.schema(), [](auto) { return 0.5; });
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(Pfi(model, d, FeatureSet({j}), LossFn(), PfiMode::kDifference,
                  EstimatorKind::VStatistic())
                  .value,
              0.0);
    EXPECT_EQ(Pfi(model, d, FeatureSet({j}), LossFn(), PfiMode::kRatio,
                  EstimatorKind::UStatistic())
                  .value,
              1.0);
  }
}

TEST(PfiTest, RatioIsReplacedOverBaseline) {
  const Dataset d = testing::RandomDataset(30, 2, 10);
  const auto model = testing::RandomModel(2, 11);
  const auto r = Pfi(model, d, FeatureSet({0}), LossFn(), PfiMode::kRatio,
                     EstimatorKind::VStatistic());
  EXPECT_DOUBLE_EQ(r.value, r.replaced_ge / r.baseline_ge);
  EXPECT_DOUBLE_EQ(r.baseline_ge, EmpiricalGe(model, d, LossFn()));
}

TEST(PfiTest, MatrixGrandMeanEqualsVStatisticPfi) {
  const Dataset d = testing::RandomDataset(20, 3, 12);
  const auto model = testing::RandomModel(3, 13);
  const ImportanceMatrix m =
      DeltaLossMatrix(model, d, FeatureSet({1, 2}), GridSpec::AllObserved(), LossFn());
  const double grand =
      std::accumulate(m.grid_means().begin(), m.grid_means().end(), 0.0) / 20.0;
  EXPECT_NEAR(grand,
              Pfi(model, d, FeatureSet({1, 2}), LossFn(), PfiMode::kDifference,
                  EstimatorKind::VStatistic())
                  .value,
              1e-12);
}

TEST(MatrixTest, StreamingMatchesMaterialized) {
  const Dataset d = testing::RandomDataset(40, 2, 14);
  const auto model = testing::RandomModel(2, 15);
  const auto full = DeltaLossMatrix(model, d, FeatureSet({0}), GridSpec::AllObserved(), LossFn());
  const auto streamed =
      DeltaLossMatrix(model, d, FeatureSet({0}), GridSpec::AllObserved(), LossFn(), 100);
  EXPECT_TRUE(full.materialized());
  EXPECT_FALSE(streamed.materialized());
  EXPECT_THROW(streamed.cells(), Error);
  EXPECT_EQ(full.grid_means(), streamed.grid_means());
  EXPECT_EQ(full.observation_means(), streamed.observation_means());
}

TEST(MatrixTest, ThreadCountDoesNotChangeResults) {
  const Dataset d = testing::RandomDataset(64, 3, 16);
  const auto model = testing::RandomModel(3, 17);
  SetMaxThreads(1);
  const auto a = DeltaLossMatrix(model, d, FeatureSet({2}), GridSpec::AllObserved(), LossFn());
  SetMaxThreads(8);
  const auto b = DeltaLossMatrix(model, d, FeatureSet({2}), GridSpec::AllObserved(), LossFn());
  SetMaxThreads(0);
  EXPECT_EQ(a.cells(), b.cells());
  EXPECT_EQ(a.grid_means(), b.grid_means());
  EXPECT_EQ(a.observation_means(), b.observation_means());
}

TEST(MatrixTest, SortedGridOrderAndDiagonal) {
  const Dataset d = testing::MakeDataset({{3}, {1}, {2}, {1}}, {0, 0, 0, 0});
  const FunctionPredictor model(d.schema(), [](auto x) { return x[0]; });
  const auto m = DeltaLossMatrix(model, d, FeatureSet({0}), GridSpec::AllObserved(), LossFn());
  EXPECT_THAT(m.SortedGridOrder(), ElementsAre(1, 3, 2, 0));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(m.cell(i, i), 0.0);
  const auto curves = IciCurves(m);
  EXPECT_THAT(curves[0].abscissa, ElementsAre(1, 1, 2, 3));
}

TEST(GridSpecTest, SampleDrawsDistinctSortedRows) {
  const Dataset d = testing::RandomDataset(50, 2, 18);
  const auto grid = GridSpec::Sample(10, 3).Resolve(d, FeatureSet({1}));
  ASSERT_EQ(grid.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    ASSERT_TRUE(grid[k].source_row.has_value());
    EXPECT_EQ(grid[k].values.front(), d.at(*grid[k].source_row, 1));
    if (k > 0) EXPECT_LT(*grid[k - 1].source_row, *grid[k].source_row);
  }
  EXPECT_EQ(grid, GridSpec::Sample(10, 3).Resolve(d, FeatureSet({1})));
  EXPECT_THROW(GridSpec::Sample(51, 3).Resolve(d, FeatureSet({1})), Error);
}

TEST(GridSpecTest, TuplesComeFromOneRow) {
  const Dataset d = testing::RandomDataset(6, 3, 19);
  const auto grid = GridSpec::AllObserved().Resolve(d, FeatureSet({0, 2}));
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_THAT(grid[k].values, ElementsAre(d.at(k, 0), d.at(k, 2)));
  }
}

TEST(GridSpecTest, ExplicitAndDefault) {
  const Dataset d = testing::RandomDataset(4, 2, 20);
  const auto grid = GridSpec::Explicit({{0.5}, {1.5}}).Resolve(d, FeatureSet({0}));
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_FALSE(grid[0].source_row.has_value());
  EXPECT_THROW(GridSpec::Explicit({{0.5, 1.0}}).Resolve(d, FeatureSet({0})), Error);
  EXPECT_EQ(GridSpec::Default(500, 1).strategy(), GridSpec::Strategy::kAllObserved);
  EXPECT_EQ(GridSpec::Default(501, 1).m(), 100u);
  EXPECT_EQ(GridSpec::Sample(100, 2).Describe(), "sample(m=100, seed=2)");

  Schema schema;
  schema.names = {"c"};
  schema.kinds = {FeatureKind::Categorical({"a", "b"})};
  const Dataset cat(schema, Matrix(2, 1, 0.0), {0, 0});
  EXPECT_THROW(GridSpec::Explicit({{2}}).Resolve(cat, FeatureSet({0})), Error);
}

Dataset SwitchLike() {
  Schema schema;
  schema.names = {"x1", "g"};
  schema.kinds = {FeatureKind::Numeric(), FeatureKind::Categorical({"0", "1", "2"})};
  Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = i < 3 ? 0 : 1;
  }
  return Dataset(schema, x, {0, 1, 2, 3, 4, 5});
}

TEST(ConditionalTest, GroupsByFeature) {
  const Dataset d = SwitchLike();
  const auto groups = GroupsByFeature(d, 1, std::nullopt);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_THAT(groups.at("g=0"), ElementsAre(true, true, true, false, false, false));
  const auto split = GroupsByFeature(d, 0, 2.0);
  EXPECT_THAT(split.at("x1<2"), ElementsAre(true, true, false, false, false, false));
  EXPECT_THAT(split.at("x1>=2"), ElementsAre(false, false, true, true, true, true));
  EXPECT_THROW(GroupsByFeature(d, 0, std::nullopt), Error);
}

TEST(ConditionalTest, GroupMeansOfLocalImportance) {
  const Dataset d = SwitchLike();
  // Only group g=1 depends on x1.
  const FunctionPredictor model(d.schema(), [](auto x) { return x[1] == 1 ? x[0] : 0.0; });
  const auto m = DeltaLossMatrix(model, d, FeatureSet({0}), GridSpec::AllObserved(), LossFn());
  const auto groups = GroupsByFeature(d, 1, std::nullopt);
  const auto cond = ConditionalPfi(m, groups);
  double want0 = 0.0, want1 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) want0 += LocalImportance(m, i) / 3.0;
  for (std::size_t i = 3; i < 6; ++i) want1 += LocalImportance(m, i) / 3.0;
  EXPECT_NEAR(cond.at("g=0"), want0, 1e-12);
  EXPECT_NEAR(cond.at("g=1"), want1, 1e-12);
  EXPECT_GT(cond.at("g=1"), cond.at("g=0"));

  const auto subset = ConditionalPfiSubsetGrid(model, d, FeatureSet({0}), LossFn(), groups);
  const Dataset g1 = SubsetRows(d, groups.at("g=1"));
  EXPECT_NEAR(subset.at("g=1"),
              Pfi(model, g1, FeatureSet({0}), LossFn(), PfiMode::kDifference,
                  EstimatorKind::VStatistic())
                  .value,
              1e-12);
  std::map<std::string, std::vector<bool>> empty{{"none", std::vector<bool>(6, false)}};
  EXPECT_THROW(ConditionalPfi(m, empty), Error);
}

TEST(MatrixTest, CategoricalFeatureLabels) {
  const Dataset d = SwitchLike();
  const FunctionPredictor model(d.schema(), [](auto x) { return x[1]; });
  const auto m = DeltaLossMatrix(model, d, FeatureSet({1}), GridSpec::AllObserved(), LossFn());
  EXPECT_EQ(m.feature_label(), "g");
  EXPECT_THAT(m.level_labels(), ElementsAre("0", "1", "2"));
}

}  // namespace
}  // namespace bbfi
