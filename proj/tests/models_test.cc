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

#include <cmath>
#include <filesystem>
#include <numeric>

#include "bbfi/error.h"
#include "bbfi/loss.h"
#include "bbfi/models.h"
#include "bbfi/parallel.h"
#include "bbfi/sim.h"
#include "test_util.h"

namespace bbfi {
namespace {

using ::testing::HasSubstr;

std::string ErrorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(LinearTest, ExactLine) {
  const Dataset d = testing::MakeDataset({{1}, {2}, {3}}, {2, 4, 6});
  const LinearModel m = FitLinear(d, false);
  EXPECT_NEAR(m.intercept(), 0.0, 1e-9);
  EXPECT_NEAR(m.Coefficient("x1"), 2.0, 1e-9);
}

TEST(LinearTest, ConstantTarget) {
  const Dataset d = testing::MakeDataset({{1, 5}, {2, 3}, {3, 9}, {0, 1}}, {7, 7, 7, 7});
  const LinearModel m = FitLinear(d, false);
  EXPECT_NEAR(m.intercept(), 7.0, 1e-9);
  for (double c : m.coefficients()) EXPECT_NEAR(c, 0.0, 1e-9);
}

TEST(LinearTest, RankDeficiencyNamesCollinearTerms) {
  const Dataset d = testing::MakeDataset({{1, 2}, {2, 4}, {3, 6}, {4, 8}}, {1, 2, 3, 5});
  const std::string msg = ErrorOf([&] { FitLinear(d, false); });
  EXPECT_THAT(msg, HasSubstr("rank deficient"));
  EXPECT_THAT(msg, ::testing::AnyOf(HasSubstr("x1"), HasSubstr("x2")));
}

TEST(LinearTest, NoiselessInteractionsRecovered) {
  const Dataset d = Generate({GeneratorKind::kLinearInteraction, 200, 4, 0.0});
  const LinearModel m = FitLinear(d, true);
  EXPECT_NEAR(m.intercept(), 0.0, 1e-6);
  EXPECT_NEAR(m.Coefficient("X1"), 1.0, 1e-6);
  EXPECT_NEAR(m.Coefficient("X2"), 1.0, 1e-6);
  EXPECT_NEAR(m.Coefficient("X3"), 1.0, 1e-6);
  EXPECT_NEAR(m.Coefficient("X1:X2"), 1.0, 1e-6);
  EXPECT_NEAR(m.Coefficient("X1:X3"), 0.0, 1e-6);
  EXPECT_NEAR(m.Coefficient("X2:X3"), 0.0, 1e-6);
}

TEST(LinearTest, InteractionCoefficientConvergesOnLargeSample) {
  const Dataset d = Generate({GeneratorKind::kLinearInteraction, 10000, 8, kDefaultNoiseSd});
  EXPECT_NEAR(FitLinear(d, true).Coefficient("X1:X2"), 1.0, 0.05);
}

TEST(LinearTest, CategoricalOneHotDropsReferenceLevel) {
  Schema schema;
  schema.names = {"c"};
  schema.kinds = {FeatureKind::Categorical({"a", "b", "c"})};
  Matrix x(6, 1);
  std::vector<double> y(6);
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = static_cast<double>(i % 3);
    y[i] = 10.0 * static_cast<double>(i % 3) + 1.0;
  }
  const LinearModel m = FitLinear(Dataset(schema, x, y), false);
  ASSERT_EQ(m.terms().size(), 2u);
  EXPECT_NEAR(m.intercept(), 1.0, 1e-9);
  EXPECT_NEAR(m.Coefficient("c=b"), 10.0, 1e-9);
  EXPECT_NEAR(m.Coefficient("c=c"), 20.0, 1e-9);
}

TEST(ForestTest, SingleLeafPredictsMean) {
  const Dataset d = testing::RandomDataset(20, 2, 3);
  ForestParams params;
  params.ntree = 1;
  params.min_node_size = 20;
  params.bootstrap = false;
  const ForestModel f = FitForest(d, params, 1);
  ASSERT_EQ(f.trees().front().num_leaves(), 1u);
  const double mean = std::accumulate(d.y().begin(), d.y().end(), 0.0) / 20.0;
  for (double p : f.Predict(d.x())) EXPECT_NEAR(p, mean, 1e-12);
}

TEST(ForestTest, PureSignalIsLearned) {
  CounterStream s(4);
  Matrix x(400, 1);
  std::vector<double> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    x(i, 0) = s.NextNormal();
    y[i] = x(i, 0) > 0.0 ? 1.0 : 0.0;
  }
  const Dataset d(testing::NumericSchema(1), x, y);
  ForestParams params;
  params.ntree = 20;
  params.min_node_size = 1;
  const ForestModel f = FitForest(d, params, 2);
  EXPECT_LT(EmpiricalGe(f, d, LossFn()), 0.01);
}

TEST(ForestTest, DeterministicAndThreadInvariant) {
  const Dataset d = testing::RandomDataset(150, 3, 5);
  ForestParams params;
  params.ntree = 15;
  SetMaxThreads(1);
  const auto a = FitForest(d, params, 9).Predict(d.x());
  SetMaxThreads(4);
  const auto b = FitForest(d, params, 9).Predict(d.x());
  SetMaxThreads(0);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, FitForest(d, params, 10).Predict(d.x()));
}

TEST(ForestTest, CategoricalSplits) {
  const Dataset d = Generate({GeneratorKind::kSwitchInteraction, 500, 2, 0.1});
  ForestParams params;
  params.ntree = 30;
  params.mtry = 3;
  const ForestModel f = FitForest(d, params, 1);
  EXPECT_LT(EmpiricalGe(f, d, LossFn()), 0.2 * EmpiricalGe(FitLinear(d, false), d, LossFn()));
}

TEST(ForestTest, ParameterErrors) {
  const Dataset d = testing::RandomDataset(10, 2, 1);
  ForestParams p;
  p.ntree = 0;
  EXPECT_THROW(FitForest(d, p, 1), Error);
  p = {};
  p.mtry = 3;
  EXPECT_THROW(FitForest(d, p, 1), Error);
  p = {};
  p.min_node_size = 11;
  EXPECT_THROW(FitForest(d, p, 1), Error);
}

TEST(KnnTest, KEqualsNIsConstantMean) {
  const Dataset d = testing::RandomDataset(12, 2, 6);
  const KnnModel m = FitKnn(d, 12);
  const double mean = std::accumulate(d.y().begin(), d.y().end(), 0.0) / 12.0;
  for (double p : m.Predict(d.x())) EXPECT_NEAR(p, mean, 1e-12);
}

TEST(KnnTest, OneNeighbourReproducesTrainingRow) {
  const Dataset d = testing::RandomDataset(300, 3, 7);
  const KnnModel m = FitKnn(d, 1);
  EXPECT_EQ(m.Predict(d.x()), d.y());
}

TEST(KnnTest, TiesGoToLowerIndex) {
  const Dataset d = testing::MakeDataset({{-1}, {1}, {3}}, {10, 20, 30});
  const KnnModel m = FitKnn(d, 1);
  Matrix q(1, 1, 0.0);
  EXPECT_EQ(m.Predict(q).front(), 10.0);
  EXPECT_EQ(m.Neighbors(q.row(0)).front(), 0u);
}

TEST(KnnTest, MatchesBruteForce) {
  const Dataset d = Generate({GeneratorKind::kSwitchInteraction, 500, 3, 1.0});
  const KnnModel m = FitKnn(d, 7);
  const Dataset q = Generate({GeneratorKind::kSwitchInteraction, 50, 4, 1.0});
  for (std::size_t r = 0; r < q.n(); ++r) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < d.n(); ++i) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        const double diff = (q.at(r, j) - d.at(i, j)) / m.scale()[j];
        dist += diff * diff;
      }
      dist += q.at(r, 2) == d.at(i, 2) ? 0.0 : 1.0;
      all.push_back({dist, i});
    }
    std::sort(all.begin(), all.end());
    auto got = m.Neighbors(q.x().row(r));
    std::sort(got.begin(), got.end());
    std::vector<std::size_t> want;
    for (int k = 0; k < 7; ++k) want.push_back(all[k].second);
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want) << "query " << r;
  }
}

TEST(KnnTest, KOutOfRange) {
  const Dataset d = testing::RandomDataset(5, 1, 1);
  EXPECT_THROW(FitKnn(d, 0), Error);
  EXPECT_THROW(FitKnn(d, 6), Error);
}

TEST(PersistenceTest, RoundTripsAllKinds) {
  const Dataset d = Generate({GeneratorKind::kSwitchInteraction, 120, 5, 0.5});
  ForestParams params;
  params.ntree = 5;
  std::vector<std::unique_ptr<Predictor>> models;
  models.push_back(std::make_unique<LinearModel>(FitLinear(d, true)));
  models.push_back(std::make_unique<ForestModel>(FitForest(d, params, 3)));
  models.push_back(std::make_unique<KnnModel>(FitKnn(d, 4)));
  for (const auto& m : models) {
    const auto back = DeserializeModel(SerializeModel(*m));
    EXPECT_EQ(back->kind(), m->kind());
    EXPECT_EQ(back->schema(), m->schema());
    EXPECT_EQ(back->Predict(d.x()), m->Predict(d.x())) << m->kind();
  }
  const auto path = std::filesystem::temp_directory_path() / "bbfi_models_test.json";
  SaveModel(*models[0], path);
  const auto loaded = LoadModel(path);
  EXPECT_EQ(dynamic_cast<const LinearModel&>(*loaded).coefficients(),
            dynamic_cast<const LinearModel&>(*models[0]).coefficients());
  std::filesystem::remove(path);
}

TEST(PersistenceTest, RejectsUnknownKindAndVersion) {
  EXPECT_THAT(ErrorOf([] {
                DeserializeModel(R"({"format_version":1,"kind":"svm","features":[]})");
              }),
              HasSubstr("unknown model kind"));
  EXPECT_THAT(ErrorOf([] {
                DeserializeModel(R"({"format_version":2,"kind":"linear","features":[]})");
              }),
              HasSubstr("version 2"));
  EXPECT_THAT(ErrorOf([] { DeserializeModel("{not json"); }), HasSubstr("not valid JSON"));
  const FunctionPredictor f(testing::NumericSchema(1), [](auto) { return 0.0; });
  EXPECT_THROW(SerializeModel(f), Error);
}

TEST(SchemaCheckTest, MismatchedFeatures) {
  const FunctionPredictor f(testing::NumericSchema(2), [](auto) { return 0.0; });
  const Dataset d = testing::RandomDataset(3, 3, 1);
  EXPECT_THAT(ErrorOf([&] { CheckSchemaMatches(f, d); }), HasSubstr("do not match"));
}

}  // namespace
}  // namespace bbfi
