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

#include <benchmark/benchmark.h>

#include "bbfi/effects.h"
#include "bbfi/importance.h"
#include "bbfi/models.h"
#include "bbfi/shapley.h"
#include "bbfi/sim.h"

namespace bbfi {
namespace {

Dataset SwitchData(std::size_t n, std::uint64_t seed) {
  return Generate({GeneratorKind::kSwitchInteraction, n, seed, kDefaultNoiseSd});
}

void BM_DeltaLossMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset d = SwitchData(n, 1);
  const LinearModel model = FitLinear(d, true);
  for (auto _ : state) {
    auto m = DeltaLossMatrix(model, d, FeatureSet({0}), GridSpec::AllObserved(), LossFn());
    benchmark::DoNotOptimize(m.grid_means().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_DeltaLossMatrix)->Arg(100)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const Dataset d = SwitchData(static_cast<std::size_t>(state.range(0)), 2);
  ForestParams params;
  params.ntree = 50;
  for (auto _ : state) {
    auto f = FitForest(d, params, 3);
    benchmark::DoNotOptimize(f.trees().data());
  }
}
BENCHMARK(BM_ForestFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& state) {
  const Dataset train = SwitchData(2000, 4);
  const Dataset test = SwitchData(static_cast<std::size_t>(state.range(0)), 5);
  const ForestModel f = FitForest(train, ForestParams{}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(f.Predict(test.x()).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForestPredict)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_KnnPredict(benchmark::State& state) {
  const Dataset train = SwitchData(2000, 7);
  const Dataset test = SwitchData(1000, 8);
  const KnnModel m = FitKnn(train, 10);
  for (auto _ : state) benchmark::DoNotOptimize(m.Predict(test.x()).data());
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_KnnPredict)->Unit(benchmark::kMillisecond);

void BM_ShapleyApprox(benchmark::State& state) {
  const Dataset d = Generate({GeneratorKind::kLinearInteraction, 100, 9, kDefaultNoiseSd});
  const LinearModel model = FitLinear(d, true);
  ShapleyConfig cfg;
  cfg.m_feat = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto r = ShapleyApprox(model, d, LossFn(), cfg);
    benchmark::DoNotOptimize(r.phi.data());
  }
}
BENCHMARK(BM_ShapleyApprox)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ShapleyExact(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    CharacteristicCache cache(p, [](Coalition s) { return -static_cast<double>(s % 7); });
    benchmark::DoNotOptimize(ExactShapleyValues(cache).data());
  }
}
BENCHMARK(BM_ShapleyExact)->Arg(6)->Arg(12);

void BM_PdAndPiCurves(benchmark::State& state) {
  const Dataset d = SwitchData(500, 10);
  const LinearModel model = FitLinear(d, true);
  for (auto _ : state) {
    auto c = PdAndPiCurves(model, d, LossFn(), FeatureSet({1}), GridSpec::Sample(100, 1));
    benchmark::DoNotOptimize(c.pi.ordinates.data());
  }
}
BENCHMARK(BM_PdAndPiCurves)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace bbfi

BENCHMARK_MAIN();
