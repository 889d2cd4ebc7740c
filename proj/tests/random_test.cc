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
#include <atomic>
#include <map>
#include <numeric>
#include <stdexcept>

#include "bbfi/numeric.h"
#include "bbfi/parallel.h"
#include "bbfi/random.h"

namespace bbfi {
namespace {

TEST(RandomTest, StreamsAreDeterministic) {
  CounterStream a(DeriveKey(42, {1, 2})), b(DeriveKey(42, {1, 2}));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(RandomTest, DerivedKeysDifferByPath) {
  EXPECT_NE(DeriveKey(1, {0}), DeriveKey(1, {1}));
  EXPECT_NE(DeriveKey(1, {0, 1}), DeriveKey(1, {1, 0}));
  EXPECT_NE(DeriveKey(1, {0}), DeriveKey(2, {0}));
}

TEST(RandomTest, UniformRanges) {
  CounterStream s(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.NextUniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = s.NextUniformOpenZero();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(RandomTest, NormalMoments) {
  CounterStream s(11);
  std::vector<double> z(200000);
  for (double& v : z) v = s.NextNormal();
  EXPECT_NEAR(Mean(z), 0.0, 0.01);
  EXPECT_NEAR(StandardDeviation(z), 1.0, 0.01);
}

TEST(RandomTest, NextBelowIsUniformAndBounded) {
  CounterStream s(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = s.NextBelow(7);
    ASSERT_LT(v, 7u);
    counts[v]++;
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(RandomTest, PermutationsArePermutations) {
  CounterStream s(5);
  for (std::size_t n : {1u, 2u, 10u, 257u}) {
    auto perm = RandomPermutation(n, s);
    std::sort(perm.begin(), perm.end());
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(perm[i], i);
  }
}

TEST(RandomTest, PermutationsOfThreeAreUniform) {
  CounterStream s(9);
  std::map<std::vector<std::size_t>, int> counts;
  for (int i = 0; i < 60000; ++i) counts[RandomPermutation(3, s)]++;
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [perm, c] : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(RandomTest, SampleWithoutReplacementIsSortedAndDistinct) {
  CounterStream s(13);
  const auto sample = SampleWithoutReplacement(100, 30, s);
  ASSERT_EQ(sample.size(), 30u);
  EXPECT_TRUE(std::is_sorted(sample.begin(), sample.end()));
  EXPECT_EQ(std::adjacent_find(sample.begin(), sample.end()), sample.end());
  EXPECT_LT(sample.back(), 100u);
}

TEST(ParallelTest, EveryIndexRunsOnce) {
  for (std::size_t threads : {1u, 3u, 8u}) {
    SetMaxThreads(threads);
    std::vector<std::atomic<int>> hits(1000);
    ParallelFor(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  SetMaxThreads(0);
}

TEST(ParallelTest, RethrowsLowestFailingIndex) {
  SetMaxThreads(4);
  try {
    ParallelFor(100, [](std::size_t i) {
      if (i % 10 == 7) throw std::runtime_error("index " + std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "index 7");
  }
  SetMaxThreads(0);
}

TEST(ParallelTest, ThreadsFlagOverridesDefault) {
  SetMaxThreads(5);
  EXPECT_EQ(MaxThreads(), 5u);
  SetMaxThreads(0);
  EXPECT_GE(MaxThreads(), 1u);
}

TEST(NumericTest, RunningMeanMatchesDefinition) {
  RunningMean m;
  for (double v : {1.0, 2.0, 3.0, 4.0}) m.Add(v);
  EXPECT_DOUBLE_EQ(m.value(), 2.5);
  EXPECT_EQ(m.count(), 4u);
}

TEST(NumericTest, MedianOddAndEven) {
  EXPECT_DOUBLE_EQ(Median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(Median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

}  // namespace
}  // namespace bbfi
