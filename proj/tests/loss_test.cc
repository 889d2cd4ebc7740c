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

#include <gtest/gtest.h>

#include <cmath>

#include "bbfi/error.h"
#include "bbfi/loss.h"
#include "test_util.h"

namespace bbfi {
namespace {

TEST(LossTest, PointwiseValues) {
  EXPECT_EQ(LossFn(LossKind::kSquared)(3.0, 1.0), 4.0);
  EXPECT_EQ(LossFn(LossKind::kAbsolute)(-1.0, 2.0), 3.0);
  const LossFn zo(LossKind::kZeroOne);
  EXPECT_EQ(zo(0.7, 1.0), 0.0);
  EXPECT_EQ(zo(0.2, 1.0), 1.0);
  // Ties at 0.5 round to class 1.
  EXPECT_EQ(zo(0.5, 1.0), 0.0);
  EXPECT_EQ(zo(0.5, 0.0), 1.0);
}

TEST(LossTest, ParseNames) {
  EXPECT_EQ(LossFn::Parse("absolute").kind(), LossKind::kAbsolute);
  EXPECT_EQ(LossFn::Parse("zero_one").name(), "zero_one");
  EXPECT_THROW(LossFn::Parse("huber"), Error);
}

TEST(LossTest, RejectsBadInput) {
  EXPECT_THROW(LossFn()(NAN, 1.0), Error);
  EXPECT_THROW(LossFn(LossKind::kZeroOne)(0.3, 2.0), Error);
}

TEST(LossTest, EmpiricalGeOfConstantModel) {
  const Dataset d = testing::MakeDataset({{0}, {1}, {2}}, {1.0, 2.0, 6.0});
  const FunctionPredictor model(testing::NumericSchema(1), [](auto) { return 2.0; });
  EXPECT_DOUBLE_EQ(EmpiricalGe(model, d, LossFn(LossKind::kSquared)), (1.0 + 0.0 + 16.0) / 3.0);
  EXPECT_DOUBLE_EQ(EmpiricalGe(model, d, LossFn(LossKind::kAbsolute)), 5.0 / 3.0);
}

}  // namespace
}  // namespace bbfi
