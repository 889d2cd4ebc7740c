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

#include "bbfi/loss.h"

#include <cmath>

#include "bbfi/error.h"
#include "bbfi/models.h"
#include "bbfi/numeric.h"
#include "bbfi/table_io.h"

namespace bbfi {

LossFn LossFn::Parse(std::string_view name) {
  if (name == "squared") return LossFn(LossKind::kSquared);
  if (name == "absolute") return LossFn(LossKind::kAbsolute);
  if (name == "zero_one") return LossFn(LossKind::kZeroOne);
  throw Error("unknown loss '" + std::string(name) + "' (expected squared, absolute or zero_one)");
}

std::string LossFn::name() const {
  switch (kind_) {
    case LossKind::kSquared:
      return "squared";
    case LossKind::kAbsolute:
      return "absolute";
    case LossKind::kZeroOne:
      return "zero_one";
  }
  return "unknown";
}

double LossFn::operator()(double prediction, double truth) const {
  if (!std::isfinite(prediction) || !std::isfinite(truth)) {
    throw Error("loss of non-finite input (prediction " + FormatNumber(prediction) +
                ", truth " + FormatNumber(truth) + ")");
  }
  switch (kind_) {
    case LossKind::kSquared: {
      const double r = prediction - truth;
      return r * r;
    }
    case LossKind::kAbsolute:
      return std::abs(prediction - truth);
    case LossKind::kZeroOne: {
      if (truth != 0.0 && truth != 1.0) {
        throw Error("zero_one loss needs a 0/1 target, got " + FormatNumber(truth));
      }
      const double label = prediction >= 0.5 ? 1.0 : 0.0;
      return label == truth ? 0.0 : 1.0;
    }
  }
  return 0.0;
}

double EmpiricalGe(const Predictor& model, const Dataset& d, LossFn loss) {
  const std::vector<double> pred = model.Predict(d.x());
  RunningMean mean;
  for (std::size_t i = 0; i < d.n(); ++i) mean.Add(loss(pred[i], d.y()[i]));
  return mean.value();
}

}  // namespace bbfi
