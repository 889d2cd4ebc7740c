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

#ifndef BBFI_LOSS_H_
#define BBFI_LOSS_H_

#include <string>
#include <string_view>

#include "bbfi/data.h"

namespace bbfi {

class Predictor;

enum class LossKind { kSquared, kAbsolute, kZeroOne };

// Pointwise loss L(prediction, truth).
//   squared:  (pred - truth)^2
//   absolute: |pred - truth|
//   zero_one: 1{round(pred) != truth}, truth in {0, 1}; predictions at or
//             above 0.5 round to 1.
class LossFn {
 public:
  constexpr explicit LossFn(LossKind kind = LossKind::kSquared) : kind_(kind) {}

  static LossFn Parse(std::string_view name);

  double operator()(double prediction, double truth) const;

  LossKind kind() const { return kind_; }
  std::string name() const;

  friend bool operator==(LossFn, LossFn) = default;

 private:
  LossKind kind_;
};

inline double Pointwise(LossFn loss, double prediction, double truth) {
  return loss(prediction, truth);
}

// (1/n) sum_i L(f(x_i), y_i) with a single batched prediction.
double EmpiricalGe(const Predictor& model, const Dataset& d, LossFn loss);

}  // namespace bbfi

#endif  // BBFI_LOSS_H_
