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

// Shared fixtures for the bbfi tests.

#ifndef BBFI_TESTS_TEST_UTIL_H_
#define BBFI_TESTS_TEST_UTIL_H_

#include <cmath>
#include <string>
#include <vector>

#include "bbfi/data.h"
#include "bbfi/models.h"
#include "bbfi/random.h"

namespace bbfi::testing {

inline Schema NumericSchema(std::size_t p) {
  Schema schema;
  for (std::size_t j = 0; j < p; ++j) {
    schema.names.push_back("x" + std::to_string(j + 1));
    schema.kinds.push_back(FeatureKind::Numeric());
  }
  return schema;
}

inline Dataset MakeDataset(const std::vector<std::vector<double>>& rows,
                           std::vector<double> y) {
  const std::size_t p = rows.front().size();
  Matrix x(rows.size(), p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < p; ++j) x(r, j) = rows[r][j];
  }
  return Dataset(NumericSchema(p), std::move(x), std::move(y));
}

// n rows of p standard-normal features; y = sum_j x_j + noise.
inline Dataset RandomDataset(std::size_t n, std::size_t p, std::uint64_t seed,
                             double noise = 0.3) {
  CounterStream stream(DeriveKey(seed, {0xDA7A}));
  Matrix x(n, p);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      x(r, j) = stream.NextNormal();
      sum += x(r, j);
    }
    y[r] = sum + noise * stream.NextNormal();
  }
  return Dataset(NumericSchema(p), std::move(x), std::move(y));
}

// A smooth nonlinear function of all features with random coefficients.
inline FunctionPredictor RandomModel(std::size_t p, std::uint64_t seed) {
  CounterStream stream(DeriveKey(seed, {0x30DE1}));
  std::vector<double> a(p), b(p);
  for (std::size_t j = 0; j < p; ++j) {
    a[j] = stream.NextNormal();
    b[j] = stream.NextNormal();
  }
  const double c = stream.NextNormal();
  return FunctionPredictor(NumericSchema(p), [a, b, c](std::span<const double> x) {
    double v = c * x[0] * x[x.size() - 1];
    for (std::size_t j = 0; j < x.size(); ++j) v += a[j] * std::sin(b[j] * x[j]) + 0.1 * a[j] * x[j];
    return v;
  });
}

}  // namespace bbfi::testing

#endif  // BBFI_TESTS_TEST_UTIL_H_
