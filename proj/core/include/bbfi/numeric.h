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

#ifndef BBFI_NUMERIC_H_
#define BBFI_NUMERIC_H_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace bbfi {

// Incremental arithmetic mean. Every average in the library goes through this
// accumulator so that independently computed aggregates (PD vs. mean of ICE,
// PI vs. mean of ICI) agree bit for bit. A constant sequence averages to
// exactly that constant.
class RunningMean {
 public:
  void Add(double value) {
    ++count_;
    mean_ += (value - mean_) / static_cast<double>(count_);
  }
  double value() const { return mean_; }
  std::size_t count() const { return count_; }

 private:
  double mean_ = 0.0;
  std::size_t count_ = 0;
};

inline double Mean(std::span<const double> values) {
  RunningMean mean;
  for (double v : values) mean.Add(v);
  return mean.value();
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double StandardDeviation(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// Median of a copy of `values`; the mean of the two central elements for even
// sizes. Requires a non-empty input.
double Median(std::vector<double> values);

}  // namespace bbfi

#endif  // BBFI_NUMERIC_H_
