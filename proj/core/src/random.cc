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

#include "bbfi/random.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace bbfi {

std::uint64_t DeriveKey(std::uint64_t key, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = Mix64(key ^ 0x6A09E667F3BCC908ULL);
  for (std::uint64_t step : path) {
    h = Mix64(h + 0x9E3779B97F4A7C15ULL + Mix64(step + 0xBB67AE8584CAA73BULL));
  }
  return h;
}

double CounterStream::NextNormal() {
  const double u1 = NextUniformOpenZero();
  const double u2 = NextUniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterStream::NextBelow(std::uint64_t bound) {
  // Rejection on the top of the range keeps every residue equally likely.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t draw = NextU64();
  while (draw >= limit) draw = NextU64();
  return draw % bound;
}

void Shuffle(std::span<std::size_t> values, CounterStream& stream) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.NextBelow(i));
    std::swap(values[i - 1], values[j]);
  }
}

std::vector<std::size_t> RandomPermutation(std::size_t n, CounterStream& stream) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Shuffle(perm, stream);
  return perm;
}

std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t m,
                                                  CounterStream& stream) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates from the front.
  for (std::size_t i = 0; i < m && i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.NextBelow(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(std::min(m, n));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace bbfi
