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

#ifndef BBFI_RANDOM_H_
#define BBFI_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace bbfi {

// SplitMix64 output function.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent stream key from `key` and an index path, e.g.
// DeriveKey(seed, {tree}) or DeriveKey(seed, {feature, iteration}). All
// randomness in the library is addressed this way so results never depend
// on evaluation order or worker count.
std::uint64_t DeriveKey(std::uint64_t key, std::initializer_list<std::uint64_t> path);

// Counter-based uniform stream: the c-th 64-bit draw of stream `key` is
// Mix64(key + c * 0x9E3779B97F4A7C15) for c = 1, 2, ... (SplitMix64 seeded
// with `key`). Normal variates use the cosine branch of the Box-Muller
// transform, consuming two uniforms each:
//   u1 in (0, 1], u2 in [0, 1), z = sqrt(-2 ln u1) * cos(2 pi u2).
// Uniform doubles take the top 53 bits of a draw.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  std::uint64_t NextU64() {
    ++counter_;
    return Mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }
  // In [0, 1).
  double NextUniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }
  // In (0, 1].
  double NextUniformOpenZero() {
    return static_cast<double>((NextU64() >> 11) + 1) * 0x1.0p-53;
  }
  double NextNormal();
  // Unbiased integer in [0, bound); bound must be positive.
  std::uint64_t NextBelow(std::uint64_t bound);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform random permutation of {0, ..., n-1} (Fisher-Yates).
std::vector<std::size_t> RandomPermutation(std::size_t n, CounterStream& stream);
void Shuffle(std::span<std::size_t> values, CounterStream& stream);

// m distinct indices from {0, ..., n-1}, returned in ascending order.
std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t m,
                                                  CounterStream& stream);

}  // namespace bbfi

#endif  // BBFI_RANDOM_H_
