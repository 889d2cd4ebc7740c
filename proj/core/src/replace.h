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

// Column replacement shared by the importance and effects modules.

#ifndef BBFI_SRC_REPLACE_H_
#define BBFI_SRC_REPLACE_H_

#include <span>

#include "bbfi/data.h"

namespace bbfi::internal {

// Copy of x with the columns of s set to `tuple` in every row.
inline Matrix WithColumns(const Matrix& x, const FeatureSet& s, std::span<const double> tuple) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t a = 0; a < s.size(); ++a) out(r, s.indices()[a]) = tuple[a];
  }
  return out;
}

}  // namespace bbfi::internal

#endif  // BBFI_SRC_REPLACE_H_
