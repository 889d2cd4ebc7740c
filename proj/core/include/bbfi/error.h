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

#ifndef BBFI_ERROR_H_
#define BBFI_ERROR_H_

#include <stdexcept>
#include <string>

namespace bbfi {

// Every failure raised by the library. Messages name the offending row,
// column, feature or request so they can be shown to users verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bbfi

#endif  // BBFI_ERROR_H_
