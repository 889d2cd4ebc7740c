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

#ifndef BBFI_PARALLEL_H_
#define BBFI_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace bbfi {

// Caps the number of worker threads used by ParallelFor. 0 restores the
// default: the BBFI_THREADS environment variable if set, otherwise the
// hardware concurrency.
void SetMaxThreads(std::size_t threads);
std::size_t MaxThreads();

// Runs body(i) for every i in [0, count). Each index must write only to its
// own output slot; the caller combines the slots in index order, so results
// are identical for any worker count. If several bodies throw, the exception
// of the lowest index is rethrown.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace bbfi

#endif  // BBFI_PARALLEL_H_
