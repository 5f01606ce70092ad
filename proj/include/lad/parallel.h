// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LAD_PARALLEL_H_
#define LAD_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace lad {

// Worker cap: LAD_THREADS if set and positive, else hardware concurrency.
int MaxThreads();

// Runs fn(i) for i in [0, count). Work items must be independent; results
// do not depend on the number of threads used.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace lad

#endif  // LAD_PARALLEL_H_
