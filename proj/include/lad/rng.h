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

#ifndef LAD_RNG_H_
#define LAD_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace lad {

using Rng = std::mt19937_64;

// Seed for a named substream of a run ("init", "noise", "shuffle", ...).
// Streams with different names or indices are decorrelated through
// std::seed_seq mixing.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view stream,
                         std::uint64_t index = 0);

inline Rng MakeRng(std::uint64_t seed, std::string_view stream,
                   std::uint64_t index = 0) {
  return Rng(DeriveSeed(seed, stream, index));
}

}  // namespace lad

#endif  // LAD_RNG_H_
