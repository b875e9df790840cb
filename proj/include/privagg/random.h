// Copyright 2026 The privagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVAGG_RANDOM_H_
#define PRIVAGG_RANDOM_H_

#include <cstdint>
#include <random>

namespace privagg {

// Every randomized operation in the library takes one of these explicitly.
// There is no global generator.
using Rng = std::mt19937_64;

// Independent stream for `stream_index` under `master_seed`. Streams are keyed
// by index, so trial i draws the same numbers regardless of how many trials
// run in total.
Rng DeriveStream(uint64_t master_seed, uint64_t stream_index);

// Uniform double in [0, 1) with 53 random bits. Hand-rolled because
// std::uniform_real_distribution output differs between standard libraries.
inline double UniformDouble(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1].
inline double UniformOpenClosed(Rng& rng) { return 1.0 - UniformDouble(rng); }

// Uniform integer in [0, bound). bound must be positive.
uint64_t UniformBelow(Rng& rng, uint64_t bound);

inline bool Bernoulli(Rng& rng, double p) { return UniformDouble(rng) < p; }

}  // namespace privagg

#endif  // PRIVAGG_RANDOM_H_
