// Copyright 2026 The IDP-FL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDPFL_RNG_H_
#define IDPFL_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace idpfl {

// Stream identifiers. Every random draw in a run comes from a generator keyed
// by (master seed, stream, ...) so draws never depend on execution order.
enum class Stream : uint64_t {
  kData = 1,
  kPartition,
  kGroups,
  kInit,
  kSampling,
  kLocal,
  kNoise,
  kClientNoise,
  kCountNoise,
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master,
                            std::initializer_list<uint64_t> keys) {
  uint64_t h = splitmix64(master);
  for (uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

inline std::mt19937_64 make_rng(uint64_t master, Stream stream, uint64_t a = 0,
                                uint64_t b = 0) {
  return std::mt19937_64(
      derive_seed(master, {static_cast<uint64_t>(stream), a, b}));
}

}  // namespace idpfl

#endif  // IDPFL_RNG_H_
