// Copyright 2026 The Croma Authors
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

#ifndef CROMA_RNG_HPP_
#define CROMA_RNG_HPP_

#include <cstdint>
#include <vector>

namespace croma {

// Self-contained generator so that every sequence is reproducible bit-for-bit
// regardless of the standard library in use. Core generator is xoshiro256**;
// seeding and stream derivation go through splitmix64.
//
// Stream derivation contract (stable across versions):
//   seed(master)            : s[i] = splitmix64 chain started at master
//   derive(master, tag)     : splitmix64(splitmix64(master) ^
//                             splitmix64(tag ^ 0x9e3779b97f4a7c15))
// Nested streams are derived by repeated application of derive(). Changing
// this mix would silently re-randomize every experiment, so it is fixed.

uint64_t splitmix64(uint64_t& state);

/// One application of the documented (master, tag) -> substream seed mix.
uint64_t derive_stream(uint64_t master, uint64_t tag);

class Rng {
 public:
  explicit Rng(uint64_t seed);
  Rng(uint64_t master, uint64_t stream_id) : Rng(derive_stream(master, stream_id)) {}

  uint64_t next_u64();

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Unbiased integer in [0, n). Lemire bounded rejection; n must be > 0.
  uint64_t uniform_int(uint64_t n);

  /// Standard normal via Box-Muller. One spare value is cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::vector<double> normal_vec(size_t n, double stddev = 1.0);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<size_t> permutation(size_t n);

  /// k distinct indices drawn from 0..n-1, in draw order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k);

 private:
  uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace croma

#endif  // CROMA_RNG_HPP_
