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

#ifndef CROMA_LINEAR_WORLD_HPP_
#define CROMA_LINEAR_WORLD_HPP_

#include <cstdint>
#include <string>

#include "croma/mat.hpp"

namespace croma::synth {

// Two-modality linear teacher universe. Inputs in the target modality are
// x2 ~ N(0, I_d); the source modality sees x1 = W x2 through a full-rank
// map W. Labels come from noisy linear teachers y_m = u_m . x_m + eps with
// eps ~ N(0, sigma^2). Alignment pairs observe x1 = W x2 + eta with
// eta ~ N(0, sigma_W^2 I), so sigma_W interpolates from strong pairing
// (sigma_W = 0) to increasingly weak pairing.

struct LinearWorldConfig {
  size_t d = 20;
  double sigma = 1.0;
  double sigma_w = 0.1;
  size_t n1 = 250;
  size_t n2 = 40;
  size_t n_align = 100;

  void validate() const;
};

struct LinearWorld {
  LinearWorldConfig cfg;
  Mat u1;  // 1 x d, unit norm
  Mat u2;  // 1 x d, u2 = W^T u1 so that u1 . (W x2) == u2 . x2 exactly
  Mat w;   // d x d, full rank
  double condition_number = 0.0;
};

struct LinearDatasets {
  Mat x1_sup;  // n1 x d
  Mat y1_sup;  // n1 x 1
  Mat x2_sup;  // n2 x d
  Mat y2_sup;  // n2 x 1
  Mat x1_unsup;  // n_align x d, W x2 + eta
  Mat x2_unsup;  // n_align x d
};

/// Deterministic generation from (cfg, seed). W entries are i.i.d.
/// N(0, 1/d); draws with condition number above 1e6 are regenerated, up to
/// ten attempts.
std::pair<LinearWorld, LinearDatasets> gen_linear_world(const LinearWorldConfig& cfg,
                                                        uint64_t seed);

/// Datasets only, from an existing world. `stream_id` picks the draw.
LinearDatasets gen_linear_datasets(const LinearWorld& world, uint64_t stream_id);

/// gen_linear_world with an experiment-level conditioning gate: draws whose
/// W has condition number above `max_cond` are replaced from derived
/// substreams (deterministically). The closed-form error scalings assume a
/// benign W, so sweeps reproducing them use this entry point.
std::pair<LinearWorld, LinearDatasets> gen_linear_world_conditioned(
    const LinearWorldConfig& cfg, uint64_t seed, double max_cond);

/// Writes world.csv, d1sup.csv, d2sup.csv, dunsup.csv under `dir` with 17
/// significant digits, for cross-implementation comparison.
void save_csv_bundle(const LinearWorld& world, const LinearDatasets& data,
                     const std::string& dir);

}  // namespace croma::synth

#endif  // CROMA_LINEAR_WORLD_HPP_
