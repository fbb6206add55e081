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

#ifndef CROMA_CONFIG_HPP_
#define CROMA_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "croma/analysis.hpp"
#include "croma/metrics.hpp"

namespace croma {

// Experiment configuration: flat-sectioned key=value text (documented in the
// README). Validation is strict and runs before any compute: unknown
// sections or keys are rejected, as are missing required keys, each with a
// message naming the field.

struct ExperimentConfig {
  struct Run {
    uint64_t seed = 0;
    std::string out_dir = "out";
  } run;

  struct World {
    std::string kind;  // "linear" or "concept"; required
    synth::LinearWorldConfig linear;
    synth::ConceptWorldConfig concepts;
  } world;

  metrics::EvalProtocol protocol;

  std::vector<meta::StrategyKind> strategies = {meta::StrategyKind::kCroma};

  meta::MetaConfig train;

  struct Tradeoff {
    std::vector<size_t> n_align_grid = {25, 50, 100, 200, 400, 800};
    std::vector<double> sigma_w_grid = {0.05, 0.2, 0.5};
    size_t seeds = 50;
    size_t mc_samples = 4000;
    analysis::RiskEval risk_eval = analysis::RiskEval::kDesign;
    bool antithetic = true;
    // The closed-form scalings assume a benign full-rank W; worlds whose W
    // is more ill-conditioned than this are redrawn for the sweep (0
    // disables the gate). The world type itself accepts up to 1e6.
    double max_world_cond = 30.0;
    bool dump_world = false;  // also write the CSV bundle of seed 0's data
  } tradeoff;

  struct Noise {
    std::vector<double> rates;  // empty disables the sweep in cmd_evaluate
    meta::StrategyKind strategy = meta::StrategyKind::kCroma;
  } noise;

  struct SetCount {
    std::vector<size_t> s_grid = {2, 4, 8, 16, 32, 64, 128};
    std::vector<size_t> n_grid = {200, 800, 3200};
    size_t seeds = 10;
    double obs_noise = 0.5;
    size_t eval_samples = 4000;
  } setcount;

  struct Retrieve {
    size_t pairs = 200;
    meta::StrategyKind strategy = meta::StrategyKind::kCroma;
  } retrieve;

  /// Cross-field validation (world kind known, module configs valid).
  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace croma

#endif  // CROMA_CONFIG_HPP_
