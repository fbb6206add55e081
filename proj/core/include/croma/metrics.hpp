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

#ifndef CROMA_METRICS_HPP_
#define CROMA_METRICS_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "croma/strategies.hpp"

namespace croma::metrics {

using meta::EpisodeResult;
using meta::StrategyKind;

/// Evaluation protocol: accuracy over fixed evaluation tasks at each k,
/// repeated with fresh worlds and trainings, reported as mean and standard
/// deviation.
struct EvalProtocol {
  size_t n_eval_tasks = 8;
  size_t n_way = 5;
  std::vector<size_t> k_grid = {1, 5, 10};
  size_t repeats = 10;

  void validate() const;
};

struct SummaryRow {
  StrategyKind strategy = StrategyKind::kCroma;
  size_t k_shot = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, n-1 denominator
  size_t count = 0;
};

/// Grouped mean and sample std per (strategy, k). Values are sorted before
/// summation so the result is invariant to the order results arrive in.
std::vector<SummaryRow> aggregate_accuracy(const std::vector<EpisodeResult>& results);

struct RetrievalReport {
  double recall_at_1 = 0.0;
  double recall_at_5 = 0.0;
  double recall_at_10 = 0.0;
  double median_rank = 0.0;
  double mean_rank = 0.0;
  double cosine_loss = 0.0;  // mean (1 - cos) over true pairs
};

/// Cosine retrieval over held-out pairs: each source embedding ranks every
/// target embedding (ties broken by candidate index), the true partner's
/// rank feeds recall@k and the rank statistics.
RetrievalReport retrieval_metrics(const MlpParams& e_src, const MlpParams& e_tgt,
                                  const Mat& src, const Mat& tgt);

struct NoisePoint {
  double rate = 0.0;
  meta::EvalRun run;
};

/// One full evaluation per noise rate with a shared world seed, so rate 0
/// reproduces the clean run exactly. Label noise reaches the few-shot
/// support labels, and additionally the meta-training labels of strategies
/// whose contract permits target labels there (the oracle), which are the
/// only labels a strategy ever sees.
std::vector<NoisePoint> noise_sweep(StrategyKind kind,
                                    const synth::ConceptWorld& world,
                                    const std::vector<double>& rates,
                                    const EvalProtocol& protocol,
                                    const meta::MetaConfig& cfg, uint64_t seed);

/// Spearman rank correlation; ties get average ranks.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace croma::metrics

#endif  // CROMA_METRICS_HPP_
