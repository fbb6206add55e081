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

#include "croma/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "croma/align.hpp"
#include "croma/error.hpp"
#include "croma/rng.hpp"

namespace croma::metrics {

namespace {
constexpr uint64_t kTagTrain = 41;     // matches run_strategy's stream layout
constexpr uint64_t kTagProtocol = 42;  // so sweeps pair with plain runs
}  // namespace

void EvalProtocol::validate() const {
  if (n_eval_tasks < 1 || n_way < 2 || k_grid.empty() || repeats < 1)
    throw ConfigError("eval protocol: all fields must be positive (n_way >= 2)");
}

std::vector<SummaryRow> aggregate_accuracy(const std::vector<EpisodeResult>& results) {
  std::map<std::pair<int, size_t>, std::vector<double>> groups;
  for (const auto& r : results)
    groups[{static_cast<int>(r.strategy), r.k_shot}].push_back(r.accuracy);

  std::vector<SummaryRow> out;
  for (auto& [key, values] : groups) {
    // Sorting fixes the summation order regardless of arrival order.
    std::sort(values.begin(), values.end());
    SummaryRow row;
    row.strategy = static_cast<StrategyKind>(key.first);
    row.k_shot = key.second;
    row.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(row);
  }
  return out;
}

RetrievalReport retrieval_metrics(const MlpParams& e_src, const MlpParams& e_tgt,
                                  const Mat& src, const Mat& tgt) {
  if (src.rows != tgt.rows) throw ConfigError("retrieval_metrics: pair count mismatch");
  if (src.rows < 2) throw ConfigError("retrieval_metrics: need at least 2 pairs");

  // embed_normalized raises NumericError naming the sample on zero norms;
  // cosine similarity is then a plain dot product.
  const Mat es = align::embed_normalized(e_src, src);
  const Mat et = align::embed_normalized(e_tgt, tgt);

  const size_t n = src.rows;
  std::vector<double> ranks(n);
  RetrievalReport rep;
  for (size_t i = 0; i < n; ++i) {
    const double true_sim = dot_rows(es, i, et, i);
    size_t rank = 1;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double sim = dot_rows(es, i, et, j);
      if (sim > true_sim || (sim == true_sim && j < i)) ++rank;
    }
    ranks[i] = static_cast<double>(rank);
    rep.recall_at_1 += rank <= 1 ? 1.0 : 0.0;
    rep.recall_at_5 += rank <= 5 ? 1.0 : 0.0;
    rep.recall_at_10 += rank <= 10 ? 1.0 : 0.0;
    rep.mean_rank += ranks[i];
    rep.cosine_loss += 1.0 - true_sim;
  }
  const double dn = static_cast<double>(n);
  rep.recall_at_1 /= dn;
  rep.recall_at_5 /= dn;
  rep.recall_at_10 /= dn;
  rep.mean_rank /= dn;
  rep.cosine_loss /= dn;
  std::sort(ranks.begin(), ranks.end());
  rep.median_rank = n % 2 == 1 ? ranks[n / 2] : 0.5 * (ranks[n / 2 - 1] + ranks[n / 2]);
  return rep;
}

std::vector<NoisePoint> noise_sweep(StrategyKind kind,
                                    const synth::ConceptWorld& world,
                                    const std::vector<double>& rates,
                                    const EvalProtocol& protocol,
                                    const meta::MetaConfig& cfg, uint64_t seed) {
  protocol.validate();
  for (double r : rates)
    if (r < 0.0 || r > 1.0) throw ConfigError("noise_sweep: rates must lie in [0, 1]");

  const auto policy = meta::AccessPolicy::for_strategy(kind);
  const uint64_t train_seed = derive_stream(seed, kTagTrain);
  const uint64_t protocol_seed = derive_stream(seed, kTagProtocol);

  // Strategies that never read target labels during meta-training are
  // unaffected by meta-train noise, so one training serves every rate.
  std::optional<meta::TrainedStrategy> shared_trained;
  if (!policy.target_labels_in_meta_train) {
    meta::WorldAccess access(world, policy);
    shared_trained = meta::train_strategy(kind, access, cfg, train_seed);
  }

  std::vector<NoisePoint> out;
  for (double rate : rates) {
    meta::WorldAccess access(world, policy);
    meta::TrainedStrategy trained =
        shared_trained ? *shared_trained
                       : meta::train_strategy(kind, access, cfg, train_seed, rate);
    NoisePoint p;
    p.rate = rate;
    p.run = meta::evaluate_strategy(trained, access, protocol.k_grid,
                                    protocol.n_eval_tasks, protocol.n_way, cfg,
                                    protocol_seed, rate);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("spearman_rho: need matching series with >= 2 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericError("spearman_rho: a series is constant");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace croma::metrics
