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

#ifndef CROMA_STRATEGIES_HPP_
#define CROMA_STRATEGIES_HPP_

#include <cstdint>
#include <vector>

#include "croma/metalearn.hpp"

namespace croma::meta {

/// What a strategy may read from the world. Target-modality labels during
/// meta-training are reserved for the within-modality oracle.
struct AccessPolicy {
  bool target_labels_in_meta_train = false;

  static AccessPolicy for_strategy(StrategyKind k);
};

enum class Phase { kMetaTrain, kMetaTest };

/// Counting gate between strategies and the world. Every episode and
/// alignment task a strategy consumes goes through here; reads that violate
/// the policy throw ConfigError instead of returning data.
class WorldAccess {
 public:
  WorldAccess(const ConceptWorld& world, AccessPolicy policy)
      : world_(world), policy_(policy) {}

  const ConceptWorld& world() const { return world_; }
  void set_phase(Phase p) { phase_ = p; }
  Phase phase() const { return phase_; }

  ClassificationTask source_episode(size_t n_way, size_t k_shot, uint64_t stream_id);

  /// Labeled target episode. During meta-train this is a contract violation
  /// unless the policy allows target labels. `label_noise_rate` > 0 applies
  /// symmetric noise to the episode labels (used by the noise studies).
  ClassificationTask target_episode(size_t n_way, size_t k_shot,
                                    synth::ConceptSplit split, uint64_t stream_id,
                                    double label_noise_rate = 0.0);

  /// Unlabeled target observations from meta-train concepts.
  Mat target_unlabeled(size_t n, uint64_t stream_id);

  synth::AlignmentTask alignment_task(synth::AlignMode mode, size_t size,
                                      uint64_t stream_id);

  // Read counters for contract tests.
  size_t source_label_reads() const { return source_label_reads_; }
  size_t target_label_reads_meta_train() const { return target_label_reads_meta_train_; }
  size_t target_unlabeled_reads() const { return target_unlabeled_reads_; }
  size_t alignment_task_reads() const { return alignment_task_reads_; }

 private:
  const ConceptWorld& world_;
  AccessPolicy policy_;
  Phase phase_ = Phase::kMetaTrain;
  size_t source_label_reads_ = 0;
  size_t target_label_reads_meta_train_ = 0;
  size_t target_unlabeled_reads_ = 0;
  size_t alignment_task_reads_ = 0;
};

/// A strategy after meta-training: everything meta_test needs.
struct TrainedStrategy {
  StrategyKind kind = StrategyKind::kCroma;
  MlpParams target_encoder;
  MlpParams phi_trunk;
  std::vector<TrainingLogRow> log;
};

/// Meta-trains one strategy. All strategies consume comparable data and
/// step budgets; they differ in which updates are meta-updates and in how
/// the target encoder is obtained.
TrainedStrategy train_strategy(StrategyKind kind, WorldAccess& access,
                               const MetaConfig& cfg, uint64_t seed,
                               double meta_train_label_noise = 0.0);

struct EvalRun {
  std::vector<EpisodeResult> results;
  std::vector<uint64_t> task_fingerprints;  // one per fixed evaluation task
};

/// The fixed-evaluation-task protocol: `n_eval_tasks` target episodes drawn
/// once from the protocol stream (independent of the strategy), evaluated at
/// every k in the grid. `support_noise_rate` corrupts support labels only.
EvalRun evaluate_strategy(const TrainedStrategy& trained, WorldAccess& access,
                          const std::vector<size_t>& k_grid, size_t n_eval_tasks,
                          size_t n_way, const MetaConfig& cfg, uint64_t protocol_seed,
                          double support_noise_rate = 0.0);

/// train_strategy + evaluate_strategy under the strategy's access policy.
EvalRun run_strategy(StrategyKind kind, const ConceptWorld& world,
                     const std::vector<size_t>& k_grid, size_t n_eval_tasks,
                     size_t n_way, const MetaConfig& cfg, uint64_t seed);

}  // namespace croma::meta

#endif  // CROMA_STRATEGIES_HPP_
