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

#ifndef CROMA_METALEARN_HPP_
#define CROMA_METALEARN_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "croma/align.hpp"
#include "croma/concept_world.hpp"
#include "croma/mlp.hpp"

namespace croma::meta {

using synth::ClassificationTask;
using synth::ConceptWorld;

/// Meta-parameters: one encoder per modality plus the shared classifier
/// trunk. The classifier consumes embeddings only, which is what lets a
/// model trained on source episodes transfer to target episodes. The
/// episode-specific output layer is re-initialized per episode and is not
/// part of the meta-state.
struct MetaState {
  MlpParams e_src_meta;
  MlpParams e_tgt_meta;
  MlpParams phi_meta;  // classifier trunk, embed_dim -> hidden
  size_t iteration = 0;

  /// Content hash over all parameters, for isolation checks.
  uint64_t checksum() const;
};

struct MetaConfig {
  size_t iterations = 800;
  size_t inner_steps = 5;
  double meta_lr = 0.1;        // Reptile step toward adapted parameters (SGD)
  double align_lr = 1e-3;      // inner optimizer is Adam
  double classifier_lr = 1e-3;

  // Reptile toggles. With a flag off, the meta parameters are simply
  // replaced by the adapted ones (plain sequential training), which is the
  // non-meta baseline form of that component.
  bool encoder_reptile = true;
  bool classifier_reptile = true;

  synth::AlignMode align_mode = synth::AlignMode::kStrong;
  size_t align_task_size = 24;  // pairs (strong) or per-side set size (weak)
  size_t source_n_way = 5;
  size_t source_k_shot = 5;

  size_t embed_dim = 8;
  size_t encoder_hidden = 32;
  size_t classifier_hidden = 32;

  // 50 Adam steps at the classifier rate: enough for the fresh episode head
  // to actually fit the support set, which keeps accuracy monotone in k.
  size_t test_adapt_steps = 50;
  bool test_adapt_encoder = true;

  align::AlignLossConfig loss;

  void validate() const;
};

/// First-order meta update: meta + eps * (adapted - meta), per parameter.
MlpParams reptile_update(const MlpParams& meta, const MlpParams& adapted, double eps);

MetaState init_meta_state(const ConceptWorld& world, const MetaConfig& cfg,
                          uint64_t seed);

struct TrainingLogRow {
  size_t iteration = 0;
  double align_loss = 0.0;
  double cls_loss = 0.0;
};

struct MetaTrainResult {
  MetaState state;
  std::vector<TrainingLogRow> log;
};

class WorldAccess;

/// One meta-training run: per iteration, one alignment task adapts the
/// encoders, then one source classification task adapts the classifier,
/// each followed by its meta update.
MetaTrainResult croma_meta_train(WorldAccess& world, const MetaConfig& cfg,
                                 uint64_t seed);

/// Convenience overload without access accounting.
MetaTrainResult croma_meta_train(const ConceptWorld& world, const MetaConfig& cfg,
                                 uint64_t seed);

enum class StrategyKind {
  kCroma,
  kAlignThenClassify,
  kAlignThenMetaClassify,
  kPretrainFinetune,
  kUnsupMetaReconstruct,
  kSharedEncoder,
  kSharedEncoderAlign,
  kOracleWithinModality,
};

std::string to_string(StrategyKind k);
StrategyKind strategy_from_string(const std::string& name);

struct EpisodeResult {
  StrategyKind strategy = StrategyKind::kCroma;
  size_t k_shot = 0;
  double accuracy = 0.0;
  size_t adapt_steps = 0;
  uint64_t stream_id = 0;
  size_t task_index = 0;
};

/// k-shot adaptation on a target episode: fresh output layer, a copy of the
/// target encoder and classifier trunk fine-tuned on the support set with
/// Adam, accuracy measured on the query set. `state` is not modified.
EpisodeResult meta_test(const MetaState& state, const ClassificationTask& episode,
                        const MetaConfig& cfg, uint64_t stream_id);

/// meta_test against explicit parameters (used by strategies whose target
/// encoder is not a plain MetaState, e.g. shared-encoder baselines).
EpisodeResult adapt_and_score(const MlpParams& target_encoder,
                              const MlpParams& phi_trunk,
                              const ClassificationTask& episode,
                              const MetaConfig& cfg, uint64_t stream_id);

struct EpisodeAdaptResult {
  MlpParams encoder;
  MlpParams classifier_net;  // trunk layers followed by the episode head
  double final_loss = 0.0;
};

/// Cross-entropy gradient steps on the episode's support set, starting from
/// copies. The classifier always adapts; the encoder only when requested.
EpisodeAdaptResult adapt_episode(const MlpParams& encoder, const MlpParams& trunk,
                                 const MlpParams& head,
                                 const ClassificationTask& episode, size_t steps,
                                 double lr, bool adapt_encoder);

/// Fresh per-episode output layer (hidden -> n_way, linear).
MlpParams make_episode_head(size_t hidden, size_t n_way, uint64_t stream_id);

/// First `trunk_layers` layers of a classifier net.
MlpParams classifier_trunk(const MlpParams& net, size_t trunk_layers);

/// Query-set accuracy of a full model; argmax ties keep the lowest index.
double score_episode(const MlpParams& encoder, const MlpParams& classifier_net,
                     const ClassificationTask& episode);

// Serialization of meta states: a manifest describing every layer plus a
// flat CSV of values. Format documented in the README.
void save_meta_state(const MetaState& state, const std::string& dir);
MetaState load_meta_state(const std::string& dir);

}  // namespace croma::meta

#endif  // CROMA_METALEARN_HPP_
