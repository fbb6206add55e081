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

#ifndef CROMA_ALIGN_HPP_
#define CROMA_ALIGN_HPP_

#include <cstdint>
#include <vector>

#include "croma/concept_world.hpp"
#include "croma/mlp.hpp"
#include "croma/optim.hpp"

namespace croma::align {

using synth::AlignmentTask;

enum class AlignVariant {
  kNce,          // L_i = -pos_i + sum_j neg_ij
  kMarginHinge,  // L_i = sum_j max(0, margin - pos_i + neg_ij)
};

struct AlignLossConfig {
  // The hinge form with margin 0.1 is the default configuration; the plain
  // NCE form is selectable.
  AlignVariant variant = AlignVariant::kMarginHinge;
  double margin = 0.1;
  size_t negatives_per_pair = 5;
  size_t weak_pairs_per_set = 4;
  // Dot products are taken between L2-normalized embeddings by default so
  // the loss is invariant to positive rescaling of the raw embeddings.
  bool normalize_embeddings = true;

  void validate() const;
};

/// Negative target indices per positive, into the task's train target rows
/// (strong) or the pooled train-set target rows (weak).
struct Negatives {
  std::vector<std::vector<size_t>> idx;
};

/// Sampled cross-product positives for weak sets.
struct WeakPositives {
  struct Item {
    size_t set = 0;      // train-set index
    size_t src_row = 0;  // row within the set's source side
    size_t tgt_row = 0;  // row within the set's target side
  };
  std::vector<Item> items;
};

/// Strong mode: for each train pair, `per_pair` uniform draws over train
/// targets excluding the pair's own partner.
Negatives sample_negatives(const AlignmentTask& task, size_t per_pair,
                           uint64_t stream_id);

/// Weak mode: `per_set` positives per train set, uniform over the set's
/// cross product.
WeakPositives sample_weak_positives(const AlignmentTask& task, size_t per_set,
                                    uint64_t stream_id);

/// Weak mode: for each positive, `per_pair` uniform draws over pooled train
/// targets excluding the positive's own set.
Negatives sample_negatives(const AlignmentTask& task, const WeakPositives& positives,
                           size_t per_pair, uint64_t stream_id);

struct AlignLossResult {
  double loss = 0.0;
  MlpParams grad_src;  // gradient for the source encoder
  MlpParams grad_tgt;  // gradient for the target encoder
};

/// Contrastive loss over row-paired batches, averaged over pairs (negatives
/// are summed within a pair, matching the per-pair objective). Gradients are
/// exact, including the path through embedding normalization.
AlignLossResult strong_align_loss(const MlpParams& e_src, const MlpParams& e_tgt,
                                  const Mat& src, const Mat& tgt,
                                  const Negatives& negatives,
                                  const AlignLossConfig& cfg);

/// Same objective with sampled cross-product positives over weak sets. With
/// singleton sets this reduces exactly to the strong loss on the induced
/// pairs.
AlignLossResult weak_align_loss(const MlpParams& e_src, const MlpParams& e_tgt,
                                const AlignmentTask& task,
                                const WeakPositives& positives,
                                const Negatives& negatives,
                                const AlignLossConfig& cfg);

/// Pooled train target rows of a weak task, with each row's set index.
std::pair<Mat, std::vector<size_t>> weak_target_pool(const AlignmentTask& task);

struct InnerTrainConfig {
  size_t steps = 5;
  double lr = 1e-3;
  OptKind optimizer = OptKind::kAdam;
};

struct InnerTrainResult {
  MlpParams e_src;
  MlpParams e_tgt;
  double final_loss = 0.0;
};

/// Task-level adaptation used by the meta loop: a fresh optimizer, `steps`
/// gradient updates on the task's train split, fresh negatives each step.
/// The input meta-parameters are untouched.
InnerTrainResult align_inner_train(const MlpParams& e_src, const MlpParams& e_tgt,
                                   const AlignmentTask& task,
                                   const AlignLossConfig& loss_cfg,
                                   const InnerTrainConfig& train_cfg,
                                   uint64_t stream_id);

/// Train-split loss at fixed parameters (fresh negatives from `stream_id`);
/// used for logging and for before/after comparisons.
double alignment_loss_on_task(const MlpParams& e_src, const MlpParams& e_tgt,
                              const AlignmentTask& task, const AlignLossConfig& cfg,
                              uint64_t stream_id);

/// Row-normalized embeddings of a batch under an encoder. Throws
/// NumericError naming the row if an embedding has zero norm.
Mat embed_normalized(const MlpParams& encoder, const Mat& x);

/// Encoder forward pass plus optional row normalization, keeping what the
/// reverse pass needs. Shared by the alignment losses and the classifier
/// path, which consumes normalized embeddings.
struct EmbedTrace {
  ForwardTrace trace;
  Mat embeddings;  // normalized when requested, raw otherwise
  std::vector<double> norms;
  bool is_normalized = false;
};

EmbedTrace embed_forward(const MlpParams& encoder, const Mat& x, bool normalize,
                         const char* who = "embed");

/// Encoder gradients given d loss / d embeddings (through normalization when
/// it was applied in the forward pass).
MlpParams embed_backward(const MlpParams& encoder, const EmbedTrace& t,
                         const Mat& grad_embeddings);

}  // namespace croma::align

#endif  // CROMA_ALIGN_HPP_
