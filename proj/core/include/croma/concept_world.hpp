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

#ifndef CROMA_CONCEPT_WORLD_HPP_
#define CROMA_CONCEPT_WORLD_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "croma/mat.hpp"

namespace croma::synth {

// Clustered-concept universe for episodic experiments. Concepts are
// Gaussians in a shared latent space; two observation spaces are derived
// from the same latent sample: the source modality through a linear map and
// the target modality through a linear map followed by tanh, so no single
// linear transform aligns them. Strong pairs share one latent sample; weak
// sets share only the concept.

enum class Modality { kSource, kTarget };

enum class ConceptSplit { kMetaTrain, kMetaVal, kMetaTest };

struct ConceptWorldConfig {
  size_t latent_dim = 4;
  size_t num_concepts = 30;
  double concept_std = 0.35;
  size_t source_dim = 12;
  size_t target_dim = 12;
  // Fractions for the meta-train / meta-val / meta-test concept split.
  double train_frac = 0.6;
  double val_frac = 0.2;
  size_t weak_set_count = 8;
  size_t n_way = 5;

  void validate() const;
};

struct ConceptWorld {
  ConceptWorldConfig cfg;
  Mat centers;   // num_concepts x latent_dim, unit-norm rows
  Mat map_src;   // source_dim x latent_dim
  Mat map_tgt;   // target_dim x latent_dim (tanh applied after)
  std::vector<size_t> train_concepts;
  std::vector<size_t> val_concepts;
  std::vector<size_t> test_concepts;

  const std::vector<size_t>& split(ConceptSplit s) const;

  /// Latent draw for one concept.
  Mat sample_latents(size_t concept_id, size_t n, Rng& rng) const;

  /// Deterministic modality images of latent rows.
  Mat observe(const Mat& latents, Modality m) const;
};

ConceptWorld gen_concept_world(const ConceptWorldConfig& cfg, uint64_t seed);

/// N-way k-shot episode with a query set. Labels are remapped per episode to
/// 0..n_way-1 in the order concepts were drawn.
struct ClassificationTask {
  Modality modality = Modality::kTarget;
  size_t n_way = 0;
  size_t k_shot = 0;
  Mat support_x;
  std::vector<int> support_y;
  Mat query_x;
  std::vector<int> query_y;
  std::vector<size_t> concept_ids;  // episode label l <-> concept_ids[l]

  /// Order-sensitive content hash; used to check that fixed evaluation
  /// tasks really are shared across strategies.
  uint64_t fingerprint() const;
};

constexpr size_t kQueryPerClass = 15;

ClassificationTask sample_episode(const ConceptWorld& world, Modality modality,
                                  size_t n_way, size_t k_shot, ConceptSplit split,
                                  uint64_t stream_id);

/// Episode over an explicit concept list (label l is concepts[l]). Used by
/// the fixed-evaluation-task protocol, where the concept set defines the
/// task and stays constant while k varies.
ClassificationTask sample_episode_with_concepts(const ConceptWorld& world,
                                                Modality modality,
                                                const std::vector<size_t>& concepts,
                                                size_t k_shot, uint64_t stream_id);

/// n_way concepts drawn without replacement from a split.
std::vector<size_t> draw_concepts(const ConceptWorld& world, ConceptSplit split,
                                  size_t n_way, uint64_t stream_id);

enum class AlignMode { kStrong, kWeak };

/// Paired cross-modal data: strong mode holds one-to-one pairs (rows of
/// src/tgt correspond and share the latent in the matching row of
/// `latents`); weak mode holds concept-grouped sets with independent latent
/// draws on each side.
struct AlignmentTask {
  AlignMode mode = AlignMode::kStrong;

  // Strong mode. Split into train/test halves.
  Mat train_src, train_tgt, train_latents;
  Mat test_src, test_tgt, test_latents;
  std::vector<size_t> train_concepts, test_concepts;  // per pair

  struct WeakSet {
    size_t concept_id = 0;
    Mat src;  // n_s x source_dim
    Mat tgt;  // n_t x target_dim
  };
  std::vector<WeakSet> train_sets, test_sets;
};

/// `size` counts pairs (strong) or samples per side per set (weak); the task
/// is split in half into train/test. Strong pairs regenerate exactly from
/// the stored latents.
AlignmentTask sample_alignment_task(const ConceptWorld& world, AlignMode mode,
                                    size_t size, uint64_t stream_id);

/// Symmetric label noise: with probability `rate`, a label is replaced by a
/// uniform draw over the other n_way-1 labels. Support and query labels are
/// both affected; rate 0 returns the task unchanged.
ClassificationTask corrupt_labels(const ClassificationTask& task, double rate,
                                  uint64_t stream_id);

/// Writes centers.csv, map_src.csv, map_tgt.csv, splits.csv under `dir`.
void save_concept_world(const ConceptWorld& world, const std::string& dir);

}  // namespace croma::synth

#endif  // CROMA_CONCEPT_WORLD_HPP_
