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

#include "croma/concept_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "croma/csv.hpp"
#include "croma/error.hpp"
#include "croma/rng.hpp"

namespace croma::synth {

namespace {
constexpr uint64_t kTagWorld = 11;
constexpr uint64_t kTagEpisode = 12;
constexpr uint64_t kTagAlign = 13;
constexpr uint64_t kTagCorrupt = 14;

uint64_t mix_in(uint64_t h, uint64_t v) {
  uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}

uint64_t mix_mat(uint64_t h, const Mat& m) {
  h = mix_in(h, m.rows);
  h = mix_in(h, m.cols);
  for (double x : m.data) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x));
    std::memcpy(&bits, &x, sizeof(bits));
    h = mix_in(h, bits);
  }
  return h;
}
}  // namespace

void ConceptWorldConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("concept world: latent_dim must be >= 1");
  if (source_dim < 1 || target_dim < 1)
    throw ConfigError("concept world: modality dims must be >= 1");
  if (concept_std < 0.0) throw ConfigError("concept world: concept_std must be >= 0");
  if (n_way < 2) throw ConfigError("concept world: n_way must be >= 2");
  if (num_concepts < 3 * n_way) {
    throw ConfigError("concept world: need num_concepts >= 3 * n_way = " +
                      std::to_string(3 * n_way) + " so all splits can host episodes");
  }
  if (train_frac <= 0.0 || val_frac <= 0.0 || train_frac + val_frac >= 1.0)
    throw ConfigError("concept world: split fractions must be positive and sum below 1");
  if (weak_set_count < 1) throw ConfigError("concept world: weak_set_count must be >= 1");
}

const std::vector<size_t>& ConceptWorld::split(ConceptSplit s) const {
  switch (s) {
    case ConceptSplit::kMetaTrain: return train_concepts;
    case ConceptSplit::kMetaVal: return val_concepts;
    case ConceptSplit::kMetaTest: return test_concepts;
  }
  throw ConfigError("unknown concept split");
}

Mat ConceptWorld::sample_latents(size_t concept_id, size_t n, Rng& rng) const {
  if (concept_id >= cfg.num_concepts) throw ConfigError("sample_latents: bad concept id");
  Mat z(n, cfg.latent_dim);
  for (size_t i = 0; i < n; ++i) {
    double* row = z.row(i);
    const double* c = centers.row(concept_id);
    for (size_t j = 0; j < cfg.latent_dim; ++j)
      row[j] = c[j] + cfg.concept_std * rng.normal();
  }
  return z;
}

Mat ConceptWorld::observe(const Mat& latents, Modality m) const {
  if (m == Modality::kSource) return matmul_nt(latents, map_src);
  Mat out = matmul_nt(latents, map_tgt);
  for (auto& x : out.data) x = std::tanh(x);
  return out;
}

ConceptWorld gen_concept_world(const ConceptWorldConfig& cfg, uint64_t seed) {
  cfg.validate();
  ConceptWorld w;
  w.cfg = cfg;
  Rng rng(seed, kTagWorld);

  w.centers = Mat(cfg.num_concepts, cfg.latent_dim);
  for (size_t i = 0; i < cfg.num_concepts; ++i) {
    double norm = 0.0;
    double* row = w.centers.row(i);
    do {
      for (size_t j = 0; j < cfg.latent_dim; ++j) row[j] = rng.normal();
      norm = row_norm(w.centers, i);
    } while (norm == 0.0);
    for (size_t j = 0; j < cfg.latent_dim; ++j) row[j] /= norm;
  }

  const double map_std = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
  w.map_src = Mat::gaussian(cfg.source_dim, cfg.latent_dim, rng, map_std);
  w.map_tgt = Mat::gaussian(cfg.target_dim, cfg.latent_dim, rng, map_std);

  const size_t n_train = static_cast<size_t>(cfg.train_frac * cfg.num_concepts + 0.5);
  const size_t n_val = static_cast<size_t>(cfg.val_frac * cfg.num_concepts + 0.5);
  if (n_train + n_val >= cfg.num_concepts)
    throw ConfigError("concept world: split leaves no meta-test concepts");
  const auto perm = rng.permutation(cfg.num_concepts);
  w.train_concepts.assign(perm.begin(), perm.begin() + n_train);
  w.val_concepts.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  w.test_concepts.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(w.train_concepts.begin(), w.train_concepts.end());
  std::sort(w.val_concepts.begin(), w.val_concepts.end());
  std::sort(w.test_concepts.begin(), w.test_concepts.end());

  const size_t n_test = w.test_concepts.size();
  if (n_train < cfg.n_way || n_val < cfg.n_way || n_test < cfg.n_way)
    throw ConfigError("concept world: a split has fewer than n_way concepts");
  return w;
}

uint64_t ClassificationTask::fingerprint() const {
  uint64_t h = 0x6d6574615f657069ULL;
  h = mix_in(h, static_cast<uint64_t>(modality));
  h = mix_in(h, n_way);
  h = mix_in(h, k_shot);
  for (size_t c : concept_ids) h = mix_in(h, c);
  for (int y : support_y) h = mix_in(h, static_cast<uint64_t>(y));
  for (int y : query_y) h = mix_in(h, static_cast<uint64_t>(y));
  h = mix_mat(h, support_x);
  h = mix_mat(h, query_x);
  return h;
}

std::vector<size_t> draw_concepts(const ConceptWorld& world, ConceptSplit split,
                                  size_t n_way, uint64_t stream_id) {
  const auto& pool = world.split(split);
  if (pool.size() < n_way) {
    throw ConfigError("draw_concepts: split has " + std::to_string(pool.size()) +
                      " concepts, need " + std::to_string(n_way));
  }
  Rng rng(stream_id, kTagEpisode);
  const auto picks = rng.sample_without_replacement(pool.size(), n_way);
  std::vector<size_t> concepts;
  for (size_t p : picks) concepts.push_back(pool[p]);
  return concepts;
}

namespace {

ClassificationTask fill_episode(const ConceptWorld& world, Modality modality,
                                std::vector<size_t> concepts, size_t k_shot,
                                Rng& rng) {
  const size_t n_way = concepts.size();
  if (n_way < 2 || k_shot < 1)
    throw ConfigError("sample_episode: need n_way >= 2, k_shot >= 1");
  ClassificationTask task;
  task.modality = modality;
  task.n_way = n_way;
  task.k_shot = k_shot;
  task.concept_ids = std::move(concepts);

  task.support_x = Mat(n_way * k_shot, modality == Modality::kSource
                                           ? world.cfg.source_dim
                                           : world.cfg.target_dim);
  task.query_x = Mat(n_way * kQueryPerClass, task.support_x.cols);
  for (size_t label = 0; label < n_way; ++label) {
    const size_t concept_id = task.concept_ids[label];
    const Mat latents = world.sample_latents(concept_id, k_shot + kQueryPerClass, rng);
    const Mat obs = world.observe(latents, modality);
    for (size_t i = 0; i < k_shot; ++i) {
      std::copy(obs.row(i), obs.row(i) + obs.cols,
                task.support_x.row(label * k_shot + i));
      task.support_y.push_back(static_cast<int>(label));
    }
    for (size_t i = 0; i < kQueryPerClass; ++i) {
      std::copy(obs.row(k_shot + i), obs.row(k_shot + i) + obs.cols,
                task.query_x.row(label * kQueryPerClass + i));
      task.query_y.push_back(static_cast<int>(label));
    }
  }
  return task;
}

}  // namespace

ClassificationTask sample_episode(const ConceptWorld& world, Modality modality,
                                  size_t n_way, size_t k_shot, ConceptSplit split,
                                  uint64_t stream_id) {
  const auto& pool = world.split(split);
  if (pool.size() < n_way) {
    throw ConfigError("sample_episode: split has " + std::to_string(pool.size()) +
                      " concepts, need " + std::to_string(n_way));
  }
  Rng rng(stream_id, kTagEpisode);
  const auto picks = rng.sample_without_replacement(pool.size(), n_way);
  std::vector<size_t> concepts;
  for (size_t p : picks) concepts.push_back(pool[p]);
  return fill_episode(world, modality, std::move(concepts), k_shot, rng);
}

ClassificationTask sample_episode_with_concepts(const ConceptWorld& world,
                                                Modality modality,
                                                const std::vector<size_t>& concepts,
                                                size_t k_shot, uint64_t stream_id) {
  for (size_t c : concepts)
    if (c >= world.cfg.num_concepts)
      throw ConfigError("sample_episode_with_concepts: bad concept id");
  Rng rng(stream_id, kTagEpisode);
  return fill_episode(world, modality, concepts, k_shot, rng);
}

AlignmentTask sample_alignment_task(const ConceptWorld& world, AlignMode mode,
                                    size_t size, uint64_t stream_id) {
  // Strong mode needs a second pair to supply negatives; weak sets may be
  // singletons because negatives come from the other sets.
  if (mode == AlignMode::kStrong && size < 2)
    throw ConfigError("sample_alignment_task: strong mode needs size >= 2");
  if (size < 1) throw ConfigError("sample_alignment_task: size must be >= 1");
  Rng rng(stream_id, kTagAlign);
  AlignmentTask task;
  task.mode = mode;

  const auto& pool = world.train_concepts;
  const size_t concepts_per_task = std::min(world.cfg.n_way, pool.size());
  const auto picks = rng.sample_without_replacement(pool.size(), concepts_per_task);
  std::vector<size_t> concepts;
  for (size_t p : picks) concepts.push_back(pool[p]);

  if (mode == AlignMode::kStrong) {
    const size_t n_train = size - size / 2;
    Mat latents(size, world.cfg.latent_dim);
    std::vector<size_t> pair_concepts(size);
    for (size_t i = 0; i < size; ++i) {
      const size_t c = concepts[rng.uniform_int(concepts.size())];
      pair_concepts[i] = c;
      const Mat z = world.sample_latents(c, 1, rng);
      std::copy(z.row(0), z.row(0) + z.cols, latents.row(i));
    }
    const Mat src = world.observe(latents, Modality::kSource);
    const Mat tgt = world.observe(latents, Modality::kTarget);

    const auto slice = [](const Mat& m, size_t begin, size_t end) {
      Mat out(end - begin, m.cols);
      std::copy(m.row(begin), m.row(begin) + (end - begin) * m.cols, out.data.begin());
      return out;
    };
    task.train_src = slice(src, 0, n_train);
    task.train_tgt = slice(tgt, 0, n_train);
    task.train_latents = slice(latents, 0, n_train);
    task.test_src = slice(src, n_train, size);
    task.test_tgt = slice(tgt, n_train, size);
    task.test_latents = slice(latents, n_train, size);
    task.train_concepts.assign(pair_concepts.begin(), pair_concepts.begin() + n_train);
    task.test_concepts.assign(pair_concepts.begin() + n_train, pair_concepts.end());
    return task;
  }

  // Weak mode: one set per concept; the two sides are independent latent
  // draws, so only the concept is shared.
  const size_t n_train_sets = concepts.size() - concepts.size() / 2;
  for (size_t si = 0; si < concepts.size(); ++si) {
    AlignmentTask::WeakSet set;
    set.concept_id = concepts[si];
    set.src = world.observe(world.sample_latents(set.concept_id, size, rng),
                            Modality::kSource);
    set.tgt = world.observe(world.sample_latents(set.concept_id, size, rng),
                            Modality::kTarget);
    if (si < n_train_sets)
      task.train_sets.push_back(std::move(set));
    else
      task.test_sets.push_back(std::move(set));
  }
  return task;
}

ClassificationTask corrupt_labels(const ClassificationTask& task, double rate,
                                  uint64_t stream_id) {
  if (rate < 0.0 || rate > 1.0)
    throw ConfigError("corrupt_labels: rate must lie in [0, 1]");
  if (task.n_way < 2) throw ConfigError("corrupt_labels: need n_way >= 2");
  ClassificationTask out = task;
  Rng rng(stream_id, kTagCorrupt);
  const auto corrupt = [&](std::vector<int>& labels) {
    for (auto& y : labels) {
      if (rng.uniform() > rate) continue;
      // Uniform over the other n_way - 1 labels.
      int repl = static_cast<int>(rng.uniform_int(task.n_way - 1));
      if (repl >= y) ++repl;
      y = repl;
    }
  };
  corrupt(out.support_y);
  corrupt(out.query_y);
  return out;
}

void save_concept_world(const ConceptWorld& world, const std::string& dir) {
  const auto save_mat = [&](const Mat& m, const std::string& path) {
    std::vector<std::string> header;
    for (size_t j = 0; j < m.cols; ++j) header.push_back("c" + std::to_string(j));
    CsvWriter w(header);
    for (size_t i = 0; i < m.rows; ++i) {
      std::vector<std::string> row;
      for (size_t j = 0; j < m.cols; ++j) row.push_back(format_double(m.at(i, j)));
      w.add_row(row);
    }
    w.save(path);
  };
  save_mat(world.centers, dir + "/centers.csv");
  save_mat(world.map_src, dir + "/map_src.csv");
  save_mat(world.map_tgt, dir + "/map_tgt.csv");

  CsvWriter w({"concept", "split"});
  const auto emit = [&](const std::vector<size_t>& ids, const std::string& name) {
    for (size_t c : ids) w.add_row({std::to_string(c), name});
  };
  emit(world.train_concepts, "meta_train");
  emit(world.val_concepts, "meta_val");
  emit(world.test_concepts, "meta_test");
  w.save(dir + "/splits.csv");
}

}  // namespace croma::synth
