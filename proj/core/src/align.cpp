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

#include "croma/align.hpp"

#include <cmath>
#include <sstream>

#include "croma/error.hpp"
#include "croma/rng.hpp"

namespace croma::align {

namespace {
constexpr uint64_t kTagNegatives = 21;
constexpr uint64_t kTagWeakPositives = 22;
constexpr uint64_t kTagInnerStep = 23;
}  // namespace

void AlignLossConfig::validate() const {
  if (margin < 0.0) throw ConfigError("align loss: margin must be >= 0");
  if (negatives_per_pair < 1)
    throw ConfigError("align loss: negatives_per_pair must be >= 1");
  if (weak_pairs_per_set < 1)
    throw ConfigError("align loss: weak_pairs_per_set must be >= 1");
}

Negatives sample_negatives(const AlignmentTask& task, size_t per_pair,
                           uint64_t stream_id) {
  if (task.mode != synth::AlignMode::kStrong)
    throw ConfigError("sample_negatives: strong overload called on a weak task");
  const size_t n = task.train_tgt.rows;
  if (n < 2) throw ConfigError("sample_negatives: need at least 2 pairs");
  Rng rng(stream_id, kTagNegatives);
  Negatives out;
  out.idx.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.idx[i].reserve(per_pair);
    for (size_t j = 0; j < per_pair; ++j) {
      // Uniform over the n-1 targets that are not pair i's partner.
      size_t pick = static_cast<size_t>(rng.uniform_int(n - 1));
      if (pick >= i) ++pick;
      out.idx[i].push_back(pick);
    }
  }
  return out;
}

WeakPositives sample_weak_positives(const AlignmentTask& task, size_t per_set,
                                    uint64_t stream_id) {
  if (task.mode != synth::AlignMode::kWeak)
    throw ConfigError("sample_weak_positives: task is not weak");
  if (task.train_sets.empty()) throw ConfigError("sample_weak_positives: no train sets");
  Rng rng(stream_id, kTagWeakPositives);
  WeakPositives out;
  for (size_t si = 0; si < task.train_sets.size(); ++si) {
    const auto& set = task.train_sets[si];
    if (set.src.rows == 0 || set.tgt.rows == 0)
      throw ConfigError("sample_weak_positives: empty weak set side");
    for (size_t k = 0; k < per_set; ++k) {
      WeakPositives::Item it;
      it.set = si;
      it.src_row = static_cast<size_t>(rng.uniform_int(set.src.rows));
      it.tgt_row = static_cast<size_t>(rng.uniform_int(set.tgt.rows));
      out.items.push_back(it);
    }
  }
  return out;
}

std::pair<Mat, std::vector<size_t>> weak_target_pool(const AlignmentTask& task) {
  size_t total = 0;
  for (const auto& s : task.train_sets) total += s.tgt.rows;
  if (total == 0) throw ConfigError("weak_target_pool: no target samples");
  Mat pool(total, task.train_sets.front().tgt.cols);
  std::vector<size_t> set_of_row(total);
  size_t r = 0;
  for (size_t si = 0; si < task.train_sets.size(); ++si) {
    const auto& s = task.train_sets[si];
    for (size_t i = 0; i < s.tgt.rows; ++i, ++r) {
      std::copy(s.tgt.row(i), s.tgt.row(i) + s.tgt.cols, pool.row(r));
      set_of_row[r] = si;
    }
  }
  return {std::move(pool), std::move(set_of_row)};
}

Negatives sample_negatives(const AlignmentTask& task, const WeakPositives& positives,
                           size_t per_pair, uint64_t stream_id) {
  if (task.mode != synth::AlignMode::kWeak)
    throw ConfigError("sample_negatives: weak overload called on a strong task");
  if (task.train_sets.size() < 2)
    throw ConfigError("sample_negatives: need at least 2 weak sets");
  const auto [pool, set_of_row] = weak_target_pool(task);

  // Eligible rows per set, precomputed once.
  std::vector<std::vector<size_t>> eligible(task.train_sets.size());
  for (size_t si = 0; si < task.train_sets.size(); ++si) {
    for (size_t r = 0; r < pool.rows; ++r)
      if (set_of_row[r] != si) eligible[si].push_back(r);
    if (eligible[si].empty())
      throw ConfigError("sample_negatives: no negatives available outside set " +
                        std::to_string(si));
  }

  Rng rng(stream_id, kTagNegatives);
  Negatives out;
  out.idx.resize(positives.items.size());
  for (size_t i = 0; i < positives.items.size(); ++i) {
    const auto& el = eligible[positives.items[i].set];
    out.idx[i].reserve(per_pair);
    for (size_t j = 0; j < per_pair; ++j)
      out.idx[i].push_back(el[rng.uniform_int(el.size())]);
  }
  return out;
}

EmbedTrace embed_forward(const MlpParams& encoder, const Mat& x, bool normalize,
                         const char* who) {
  EmbedTrace b;
  b.trace = mlp_forward(encoder, x);
  b.embeddings = b.trace.output();
  check_finite(b.embeddings, std::string(who) + " embeddings");
  b.is_normalized = normalize;
  if (!normalize) return b;
  b.norms.resize(b.embeddings.rows);
  for (size_t i = 0; i < b.embeddings.rows; ++i) {
    const double n = row_norm(b.trace.output(), i);
    if (n < 1e-300) {
      std::ostringstream os;
      os << who << ": zero-norm embedding for sample " << i;
      throw NumericError(os.str());
    }
    b.norms[i] = n;
    double* row = b.embeddings.row(i);
    for (size_t j = 0; j < b.embeddings.cols; ++j) row[j] /= n;
  }
  return b;
}

namespace {

// Pull the gradient wrt normalized rows back to the raw encoder output:
// y = x / |x|  =>  dL/dx = (g - y (y . g)) / |x|.
Mat normalization_backward(const EmbedTrace& b, const Mat& grad_normalized) {
  if (!b.is_normalized) return grad_normalized;
  Mat g(grad_normalized.rows, grad_normalized.cols);
  for (size_t i = 0; i < g.rows; ++i) {
    const double* y = b.embeddings.row(i);
    const double* gn = grad_normalized.row(i);
    double yg = 0.0;
    for (size_t j = 0; j < g.cols; ++j) yg += y[j] * gn[j];
    double* out = g.row(i);
    for (size_t j = 0; j < g.cols; ++j) out[j] = (gn[j] - y[j] * yg) / b.norms[i];
  }
  return g;
}

}  // namespace

MlpParams embed_backward(const MlpParams& encoder, const EmbedTrace& t,
                         const Mat& grad_embeddings) {
  const Mat raw_grad = normalization_backward(t, grad_embeddings);
  return mlp_backward(encoder, t.trace, raw_grad).params;
}

namespace {

// Shared core: positives reference (src row i, tgt row pos_idx[i]); negatives
// reference rows of the same target batch.
AlignLossResult contrastive_core(const MlpParams& e_src, const MlpParams& e_tgt,
                                 const Mat& src, const Mat& tgt,
                                 const std::vector<size_t>& pos_idx,
                                 const Negatives& negatives,
                                 const AlignLossConfig& cfg) {
  cfg.validate();
  if (e_src.output_dim() != e_tgt.output_dim())
    throw ConfigError("align loss: encoder embedding dims differ");
  if (pos_idx.size() != src.rows)
    throw ConfigError("align loss: one positive target required per source row");
  if (negatives.idx.size() != src.rows)
    throw ConfigError("align loss: negatives do not match positives");

  const size_t n_pos = src.rows;
  EmbedTrace bs = embed_forward(e_src, src, cfg.normalize_embeddings, "source");
  EmbedTrace bt = embed_forward(e_tgt, tgt, cfg.normalize_embeddings, "target");

  const double inv_n = 1.0 / static_cast<double>(n_pos);
  double loss = 0.0;
  Mat gs(bs.embeddings.rows, bs.embeddings.cols);
  Mat gt(bt.embeddings.rows, bt.embeddings.cols);

  const auto add_row = [](Mat& m, size_t r, const Mat& other, size_t ro, double scale) {
    double* dst = m.row(r);
    const double* srcrow = other.row(ro);
    for (size_t j = 0; j < m.cols; ++j) dst[j] += scale * srcrow[j];
  };

  for (size_t i = 0; i < n_pos; ++i) {
    const size_t ti = pos_idx[i];
    const double pos = dot_rows(bs.embeddings, i, bt.embeddings, ti);
    if (cfg.variant == AlignVariant::kNce) {
      loss += -pos * inv_n;
      add_row(gs, i, bt.embeddings, ti, -inv_n);
      add_row(gt, ti, bs.embeddings, i, -inv_n);
      for (size_t nj : negatives.idx[i]) {
        const double neg = dot_rows(bs.embeddings, i, bt.embeddings, nj);
        loss += neg * inv_n;
        add_row(gs, i, bt.embeddings, nj, inv_n);
        add_row(gt, nj, bs.embeddings, i, inv_n);
      }
    } else {
      for (size_t nj : negatives.idx[i]) {
        const double neg = dot_rows(bs.embeddings, i, bt.embeddings, nj);
        const double h = cfg.margin - pos + neg;
        if (h <= 0.0) continue;
        loss += h * inv_n;
        add_row(gs, i, bt.embeddings, ti, -inv_n);
        add_row(gt, ti, bs.embeddings, i, -inv_n);
        add_row(gs, i, bt.embeddings, nj, inv_n);
        add_row(gt, nj, bs.embeddings, i, inv_n);
      }
    }
  }
  if (!std::isfinite(loss)) throw NumericError("align loss: non-finite loss value");

  AlignLossResult res;
  res.loss = loss;
  res.grad_src = embed_backward(e_src, bs, gs);
  res.grad_tgt = embed_backward(e_tgt, bt, gt);
  return res;
}

}  // namespace

Mat embed_normalized(const MlpParams& encoder, const Mat& x) {
  return embed_forward(encoder, x, true, "embed").embeddings;
}

AlignLossResult strong_align_loss(const MlpParams& e_src, const MlpParams& e_tgt,
                                  const Mat& src, const Mat& tgt,
                                  const Negatives& negatives,
                                  const AlignLossConfig& cfg) {
  if (src.rows != tgt.rows) throw ConfigError("strong_align_loss: pair count mismatch");
  std::vector<size_t> pos_idx(src.rows);
  for (size_t i = 0; i < src.rows; ++i) pos_idx[i] = i;
  return contrastive_core(e_src, e_tgt, src, tgt, pos_idx, negatives, cfg);
}

AlignLossResult weak_align_loss(const MlpParams& e_src, const MlpParams& e_tgt,
                                const AlignmentTask& task,
                                const WeakPositives& positives,
                                const Negatives& negatives,
                                const AlignLossConfig& cfg) {
  if (task.mode != synth::AlignMode::kWeak)
    throw ConfigError("weak_align_loss: task is not weak");
  const auto [pool, set_of_row] = weak_target_pool(task);

  // Row offset of each set inside the pooled target matrix.
  std::vector<size_t> offset(task.train_sets.size(), 0);
  for (size_t si = 1; si < task.train_sets.size(); ++si)
    offset[si] = offset[si - 1] + task.train_sets[si - 1].tgt.rows;

  Mat src(positives.items.size(), task.train_sets.front().src.cols);
  std::vector<size_t> pos_idx(positives.items.size());
  for (size_t i = 0; i < positives.items.size(); ++i) {
    const auto& it = positives.items[i];
    if (it.set >= task.train_sets.size())
      throw ConfigError("weak_align_loss: positive references a missing set");
    const auto& s = task.train_sets[it.set];
    std::copy(s.src.row(it.src_row), s.src.row(it.src_row) + s.src.cols, src.row(i));
    pos_idx[i] = offset[it.set] + it.tgt_row;
  }
  return contrastive_core(e_src, e_tgt, src, pool, pos_idx, negatives, cfg);
}

namespace {

AlignLossResult loss_on_train_split(const MlpParams& e_src, const MlpParams& e_tgt,
                                    const AlignmentTask& task,
                                    const AlignLossConfig& cfg, uint64_t stream_id) {
  if (task.mode == synth::AlignMode::kStrong) {
    const Negatives negs = sample_negatives(task, cfg.negatives_per_pair, stream_id);
    return strong_align_loss(e_src, e_tgt, task.train_src, task.train_tgt, negs, cfg);
  }
  const WeakPositives pos =
      sample_weak_positives(task, cfg.weak_pairs_per_set, stream_id);
  const Negatives negs = sample_negatives(task, pos, cfg.negatives_per_pair, stream_id);
  return weak_align_loss(e_src, e_tgt, task, pos, negs, cfg);
}

}  // namespace

double alignment_loss_on_task(const MlpParams& e_src, const MlpParams& e_tgt,
                              const AlignmentTask& task, const AlignLossConfig& cfg,
                              uint64_t stream_id) {
  return loss_on_train_split(e_src, e_tgt, task, cfg, stream_id).loss;
}

InnerTrainResult align_inner_train(const MlpParams& e_src, const MlpParams& e_tgt,
                                   const AlignmentTask& task,
                                   const AlignLossConfig& loss_cfg,
                                   const InnerTrainConfig& train_cfg,
                                   uint64_t stream_id) {
  if (train_cfg.steps < 1) throw ConfigError("align_inner_train: steps must be >= 1");
  InnerTrainResult res;
  res.e_src = e_src;
  res.e_tgt = e_tgt;
  OptState opt_s = train_cfg.optimizer == OptKind::kAdam
                       ? OptState::adam(train_cfg.lr, res.e_src)
                       : OptState::sgd(train_cfg.lr);
  OptState opt_t = train_cfg.optimizer == OptKind::kAdam
                       ? OptState::adam(train_cfg.lr, res.e_tgt)
                       : OptState::sgd(train_cfg.lr);
  for (size_t step = 0; step < train_cfg.steps; ++step) {
    const uint64_t step_stream = derive_stream(stream_id, kTagInnerStep + step);
    AlignLossResult r;
    try {
      r = loss_on_train_split(res.e_src, res.e_tgt, task, loss_cfg, step_stream);
    } catch (const NumericError& e) {
      throw NumericError("align_inner_train: step " + std::to_string(step) + ": " +
                         e.what());
    }
    res.final_loss = r.loss;
    opt_step(res.e_src, r.grad_src, opt_s);
    opt_step(res.e_tgt, r.grad_tgt, opt_t);
  }
  return res;
}

}  // namespace croma::align
