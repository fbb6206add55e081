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

#include "croma/strategies.hpp"

#include "croma/error.hpp"
#include "croma/optim.hpp"
#include "croma/rng.hpp"

namespace croma::meta {

namespace {
constexpr uint64_t kTagTrain = 41;
constexpr uint64_t kTagProtocol = 42;
constexpr uint64_t kTagEvalConcepts = 43;
constexpr uint64_t kTagEvalEpisode = 44;
constexpr uint64_t kTagEvalNoise = 45;
constexpr uint64_t kTagUnlabeled = 46;
constexpr uint64_t kTagEpisodeNoise = 47;
constexpr uint64_t kTagDecoder = 48;
constexpr uint64_t kTagAdapter = 49;

uint64_t mix_in(uint64_t h, uint64_t v) {
  uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}
}  // namespace

AccessPolicy AccessPolicy::for_strategy(StrategyKind k) {
  AccessPolicy p;
  p.target_labels_in_meta_train = (k == StrategyKind::kOracleWithinModality);
  return p;
}

ClassificationTask WorldAccess::source_episode(size_t n_way, size_t k_shot,
                                               uint64_t stream_id) {
  auto ep = synth::sample_episode(world_, synth::Modality::kSource, n_way, k_shot,
                                  synth::ConceptSplit::kMetaTrain, stream_id);
  source_label_reads_ += ep.support_y.size() + ep.query_y.size();
  return ep;
}

ClassificationTask WorldAccess::target_episode(size_t n_way, size_t k_shot,
                                               synth::ConceptSplit split,
                                               uint64_t stream_id,
                                               double label_noise_rate) {
  if (phase_ == Phase::kMetaTrain && !policy_.target_labels_in_meta_train) {
    throw ConfigError(
        "data-access contract: this strategy may not read target-modality labels "
        "during meta-training");
  }
  auto ep = synth::sample_episode(world_, synth::Modality::kTarget, n_way, k_shot,
                                  split, stream_id);
  if (phase_ == Phase::kMetaTrain)
    target_label_reads_meta_train_ += ep.support_y.size() + ep.query_y.size();
  if (label_noise_rate > 0.0)
    ep = synth::corrupt_labels(ep, label_noise_rate,
                               derive_stream(stream_id, kTagEpisodeNoise));
  return ep;
}

Mat WorldAccess::target_unlabeled(size_t n, uint64_t stream_id) {
  target_unlabeled_reads_ += n;
  Rng rng(stream_id, kTagUnlabeled);
  const auto& pool = world_.train_concepts;
  Mat out(n, world_.cfg.target_dim);
  for (size_t i = 0; i < n; ++i) {
    const size_t c = pool[rng.uniform_int(pool.size())];
    const Mat z = world_.sample_latents(c, 1, rng);
    const Mat obs = world_.observe(z, synth::Modality::kTarget);
    std::copy(obs.row(0), obs.row(0) + obs.cols, out.row(i));
  }
  return out;
}

synth::AlignmentTask WorldAccess::alignment_task(synth::AlignMode mode, size_t size,
                                                 uint64_t stream_id) {
  ++alignment_task_reads_;
  return synth::sample_alignment_task(world_, mode, size, stream_id);
}

namespace {

// Reconstruction pretraining shared by the unsupervised baselines. One
// "task" is a batch of unlabeled target observations; the task loss is MSE
// reconstruction through the embedding.
struct ReconPair {
  MlpParams encoder;
  MlpParams decoder;
};

double recon_inner_train(ReconPair& pair, const Mat& batch, size_t steps, double lr) {
  OptState opt_e = OptState::adam(lr, pair.encoder);
  OptState opt_d = OptState::adam(lr, pair.decoder);
  double final_loss = 0.0;
  for (size_t s = 0; s < steps; ++s) {
    const align::EmbedTrace emb =
        align::embed_forward(pair.encoder, batch, true, "reconstruction input");
    const ForwardTrace dec = mlp_forward(pair.decoder, emb.embeddings);
    auto [loss, grad_out] = mse_loss(dec.output(), batch);
    final_loss = loss;
    const Gradients gdec = mlp_backward(pair.decoder, dec, grad_out);
    const MlpParams genc = align::embed_backward(pair.encoder, emb, gdec.input);
    opt_step(pair.decoder, gdec.params, opt_d);
    opt_step(pair.encoder, genc, opt_e);
  }
  return final_loss;
}

TrainedStrategy train_reconstruction(StrategyKind kind, WorldAccess& access,
                                     const MetaConfig& cfg, uint64_t seed) {
  const bool meta = kind == StrategyKind::kUnsupMetaReconstruct;
  MetaState st = init_meta_state(access.world(), cfg, seed);
  Rng dec_rng(derive_stream(seed, kTagDecoder));
  ReconPair meta_pair;
  meta_pair.encoder = st.e_tgt_meta;
  meta_pair.decoder =
      make_mlp({cfg.embed_dim, cfg.encoder_hidden, access.world().cfg.target_dim},
               Activation::kTanh, Activation::kIdentity, dec_rng);

  TrainedStrategy out;
  out.kind = kind;
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const uint64_t iter_stream = derive_stream(seed, 1000 + it);
    const Mat batch =
        access.target_unlabeled(cfg.align_task_size, derive_stream(iter_stream, 1));
    ReconPair adapted = meta_pair;
    const double loss = recon_inner_train(adapted, batch, cfg.inner_steps, cfg.align_lr);
    const double eps = meta ? cfg.meta_lr : 1.0;
    meta_pair.encoder = reptile_update(meta_pair.encoder, adapted.encoder, eps);
    meta_pair.decoder = reptile_update(meta_pair.decoder, adapted.decoder, eps);
    out.log.push_back({it, loss, 0.0});
  }
  out.target_encoder = meta_pair.encoder;
  out.phi_trunk = st.phi_meta;  // classifier stays at initialization
  return out;
}

TrainedStrategy train_oracle(WorldAccess& access, const MetaConfig& cfg, uint64_t seed,
                             double label_noise) {
  MetaState st = init_meta_state(access.world(), cfg, seed);
  TrainedStrategy out;
  out.kind = StrategyKind::kOracleWithinModality;
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const uint64_t iter_stream = derive_stream(seed, 1000 + it);
    const auto episode = access.target_episode(cfg.source_n_way, cfg.source_k_shot,
                                               synth::ConceptSplit::kMetaTrain,
                                               derive_stream(iter_stream, 1),
                                               label_noise);
    const MlpParams head = make_episode_head(cfg.classifier_hidden, episode.n_way,
                                             derive_stream(iter_stream, 2));
    // Within-modality Reptile adapts the whole model on the labeled episode.
    const EpisodeAdaptResult adapted =
        adapt_episode(st.e_tgt_meta, st.phi_meta, head, episode, cfg.inner_steps,
                      cfg.classifier_lr, /*adapt_encoder=*/true);
    st.e_tgt_meta = reptile_update(st.e_tgt_meta, adapted.encoder, cfg.meta_lr);
    st.phi_meta = reptile_update(
        st.phi_meta, classifier_trunk(adapted.classifier_net, st.phi_meta.layers.size()),
        cfg.meta_lr);
    out.log.push_back({it, 0.0, adapted.final_loss});
  }
  out.target_encoder = st.e_tgt_meta;
  out.phi_trunk = st.phi_meta;
  return out;
}

// Shared-encoder baselines: one encoder body for both modalities; the target
// modality enters through a linear layer mapping its input dimension to the
// source dimension.
struct SharedParts {
  MlpParams adapter;  // target_dim -> source_dim, linear
  MlpParams body;     // source_dim -> hidden -> embed
  MlpParams phi;      // classifier trunk

  MlpParams target_encoder() const {
    MlpParams full = adapter;
    for (const auto& l : body.layers) full.layers.push_back(l);
    return full;
  }
};

TrainedStrategy train_shared(StrategyKind kind, WorldAccess& access,
                             const MetaConfig& cfg, uint64_t seed) {
  const bool with_align = kind == StrategyKind::kSharedEncoderAlign;
  const auto& wcfg = access.world().cfg;

  MetaState st = init_meta_state(access.world(), cfg, seed);
  Rng arng(derive_stream(seed, kTagAdapter));
  SharedParts parts;
  parts.adapter = make_mlp({wcfg.target_dim, wcfg.source_dim}, Activation::kIdentity,
                           Activation::kIdentity, arng);
  parts.body = st.e_src_meta;
  parts.phi = st.phi_meta;

  TrainedStrategy out;
  out.kind = kind;
  for (size_t it = 0; it < cfg.iterations; ++it) {
    const uint64_t iter_stream = derive_stream(seed, 1000 + it);
    TrainingLogRow row;
    row.iteration = it;

    if (with_align) {
      // Contrastive alignment through the shared body: both sides produce
      // gradients for the body, which are summed before the update.
      const auto task = access.alignment_task(synth::AlignMode::kStrong,
                                              cfg.align_task_size,
                                              derive_stream(iter_stream, 1));
      MlpParams adapter = parts.adapter;
      MlpParams body = parts.body;
      OptState opt_a = OptState::adam(cfg.align_lr, adapter);
      OptState opt_b = OptState::adam(cfg.align_lr, body);
      for (size_t s = 0; s < cfg.inner_steps; ++s) {
        const uint64_t step_stream = derive_stream(iter_stream, 100 + s);
        const auto negs =
            align::sample_negatives(task, cfg.loss.negatives_per_pair, step_stream);
        MlpParams tgt_full = adapter;
        for (const auto& l : body.layers) tgt_full.layers.push_back(l);
        const auto r = align::strong_align_loss(body, tgt_full, task.train_src,
                                                task.train_tgt, negs, cfg.loss);
        row.align_loss = r.loss;
        MlpParams body_grad = r.grad_src;
        MlpParams adapter_grad;
        adapter_grad.layers.assign(r.grad_tgt.layers.begin(),
                                   r.grad_tgt.layers.begin() + 1);
        for (size_t li = 0; li < body.layers.size(); ++li) {
          body_grad.layers[li].weight += r.grad_tgt.layers[li + 1].weight;
          body_grad.layers[li].bias += r.grad_tgt.layers[li + 1].bias;
        }
        opt_step(adapter, adapter_grad, opt_a);
        opt_step(body, body_grad, opt_b);
      }
      const double eps = cfg.encoder_reptile ? cfg.meta_lr : 1.0;
      parts.adapter = reptile_update(parts.adapter, adapter, eps);
      parts.body = reptile_update(parts.body, body, eps);
    }

    const auto episode = access.source_episode(cfg.source_n_way, cfg.source_k_shot,
                                               derive_stream(iter_stream, 2));
    const MlpParams head = make_episode_head(cfg.classifier_hidden, episode.n_way,
                                             derive_stream(iter_stream, 3));
    const EpisodeAdaptResult adapted =
        adapt_episode(parts.body, parts.phi, head, episode, cfg.inner_steps,
                      cfg.classifier_lr, /*adapt_encoder=*/true);
    row.cls_loss = adapted.final_loss;
    parts.body = reptile_update(parts.body, adapted.encoder, cfg.meta_lr);
    parts.phi = reptile_update(
        parts.phi, classifier_trunk(adapted.classifier_net, parts.phi.layers.size()),
        cfg.meta_lr);
    out.log.push_back(row);
  }
  out.target_encoder = parts.target_encoder();
  out.phi_trunk = parts.phi;
  return out;
}

}  // namespace

TrainedStrategy train_strategy(StrategyKind kind, WorldAccess& access,
                               const MetaConfig& cfg, uint64_t seed,
                               double meta_train_label_noise) {
  access.set_phase(Phase::kMetaTrain);
  switch (kind) {
    case StrategyKind::kCroma:
    case StrategyKind::kAlignThenClassify:
    case StrategyKind::kAlignThenMetaClassify: {
      MetaConfig c = cfg;
      c.encoder_reptile = kind == StrategyKind::kCroma;
      c.classifier_reptile = kind != StrategyKind::kAlignThenClassify;
      const MetaTrainResult r = croma_meta_train(access, c, seed);
      TrainedStrategy out;
      out.kind = kind;
      out.target_encoder = r.state.e_tgt_meta;
      out.phi_trunk = r.state.phi_meta;
      out.log = r.log;
      return out;
    }
    case StrategyKind::kPretrainFinetune:
    case StrategyKind::kUnsupMetaReconstruct:
      return train_reconstruction(kind, access, cfg, seed);
    case StrategyKind::kSharedEncoder:
    case StrategyKind::kSharedEncoderAlign:
      return train_shared(kind, access, cfg, seed);
    case StrategyKind::kOracleWithinModality:
      return train_oracle(access, cfg, seed, meta_train_label_noise);
  }
  throw ConfigError("train_strategy: unknown strategy kind");
}

EvalRun evaluate_strategy(const TrainedStrategy& trained, WorldAccess& access,
                          const std::vector<size_t>& k_grid, size_t n_eval_tasks,
                          size_t n_way, const MetaConfig& cfg, uint64_t protocol_seed,
                          double support_noise_rate) {
  access.set_phase(Phase::kMetaTest);
  const auto& world = access.world();
  EvalRun run;
  for (size_t t = 0; t < n_eval_tasks; ++t) {
    const auto concepts = synth::draw_concepts(
        world, synth::ConceptSplit::kMetaTest, n_way,
        derive_stream(protocol_seed, kTagEvalConcepts + 101 * t));
    uint64_t fp = mix_in(0x6576616cULL, t);
    for (size_t c : concepts) fp = mix_in(fp, c);
    run.task_fingerprints.push_back(fp);

    for (size_t k : k_grid) {
      const uint64_t ep_stream =
          derive_stream(protocol_seed, kTagEvalEpisode + 977 * t + k);
      auto episode = synth::sample_episode_with_concepts(
          world, synth::Modality::kTarget, concepts, k, ep_stream);
      if (support_noise_rate > 0.0) {
        // Noise studies corrupt the labels the learner sees, not the query
        // labels accuracy is scored against.
        auto corrupted = synth::corrupt_labels(episode, support_noise_rate,
                                               derive_stream(ep_stream, kTagEvalNoise));
        corrupted.query_y = episode.query_y;
        episode = std::move(corrupted);
      }
      EpisodeResult res = adapt_and_score(trained.target_encoder, trained.phi_trunk,
                                          episode, cfg, ep_stream);
      res.strategy = trained.kind;
      res.task_index = t;
      run.results.push_back(res);
    }
  }
  return run;
}

EvalRun run_strategy(StrategyKind kind, const ConceptWorld& world,
                     const std::vector<size_t>& k_grid, size_t n_eval_tasks,
                     size_t n_way, const MetaConfig& cfg, uint64_t seed) {
  WorldAccess access(world, AccessPolicy::for_strategy(kind));
  const TrainedStrategy trained =
      train_strategy(kind, access, cfg, derive_stream(seed, kTagTrain));
  return evaluate_strategy(trained, access, k_grid, n_eval_tasks, n_way, cfg,
                           derive_stream(seed, kTagProtocol));
}

}  // namespace croma::meta
