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

#include "croma/metalearn.hpp"

#include <cstring>
#include <filesystem>

#include "croma/csv.hpp"
#include "croma/error.hpp"
#include "croma/optim.hpp"
#include "croma/rng.hpp"
#include "croma/strategies.hpp"

namespace croma::meta {

namespace {
constexpr uint64_t kTagInit = 31;
constexpr uint64_t kTagAlignTask = 32;
constexpr uint64_t kTagAlignInner = 33;
constexpr uint64_t kTagSourceEpisode = 34;
constexpr uint64_t kTagClsInner = 35;
constexpr uint64_t kTagHead = 36;

uint64_t mix_in(uint64_t h, uint64_t v) {
  uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}
}  // namespace

uint64_t MetaState::checksum() const {
  uint64_t h = 0x63726f6d61ULL;
  for (const MlpParams* p : {&e_src_meta, &e_tgt_meta, &phi_meta}) {
    for (const auto& l : p->layers) {
      for (const Mat* m : {&l.weight, &l.bias}) {
        h = mix_in(h, m->rows);
        h = mix_in(h, m->cols);
        for (double x : m->data) {
          uint64_t bits;
          std::memcpy(&bits, &x, sizeof(bits));
          h = mix_in(h, bits);
        }
      }
    }
  }
  return mix_in(h, iteration);
}

void MetaConfig::validate() const {
  if (inner_steps < 1) throw ConfigError("meta config: inner_steps must be >= 1");
  if (meta_lr < 0.0 || meta_lr > 1.0)
    throw ConfigError("meta config: meta_lr must lie in [0, 1]");
  if (align_lr < 0.0 || classifier_lr < 0.0)
    throw ConfigError("meta config: learning rates must be >= 0");
  if (embed_dim < 1 || encoder_hidden < 1 || classifier_hidden < 1)
    throw ConfigError("meta config: layer sizes must be >= 1");
  if (align_task_size < 4)
    throw ConfigError("meta config: align_task_size must be >= 4 so the train split has negatives");
  loss.validate();
}

MlpParams reptile_update(const MlpParams& meta, const MlpParams& adapted, double eps) {
  if (eps < 0.0 || eps > 1.0) throw ConfigError("reptile_update: eps must lie in [0, 1]");
  if (meta.layers.size() != adapted.layers.size())
    throw ConfigError("reptile_update: layer count mismatch");
  // Literal delta form: meta + eps * (adapted - meta). With adapted == meta
  // the delta is exactly zero, so the update is an exact fixed point.
  MlpParams delta = adapted;
  axpy(delta, meta, -1.0);
  MlpParams out = meta;
  axpy(out, delta, eps);
  return out;
}

MetaState init_meta_state(const ConceptWorld& world, const MetaConfig& cfg,
                          uint64_t seed) {
  cfg.validate();
  Rng rng(seed, kTagInit);
  MetaState s;
  s.e_src_meta = make_mlp({world.cfg.source_dim, cfg.encoder_hidden, cfg.embed_dim},
                          Activation::kTanh, Activation::kIdentity, rng);
  s.e_tgt_meta = make_mlp({world.cfg.target_dim, cfg.encoder_hidden, cfg.embed_dim},
                          Activation::kTanh, Activation::kIdentity, rng);
  s.phi_meta = make_mlp({cfg.embed_dim, cfg.classifier_hidden}, Activation::kReLU,
                        Activation::kReLU, rng);
  return s;
}

MlpParams make_episode_head(size_t hidden, size_t n_way, uint64_t stream_id) {
  Rng rng(stream_id);
  return make_mlp({hidden, n_way}, Activation::kIdentity, Activation::kIdentity, rng);
}

EpisodeAdaptResult adapt_episode(const MlpParams& encoder, const MlpParams& trunk,
                                 const MlpParams& head,
                                 const ClassificationTask& episode, size_t steps,
                                 double lr, bool adapt_encoder) {
  EpisodeAdaptResult r;
  r.encoder = encoder;
  r.classifier_net = trunk;
  for (const auto& l : head.layers) r.classifier_net.layers.push_back(l);

  OptState opt_net = OptState::adam(lr, r.classifier_net);
  OptState opt_enc = OptState::adam(lr, r.encoder);
  for (size_t step = 0; step < steps; ++step) {
    const align::EmbedTrace emb =
        align::embed_forward(r.encoder, episode.support_x, true, "classifier input");
    const ForwardTrace fwd = mlp_forward(r.classifier_net, emb.embeddings);
    auto [loss, grad_logits] = softmax_cross_entropy(fwd.output(), episode.support_y);
    r.final_loss = loss;
    const Gradients gnet = mlp_backward(r.classifier_net, fwd, grad_logits);
    if (adapt_encoder) {
      const MlpParams genc = align::embed_backward(r.encoder, emb, gnet.input);
      opt_step(r.encoder, genc, opt_enc);
    }
    opt_step(r.classifier_net, gnet.params, opt_net);
  }
  return r;
}

MlpParams classifier_trunk(const MlpParams& net, size_t trunk_layers) {
  if (trunk_layers > net.layers.size())
    throw ConfigError("classifier_trunk: not enough layers");
  MlpParams t;
  t.layers.assign(net.layers.begin(), net.layers.begin() + trunk_layers);
  return t;
}

double score_episode(const MlpParams& encoder, const MlpParams& classifier_net,
                     const ClassificationTask& episode) {
  const Mat emb = align::embed_normalized(encoder, episode.query_x);
  const Mat logits = mlp_forward(classifier_net, emb).output();
  size_t correct = 0;
  for (size_t i = 0; i < logits.rows; ++i) {
    const double* row = logits.row(i);
    size_t best = 0;
    for (size_t j = 1; j < logits.cols; ++j)
      if (row[j] > row[best]) best = j;  // ties keep the lowest index
    if (static_cast<int>(best) == episode.query_y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

MetaTrainResult croma_meta_train(WorldAccess& world, const MetaConfig& cfg,
                                 uint64_t seed) {
  cfg.validate();
  MetaTrainResult out;
  out.state = init_meta_state(world.world(), cfg, seed);
  MetaState& st = out.state;

  const double enc_eps = cfg.encoder_reptile ? cfg.meta_lr : 1.0;
  const double cls_eps = cfg.classifier_reptile ? cfg.meta_lr : 1.0;

  align::InnerTrainConfig inner;
  inner.steps = cfg.inner_steps;
  inner.lr = cfg.align_lr;

  for (size_t it = 0; it < cfg.iterations; ++it) {
    const uint64_t iter_stream = derive_stream(seed, 1000 + it);
    TrainingLogRow row;
    row.iteration = it;

    // Alignment task: adapt encoder copies, then the meta update.
    const auto align_task = world.alignment_task(
        cfg.align_mode, cfg.align_task_size, derive_stream(iter_stream, kTagAlignTask));
    align::InnerTrainResult adapted;
    try {
      adapted = align::align_inner_train(st.e_src_meta, st.e_tgt_meta, align_task,
                                         cfg.loss, inner,
                                         derive_stream(iter_stream, kTagAlignInner));
    } catch (const NumericError& e) {
      throw NumericError("croma_meta_train: iteration " + std::to_string(it) + ": " +
                         e.what());
    }
    row.align_loss = adapted.final_loss;
    st.e_src_meta = reptile_update(st.e_src_meta, adapted.e_src, enc_eps);
    st.e_tgt_meta = reptile_update(st.e_tgt_meta, adapted.e_tgt, enc_eps);

    // Source classification task: adapt a classifier copy with a fresh
    // episode head, then the meta update on the trunk only.
    const auto episode = world.source_episode(
        cfg.source_n_way, cfg.source_k_shot, derive_stream(iter_stream, kTagSourceEpisode));
    const MlpParams head = make_episode_head(cfg.classifier_hidden, cfg.source_n_way,
                                             derive_stream(iter_stream, kTagHead));
    const EpisodeAdaptResult cls = adapt_episode(st.e_src_meta, st.phi_meta, head,
                                                 episode, cfg.inner_steps,
                                                 cfg.classifier_lr,
                                                 /*adapt_encoder=*/false);
    row.cls_loss = cls.final_loss;
    st.phi_meta = reptile_update(
        st.phi_meta, classifier_trunk(cls.classifier_net, st.phi_meta.layers.size()),
        cls_eps);

    st.iteration = it + 1;
    out.log.push_back(row);
  }
  return out;
}

MetaTrainResult croma_meta_train(const ConceptWorld& world, const MetaConfig& cfg,
                                 uint64_t seed) {
  WorldAccess access(world, AccessPolicy{});
  return croma_meta_train(access, cfg, seed);
}

EpisodeResult adapt_and_score(const MlpParams& target_encoder,
                              const MlpParams& phi_trunk,
                              const ClassificationTask& episode,
                              const MetaConfig& cfg, uint64_t stream_id) {
  if (episode.modality != synth::Modality::kTarget)
    throw ConfigError("meta_test: episode must be target-modality");
  if (episode.support_y.size() != episode.n_way * episode.k_shot)
    throw ConfigError("meta_test: support set size does not match n_way * k_shot");

  const MlpParams head = make_episode_head(cfg.classifier_hidden, episode.n_way,
                                           derive_stream(stream_id, kTagHead));
  const EpisodeAdaptResult adapted =
      adapt_episode(target_encoder, phi_trunk, head, episode, cfg.test_adapt_steps,
                    cfg.classifier_lr, cfg.test_adapt_encoder);

  EpisodeResult r;
  r.k_shot = episode.k_shot;
  r.adapt_steps = cfg.test_adapt_steps;
  r.stream_id = stream_id;
  r.accuracy = score_episode(adapted.encoder, adapted.classifier_net, episode);
  return r;
}

EpisodeResult meta_test(const MetaState& state, const ClassificationTask& episode,
                        const MetaConfig& cfg, uint64_t stream_id) {
  return adapt_and_score(state.e_tgt_meta, state.phi_meta, episode, cfg, stream_id);
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kCroma: return "croma";
    case StrategyKind::kAlignThenClassify: return "align_classify";
    case StrategyKind::kAlignThenMetaClassify: return "align_meta_classify";
    case StrategyKind::kPretrainFinetune: return "pretrain_finetune";
    case StrategyKind::kUnsupMetaReconstruct: return "unsup_meta_reconstruct";
    case StrategyKind::kSharedEncoder: return "shared_encoder";
    case StrategyKind::kSharedEncoderAlign: return "shared_encoder_align";
    case StrategyKind::kOracleWithinModality: return "oracle_within_modality";
  }
  throw ConfigError("unknown strategy kind");
}

StrategyKind strategy_from_string(const std::string& name) {
  for (StrategyKind k :
       {StrategyKind::kCroma, StrategyKind::kAlignThenClassify,
        StrategyKind::kAlignThenMetaClassify, StrategyKind::kPretrainFinetune,
        StrategyKind::kUnsupMetaReconstruct, StrategyKind::kSharedEncoder,
        StrategyKind::kSharedEncoderAlign, StrategyKind::kOracleWithinModality}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown strategy '" + name + "'");
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kReLU: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  throw ConfigError("unknown activation");
}

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::kReLU;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw IoError("unknown activation '" + s + "' in meta state manifest");
}

}  // namespace

void save_meta_state(const MetaState& state, const std::string& dir) {
  std::filesystem::create_directories(dir);
  CsvWriter manifest({"component", "layer", "in_dim", "out_dim", "activation"});
  CsvWriter weights({"component", "layer", "field", "index", "value"});
  const auto emit = [&](const std::string& name, const MlpParams& p) {
    for (size_t li = 0; li < p.layers.size(); ++li) {
      const auto& l = p.layers[li];
      manifest.add_row({name, std::to_string(li), std::to_string(l.weight.cols),
                        std::to_string(l.weight.rows), activation_name(l.activation)});
      for (size_t i = 0; i < l.weight.data.size(); ++i)
        weights.add_row({name, std::to_string(li), "weight", std::to_string(i),
                         format_double(l.weight.data[i])});
      for (size_t i = 0; i < l.bias.data.size(); ++i)
        weights.add_row({name, std::to_string(li), "bias", std::to_string(i),
                         format_double(l.bias.data[i])});
    }
  };
  emit("e_src", state.e_src_meta);
  emit("e_tgt", state.e_tgt_meta);
  emit("phi", state.phi_meta);
  manifest.add_row({"iteration", std::to_string(state.iteration), "0", "0", "identity"});
  manifest.save(dir + "/manifest.csv");
  weights.save(dir + "/weights.csv");
}

MetaState load_meta_state(const std::string& dir) {
  const CsvTable manifest = read_csv(dir + "/manifest.csv");
  const CsvTable weights = read_csv(dir + "/weights.csv");
  MetaState st;
  const auto part = [&](const std::string& name) -> MlpParams& {
    if (name == "e_src") return st.e_src_meta;
    if (name == "e_tgt") return st.e_tgt_meta;
    if (name == "phi") return st.phi_meta;
    throw IoError("meta state manifest: unknown component '" + name + "'");
  };
  for (const auto& row : manifest.rows) {
    if (row[0] == "iteration") {
      st.iteration = std::stoul(row[1]);
      continue;
    }
    MlpParams& p = part(row[0]);
    const size_t li = std::stoul(row[1]);
    if (li != p.layers.size()) throw IoError("meta state manifest: layers out of order");
    MlpLayer l;
    l.weight = Mat(std::stoul(row[3]), std::stoul(row[2]));
    l.bias = Mat(1, std::stoul(row[3]));
    l.activation = activation_from_name(row[4]);
    p.layers.push_back(std::move(l));
  }
  for (const auto& row : weights.rows) {
    MlpParams& p = part(row[0]);
    const size_t li = std::stoul(row[1]);
    if (li >= p.layers.size()) throw IoError("meta state weights: bad layer index");
    Mat& m = row[2] == "weight" ? p.layers[li].weight : p.layers[li].bias;
    const size_t idx = std::stoul(row[3]);
    if (idx >= m.data.size()) throw IoError("meta state weights: index out of range");
    m.data[idx] = std::stod(row[4]);
  }
  return st;
}

}  // namespace croma::meta
