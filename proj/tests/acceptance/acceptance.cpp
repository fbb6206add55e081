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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line
// with its measured values; the process fails if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "croma/align.hpp"
#include "croma/analysis.hpp"
#include "croma/csv.hpp"
#include "croma/graph.hpp"
#include "croma/metrics.hpp"
#include "croma/rng.hpp"
#include "croma/strategies.hpp"

using namespace croma;
namespace fs = std::filesystem;

namespace {

// Fixed master seed of the acceptance protocol.
constexpr uint64_t kSeed = 1;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  template <typename T>
  Check& operator<<(const T& v) {
    detail << v;
    return *this;
  }

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "  [failed: " << what << "]";
    }
  }
};

int g_failures = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& fn) {
  Check c;
  try {
    fn(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail << "  [exception: " << e.what() << "]";
  }
  if (!c.ok) ++g_failures;
  std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << name << ": " << c.detail.str()
            << std::endl;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Criterion 1: quantitative reproduction of the supervision-vs-alignment
// figure. d=20, sigma=1, n1=250, n2=40; n_align in {25..800} at
// sigma_w in {0.05, 0.2, 0.5}; 50 seeds per point.

void criterion1(Check& c) {
  synth::LinearWorldConfig base;  // d=20, sigma=1, n1=250, n2=40
  analysis::TradeoffOptions opt;
  opt.n_align_grid = {25, 50, 100, 200, 400, 800};
  opt.sigma_w_grid = {0.05, 0.2, 0.5};
  opt.seeds = 50;
  const auto points = analysis::run_tradeoff_sweep(base, opt, kSeed);

  const auto mean_curve = [&](analysis::RiskMethod m, double sw) {
    std::vector<double> curve;
    for (size_t na : opt.n_align_grid) {
      std::vector<double> risks;
      for (const auto& p : points)
        if (p.method == m && p.sigma_w == sw && p.n_align == na)
          risks.push_back(p.risk);
      curve.push_back(mean_of(risks));
    }
    return curve;
  };

  // (a) supervised target risk at the formula value 0.5 within 30 percent.
  const double sup_tgt = mean_curve(analysis::RiskMethod::kSupervisedTarget, 0.05)[0];
  c << "sup_tgt=" << sup_tgt;
  c.expect(sup_tgt >= 0.35 && sup_tgt <= 0.65, "supervised target not 0.5 +/- 30%");

  std::map<double, std::vector<double>> curves;
  for (double sw : opt.sigma_w_grid)
    curves[sw] = mean_curve(analysis::RiskMethod::kCrossModalAligned, sw);

  // (b) strictly decreasing in n_align per sigma_w (Spearman < -0.9).
  std::vector<double> na_axis(opt.n_align_grid.begin(), opt.n_align_grid.end());
  for (double sw : opt.sigma_w_grid) {
    const double rho = metrics::spearman_rho(na_axis, curves[sw]);
    c << "  rho(sw=" << sw << ")=" << rho;
    c.expect(rho < -0.9, "cross-modal curve not decreasing");
  }

  // (c) asymptote within [0.5, 2.0] x err_source = 0.08.
  const double err_source = analysis::predicted_errors(base).err_source;
  for (double sw : opt.sigma_w_grid) {
    const double tail = curves[sw].back();
    c.expect(tail >= 0.5 * err_source && tail <= 2.0 * err_source,
             "asymptote outside [0.5, 2.0] x err_source");
  }
  c << "  tails=" << curves[0.05].back() << "/" << curves[0.2].back() << "/"
    << curves[0.5].back();

  // (d) larger sigma_w shifts the mean curve up pointwise.
  for (size_t i = 0; i < na_axis.size(); ++i) {
    c.expect(curves[0.2][i] > curves[0.05][i] && curves[0.5][i] > curves[0.2][i],
             "curves not ordered pointwise in sigma_w");
  }
}

// ---------------------------------------------------------------------------
// Criterion 2: rule-of-thumb validity on 30 random configurations whose
// inequality holds with lhs < 0.5 * rhs; paired over 10 seeds each.

void criterion2(Check& c) {
  Rng rng(derive_stream(kSeed, 2001));
  size_t wins = 0, configs = 0;
  while (configs < 30) {
    synth::LinearWorldConfig cfg;
    cfg.d = 5 + rng.uniform_int(20);
    cfg.sigma = 0.5 + rng.uniform();
    cfg.sigma_w = 0.02 + 0.3 * rng.uniform();
    cfg.n1 = 5 * cfg.d + rng.uniform_int(300);
    cfg.n2 = cfg.d + 5 + rng.uniform_int(2 * cfg.d);
    cfg.n_align = cfg.d + 10 + rng.uniform_int(400);
    const auto dec = analysis::choose_strategy(cfg);
    if (!(dec.choice == analysis::StrategyChoice::kCrossModal &&
          dec.lhs < 0.5 * dec.rhs))
      continue;
    ++configs;

    std::vector<double> cross, sup;
    for (uint64_t s = 0; s < 10; ++s) {
      const auto [world, data] = synth::gen_linear_world_conditioned(
          cfg, derive_stream(kSeed, 2100 + 37 * configs + s), 30.0);
      cross.push_back(analysis::measure_risk(world, data,
                                             analysis::RiskMethod::kCrossModalAligned,
                                             2000, 1, analysis::RiskEval::kDesign));
      sup.push_back(analysis::measure_risk(world, data,
                                           analysis::RiskMethod::kSupervisedTarget,
                                           2000, 2, analysis::RiskEval::kDesign));
    }
    if (mean_of(cross) < mean_of(sup)) ++wins;
  }
  c << "cross-modal wins " << wins << "/30 configs";
  c.expect(wins >= 24, "below the 80% bar");
}

// ---------------------------------------------------------------------------
// Criterion 3: gradients of both alignment losses and the cross-entropy
// loss match central finite differences on 20+ random instances each.

void criterion3(Check& c) {
  double worst = 0.0;

  // Alignment losses, both encoder sides, both variants alternating.
  for (uint64_t seed = 0; seed < 20; ++seed) {
    align::AlignLossConfig lc;
    lc.variant = seed % 2 == 0 ? align::AlignVariant::kMarginHinge
                               : align::AlignVariant::kNce;
    Rng r1(derive_stream(kSeed, 3100 + seed));
    const auto e_s = make_mlp({3, 5, 4}, Activation::kTanh, Activation::kIdentity, r1);
    const auto e_t = make_mlp({2, 5, 4}, Activation::kTanh, Activation::kIdentity, r1);
    const Mat src = Mat::gaussian(6, 3, r1);
    const Mat tgt = Mat::gaussian(6, 2, r1);
    synth::AlignmentTask task;
    task.mode = synth::AlignMode::kStrong;
    task.train_src = src;
    task.train_tgt = tgt;
    const auto negs = align::sample_negatives(task, 3, derive_stream(kSeed, 3200 + seed));
    const auto res = align::strong_align_loss(e_s, e_t, src, tgt, negs, lc);
    const auto numeric_s = finite_diff_grad(
        [&](const MlpParams& q) {
          return align::strong_align_loss(q, e_t, src, tgt, negs, lc).loss;
        },
        e_s, 1e-5);
    const auto numeric_t = finite_diff_grad(
        [&](const MlpParams& q) {
          return align::strong_align_loss(e_s, q, src, tgt, negs, lc).loss;
        },
        e_t, 1e-5);
    worst = std::max(worst, max_relative_error(res.grad_src, numeric_s, 1e-6));
    worst = std::max(worst, max_relative_error(res.grad_tgt, numeric_t, 1e-6));
  }
  c << "strong worst=" << worst;
  c.expect(worst < 1e-4, "strong alignment gradient mismatch");

  double worst_weak = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    align::AlignLossConfig lc;
    lc.variant = seed % 2 == 0 ? align::AlignVariant::kMarginHinge
                               : align::AlignVariant::kNce;
    Rng r1(derive_stream(kSeed, 3300 + seed));
    const auto e_s = make_mlp({3, 4, 3}, Activation::kTanh, Activation::kIdentity, r1);
    const auto e_t = make_mlp({2, 4, 3}, Activation::kTanh, Activation::kIdentity, r1);
    synth::AlignmentTask task;
    task.mode = synth::AlignMode::kWeak;
    for (size_t si = 0; si < 3; ++si) {
      synth::AlignmentTask::WeakSet set;
      set.concept_id = si;
      set.src = Mat::gaussian(3, 3, r1);
      set.tgt = Mat::gaussian(3, 2, r1);
      task.train_sets.push_back(std::move(set));
    }
    const auto pos =
        align::sample_weak_positives(task, 2, derive_stream(kSeed, 3400 + seed));
    const auto negs =
        align::sample_negatives(task, pos, 3, derive_stream(kSeed, 3500 + seed));
    const auto res = align::weak_align_loss(e_s, e_t, task, pos, negs, lc);
    const auto numeric_s = finite_diff_grad(
        [&](const MlpParams& q) {
          return align::weak_align_loss(q, e_t, task, pos, negs, lc).loss;
        },
        e_s, 1e-5);
    const auto numeric_t = finite_diff_grad(
        [&](const MlpParams& q) {
          return align::weak_align_loss(e_s, q, task, pos, negs, lc).loss;
        },
        e_t, 1e-5);
    worst_weak = std::max(worst_weak, max_relative_error(res.grad_src, numeric_s, 1e-6));
    worst_weak = std::max(worst_weak, max_relative_error(res.grad_tgt, numeric_t, 1e-6));
  }
  c << " weak worst=" << worst_weak;
  c.expect(worst_weak < 1e-4, "weak alignment gradient mismatch");

  double worst_ce = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1(derive_stream(kSeed, 3600 + seed));
    const Activation hidden = seed % 2 == 0 ? Activation::kTanh : Activation::kReLU;
    const auto net = make_mlp({4, 6, 3}, hidden, Activation::kIdentity, r1);
    const Mat x = Mat::gaussian(5, 4, r1);
    std::vector<int> labels;
    for (int i = 0; i < 5; ++i) labels.push_back(static_cast<int>(r1.uniform_int(3)));
    const auto trace = mlp_forward(net, x);
    const auto [loss, grad] = softmax_cross_entropy(trace.output(), labels);
    (void)loss;
    const auto analytic = mlp_backward(net, trace, grad).params;
    const auto numeric = finite_diff_grad(
        [&](const MlpParams& q) {
          return softmax_cross_entropy(mlp_forward(q, x).output(), labels).first;
        },
        net, 1e-5);
    worst_ce = std::max(worst_ce, max_relative_error(analytic, numeric, 1e-6));
  }
  c << " ce worst=" << worst_ce;
  c.expect(worst_ce < 1e-4, "cross-entropy gradient mismatch");
}

// ---------------------------------------------------------------------------
// Criterion 4: oracle equivalence. ols_fit vs gradient descent; plan_path
// vs exhaustive simple-path enumeration.

Mat ridge_gd(const Mat& x, const Mat& y, double ridge, size_t iters) {
  const Mat gram = matmul_tn(x, x);
  Mat v(gram.rows, 1);
  for (auto& e : v.data) e = 1.0 / std::sqrt(static_cast<double>(v.size()));
  double lmax = 1.0;
  for (int it = 0; it < 200; ++it) {
    Mat nv = matmul(gram, v);
    for (size_t i = 0; i < nv.size(); ++i) nv.data[i] += ridge * v.data[i];
    lmax = frobenius_norm(nv);
    if (lmax == 0.0) break;
    nv *= 1.0 / lmax;
    v = nv;
  }
  const double lr = 0.45 / (lmax + ridge + 1e-9);
  Mat b(x.cols, y.cols);
  for (size_t it = 0; it < iters; ++it) {
    Mat resid = matmul(x, b);
    resid -= y;
    Mat grad = matmul_tn(x, resid);
    for (size_t i = 0; i < grad.size(); ++i)
      grad.data[i] = 2.0 * grad.data[i] + 2.0 * ridge * b.data[i];
    for (size_t i = 0; i < b.size(); ++i) b.data[i] -= lr * grad.data[i];
  }
  return b;
}

struct BruteBest {
  bool found = false;
  double cost = 0.0;
  std::vector<std::string> vertices;
};

void brute_dfs(const analysis::ModalityTaskGraph& g, const std::string& v,
               const std::string& goal, std::vector<std::string>& path, double cost,
               BruteBest& best) {
  if (v == goal) {
    const bool better =
        !best.found || cost < best.cost ||
        (cost == best.cost && (path.size() < best.vertices.size() ||
                               (path.size() == best.vertices.size() &&
                                path < best.vertices)));
    if (better) {
      best.found = true;
      best.cost = cost;
      best.vertices = path;
    }
    return;
  }
  for (const auto& e : g.edges) {
    std::string next;
    if (e.kind == analysis::EdgeKind::kClassify) {
      if (e.src == v) next = e.dst;
    } else {
      if (e.src == v) next = e.dst;
      else if (e.dst == v) next = e.src;
    }
    if (next.empty()) continue;
    if (std::find(path.begin(), path.end(), next) != path.end()) continue;
    path.push_back(next);
    brute_dfs(g, next, goal, path, cost + e.error, best);
    path.pop_back();
  }
}

void criterion4(Check& c) {
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_stream(kSeed, 4100 + seed));
    const Mat x = Mat::gaussian(40, 4, rng);
    const Mat y = Mat::gaussian(40, 2, rng);
    const double ridge = 1e-3;
    const auto fit = analysis::ols_fit(x, y, ridge);
    const Mat gd = ridge_gd(x, y, ridge, 60000);
    double dist = 0.0;
    for (size_t i = 0; i < gd.size(); ++i) {
      const double diff = gd.data[i] - fit.weights.data[i];
      dist += diff * diff;
    }
    worst = std::max(worst, std::sqrt(dist));
  }
  c << "ols-vs-gd worst distance=" << worst;
  c.expect(worst <= 1e-4, "closed form and gradient descent disagree");

  size_t compared = 0, exact = 0;
  for (uint64_t seed = 0; compared < 200; ++seed) {
    Rng rng(derive_stream(kSeed, 4200 + seed));
    const size_t n_mod = 1 + rng.uniform_int(4);
    const size_t n_task = 1 + rng.uniform_int(4);
    std::vector<analysis::GraphEdge> edges;
    for (size_t m = 0; m < n_mod; ++m)
      edges.push_back({analysis::EdgeKind::kClassify, "m" + std::to_string(m),
                       "t" + std::to_string(rng.uniform_int(n_task)),
                       0.1 * static_cast<double>(rng.uniform_int(11))});
    for (size_t t = 0; t < n_task; ++t)
      edges.push_back({analysis::EdgeKind::kClassify,
                       "m" + std::to_string(rng.uniform_int(n_mod)),
                       "t" + std::to_string(t),
                       0.1 * static_cast<double>(rng.uniform_int(11))});
    for (size_t e = rng.uniform_int(6); e > 0; --e) {
      const int kind = static_cast<int>(rng.uniform_int(3));
      const double err = 0.1 * static_cast<double>(rng.uniform_int(11));
      const size_t a = rng.uniform_int(std::max(n_mod, n_task));
      const size_t b = rng.uniform_int(std::max(n_mod, n_task));
      if (kind == 0)
        edges.push_back({analysis::EdgeKind::kClassify,
                         "m" + std::to_string(a % n_mod),
                         "t" + std::to_string(b % n_task), err});
      else if (kind == 1 && n_mod >= 2 && a % n_mod != b % n_mod)
        edges.push_back({analysis::EdgeKind::kAlign, "m" + std::to_string(a % n_mod),
                         "m" + std::to_string(b % n_mod), err});
      else if (kind == 2 && n_task >= 2 && a % n_task != b % n_task)
        edges.push_back({analysis::EdgeKind::kTaskRel, "t" + std::to_string(a % n_task),
                         "t" + std::to_string(b % n_task), err});
    }
    const auto g = analysis::ModalityTaskGraph::from_edges(edges);
    const std::string from = "m" + std::to_string(rng.uniform_int(n_mod));
    const std::string to = "t" + std::to_string(rng.uniform_int(n_task));
    BruteBest brute;
    std::vector<std::string> path = {from};
    brute_dfs(g, from, to, path, 0.0, brute);
    if (!brute.found) continue;
    ++compared;
    const auto plan = analysis::plan_path(g, from, to);
    if (std::fabs(plan.total_error - brute.cost) < 1e-12 &&
        plan.vertices == brute.vertices)
      ++exact;
  }
  c << "  planner exact on " << exact << "/" << compared << " graphs";
  c.expect(exact == compared, "planner differs from brute force");
}

// ---------------------------------------------------------------------------
// Criterion 5: method ordering on the default concept world, 8 evaluation
// tasks x 10 repeats.

void criterion5(Check& c) {
  const metrics::EvalProtocol protocol;  // 8 tasks, 5-way, {1,5,10}, 10 repeats
  meta::MetaConfig cfg;                  // defaults: 800 iterations etc.
  const synth::ConceptWorldConfig wc;

  // accuracy[strategy][k][repeat] averaged over tasks
  std::map<int, std::map<size_t, std::vector<double>>> acc;
  for (size_t r = 0; r < protocol.repeats; ++r) {
    const auto world =
        synth::gen_concept_world(wc, derive_stream(kSeed, 70000 + r));
    const uint64_t run_seed = derive_stream(kSeed, 71000 + r);
    for (meta::StrategyKind kind :
         {meta::StrategyKind::kCroma, meta::StrategyKind::kAlignThenClassify}) {
      const auto run = meta::run_strategy(kind, world, protocol.k_grid,
                                          protocol.n_eval_tasks, protocol.n_way, cfg,
                                          run_seed);
      std::map<size_t, std::vector<double>> per_k;
      for (const auto& res : run.results) per_k[res.k_shot].push_back(res.accuracy);
      for (auto& [k, v] : per_k) acc[static_cast<int>(kind)][k].push_back(mean_of(v));
    }
  }
  const auto overall = [&](meta::StrategyKind kind, size_t k) {
    return mean_of(acc[static_cast<int>(kind)][k]);
  };
  const double croma1 = overall(meta::StrategyKind::kCroma, 1);
  const double croma5 = overall(meta::StrategyKind::kCroma, 5);
  const double croma10 = overall(meta::StrategyKind::kCroma, 10);
  const double align1 = overall(meta::StrategyKind::kAlignThenClassify, 1);
  const double align5 = overall(meta::StrategyKind::kAlignThenClassify, 5);
  const double align10 = overall(meta::StrategyKind::kAlignThenClassify, 10);
  c << "croma k1/k5/k10=" << croma1 << "/" << croma5 << "/" << croma10
    << " align k1/k5/k10=" << align1 << "/" << align5 << "/" << align10;
  c.expect(croma5 >= align5, "croma below align+classify at 5-shot");
  c.expect(croma1 >= align1, "croma below align+classify at 1-shot");
  c.expect(croma5 >= 0.2 + 0.15, "croma 5-shot below chance + 0.15");

  size_t adv1_wins = 0;
  for (size_t r = 0; r < protocol.repeats; ++r) {
    const double adv1 = acc[static_cast<int>(meta::StrategyKind::kCroma)][1][r] -
                        acc[static_cast<int>(meta::StrategyKind::kAlignThenClassify)][1][r];
    const double adv10 = acc[static_cast<int>(meta::StrategyKind::kCroma)][10][r] -
                         acc[static_cast<int>(meta::StrategyKind::kAlignThenClassify)][10][r];
    if (adv1 >= adv10) ++adv1_wins;
  }
  c << " adv1>=adv10 in " << adv1_wins << "/10 repeats";
  c.expect(adv1_wins >= 6, "1-shot advantage not dominant often enough");
}

// ---------------------------------------------------------------------------
// Criterion 6: retrieval after meta-alignment beats the untrained encoders
// strictly, recall is monotone, and the identity smoke test is exact.

void criterion6(Check& c) {
  const synth::ConceptWorldConfig wc;
  const auto world = synth::gen_concept_world(wc, derive_stream(kSeed, 6100));
  meta::MetaConfig cfg;
  const auto init = meta::init_meta_state(world, cfg, derive_stream(kSeed, 6200));
  const auto trained = meta::croma_meta_train(world, cfg, derive_stream(kSeed, 6200));
  const auto pool = synth::sample_alignment_task(world, synth::AlignMode::kStrong,
                                                 200, derive_stream(kSeed, 6300));

  const auto before = metrics::retrieval_metrics(init.e_src_meta, init.e_tgt_meta,
                                                 pool.test_src, pool.test_tgt);
  const auto after = metrics::retrieval_metrics(trained.state.e_src_meta,
                                                trained.state.e_tgt_meta,
                                                pool.test_src, pool.test_tgt);
  c << "R1 " << before.recall_at_1 << "->" << after.recall_at_1 << " R5 "
    << before.recall_at_5 << "->" << after.recall_at_5 << " R10 "
    << before.recall_at_10 << "->" << after.recall_at_10;
  c.expect(after.recall_at_1 > before.recall_at_1, "recall@1 not improved");
  c.expect(after.recall_at_5 > before.recall_at_5, "recall@5 not improved");
  c.expect(after.recall_at_10 > before.recall_at_10, "recall@10 not improved");
  for (const auto& rep : {before, after}) {
    c.expect(rep.recall_at_1 <= rep.recall_at_5 && rep.recall_at_5 <= rep.recall_at_10,
             "recall not monotone in k");
  }

  // Identity-encoder smoke test: distinct unit embeddings retrieve exactly.
  MlpParams ident;
  MlpLayer l;
  l.weight = Mat::identity(4);
  l.bias = Mat::zeros(1, 4);
  l.activation = Activation::kIdentity;
  ident.layers.push_back(l);
  Rng rng(derive_stream(kSeed, 6400));
  Mat pts(8, 4);
  for (size_t i = 0; i < pts.rows; ++i) {
    double norm = 0.0;
    do {
      for (size_t j = 0; j < pts.cols; ++j) pts.at(i, j) = rng.normal();
      norm = row_norm(pts, i);
    } while (norm == 0.0);
    for (size_t j = 0; j < pts.cols; ++j) pts.at(i, j) /= norm;
  }
  const auto smoke = metrics::retrieval_metrics(ident, ident, pts, pts);
  c << " identity R1=" << smoke.recall_at_1;
  c.expect(smoke.recall_at_1 == 1.0, "identity smoke test not exact");
}

// ---------------------------------------------------------------------------
// Criterion 7: label-noise robustness. Accuracy non-increasing over rates
// {0, 0.2, 0.4, 0.6} and the rate-0 point bit-matches the clean run.

void criterion7(Check& c) {
  const std::vector<double> rates = {0.0, 0.2, 0.4, 0.6};
  metrics::EvalProtocol protocol;
  protocol.repeats = 10;
  meta::MetaConfig cfg;
  const synth::ConceptWorldConfig wc;

  std::map<double, std::vector<double>> acc_by_rate;
  bool bit_match = true;
  for (size_t r = 0; r < protocol.repeats; ++r) {
    const auto world =
        synth::gen_concept_world(wc, derive_stream(kSeed, 70000 + r));
    const uint64_t run_seed = derive_stream(kSeed, 71000 + r);
    const auto clean = meta::run_strategy(meta::StrategyKind::kCroma, world,
                                          protocol.k_grid, protocol.n_eval_tasks,
                                          protocol.n_way, cfg, run_seed);
    const auto sweep = metrics::noise_sweep(meta::StrategyKind::kCroma, world, rates,
                                            protocol, cfg, run_seed);
    for (const auto& point : sweep) {
      std::vector<double> accs;
      for (const auto& res : point.run.results) accs.push_back(res.accuracy);
      acc_by_rate[point.rate].push_back(mean_of(accs));
    }
    for (size_t i = 0; i < clean.results.size(); ++i)
      bit_match = bit_match &&
                  sweep[0].run.results[i].accuracy == clean.results[i].accuracy;
  }
  std::vector<double> curve;
  for (double r : rates) curve.push_back(mean_of(acc_by_rate[r]));
  const double rho = metrics::spearman_rho(rates, curve);
  c << "mean accuracy by rate " << curve[0] << "/" << curve[1] << "/" << curve[2]
    << "/" << curve[3] << " rho=" << rho << " rate0_bitmatch=" << bit_match;
  c.expect(rho < 0.0, "accuracy does not trend down with noise");
  c.expect(bit_match, "rate 0 differs from the clean run");
}

// ---------------------------------------------------------------------------
// Criterion 8: the fitted optimal set count scales like sqrt(N).

void criterion8(Check& c) {
  synth::ConceptWorldConfig wc;
  wc.latent_dim = 2;  // the 1/S inner-set variance regime
  const std::vector<size_t> s_grid = {2, 4, 8, 16, 32, 64, 128};
  const std::vector<size_t> n_grid = {200, 800, 3200};
  const size_t seeds = 10;

  std::vector<double> n_values, s_stars;
  bool u_shaped = true;
  for (size_t n : n_grid) {
    std::vector<double> mean_err(s_grid.size(), 0.0);
    for (uint64_t seed = 0; seed < seeds; ++seed) {
      const auto world =
          synth::gen_concept_world(wc, derive_stream(kSeed, 80000 + seed));
      for (size_t si = 0; si < s_grid.size(); ++si) {
        mean_err[si] += analysis::measure_weak_set_error(
                            world, s_grid[si], n, 0.5, 4000,
                            derive_stream(kSeed, 80000 + 777 * n + 31 * seed + si)) /
                        static_cast<double>(seeds);
      }
    }
    const size_t argmin =
        std::min_element(mean_err.begin(), mean_err.end()) - mean_err.begin();
    u_shaped = u_shaped && argmin > 0 && argmin + 1 < s_grid.size();
    const std::vector<double> s_values(s_grid.begin(), s_grid.end());
    const auto fit = analysis::fit_set_count(s_values, mean_err, static_cast<double>(n));
    n_values.push_back(static_cast<double>(n));
    s_stars.push_back(fit.s_star);
  }
  const double slope = analysis::log_log_slope(n_values, s_stars);
  c << "S*=" << s_stars[0] << "/" << s_stars[1] << "/" << s_stars[2]
    << " slope=" << slope << " u_shaped=" << u_shaped;
  c.expect(slope >= 0.35 && slope <= 0.65, "slope outside 0.5 +/- 0.15");
  c.expect(u_shaped, "error-vs-S curve not U-shaped");
}

// ---------------------------------------------------------------------------
// Criterion 9: the strong-alignment composition achieves exactly zero error
// on a finite bijective-pairing world with fully observed source labels.

void criterion9(Check& c) {
  Rng rng(derive_stream(kSeed, 9100));
  const size_t n = 60, classes = 6;
  std::vector<int> concept_label(classes);
  for (auto& l : concept_label) l = static_cast<int>(rng.uniform_int(1000));
  std::vector<size_t> source_concept(n);
  for (auto& cc : source_concept) cc = rng.uniform_int(classes);
  const auto pairing = rng.permutation(n);
  std::vector<size_t> target_concept(n);
  for (size_t s = 0; s < n; ++s) target_concept[pairing[s]] = source_concept[s];

  std::vector<int> observed_source_label(n);
  for (size_t s = 0; s < n; ++s)
    observed_source_label[s] = concept_label[source_concept[s]];
  std::vector<size_t> learned_inverse(n);
  for (size_t s = 0; s < n; ++s) learned_inverse[pairing[s]] = s;

  size_t errors = 0;
  for (size_t t = 0; t < n; ++t) {
    if (observed_source_label[learned_inverse[t]] != concept_label[target_concept[t]])
      ++errors;
  }
  c << "composition errors=" << errors << "/" << n;
  c.expect(errors == 0, "composition made target errors");
}

// ---------------------------------------------------------------------------
// Criterion 10: every CLI subcommand is byte-identical across reruns.

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing " + path + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CROMA_BIN) + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string tree_fingerprint(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += fs::relative(f, dir).string();
    all += "\n";
    all += read_file(f.string());
  }
  return all;
}

void criterion10(Check& c) {
  const fs::path dir = "acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::string linear_cfg = (dir / "linear.ini").string();
  write_file_atomic(linear_cfg,
                    "[run]\nseed = 5\n[world]\nkind = linear\n"
                    "[tradeoff]\nn_align_grid = 25,100\nsigma_w_grid = 0.1\n"
                    "seeds = 3\nmc_samples = 1000\n");
  const std::string concept_cfg = (dir / "concept.ini").string();
  write_file_atomic(concept_cfg,
                    "[run]\nseed = 5\n[world]\nkind = concept\nnum_concepts = 18\n"
                    "latent_dim = 3\nsource_dim = 6\ntarget_dim = 6\n"
                    "[protocol]\nn_eval_tasks = 2\nn_way = 3\nk_grid = 1,5\n"
                    "repeats = 2\n[strategies]\nlist = croma\n"
                    "[train]\niterations = 12\ninner_steps = 2\nalign_task_size = 12\n"
                    "embed_dim = 4\nencoder_hidden = 8\nclassifier_hidden = 8\n"
                    "test_adapt_steps = 3\n"
                    "[noise]\nrates = 0,0.4\n"
                    "[retrieve]\npairs = 20\n"
                    "[setcount]\ns_grid = 2,4,8,16\nn_grid = 100,400\nseeds = 2\n"
                    "eval_samples = 500\n");
  write_file_atomic((dir / "graph.csv").string(),
                    "kind,src,dst,error\nalign,x_t,x_s,0.1\nclassify,x_s,y_s,0\n"
                    "taskrel,y_s,y_t,0.05\nclassify,x_t,y_t,0.5\n");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"tradeoff", "tradeoff --config " + linear_cfg},
      {"train", "train --config " + concept_cfg},
      {"evaluate", "evaluate --config " + concept_cfg},
      {"retrieve", "retrieve --config " + concept_cfg},
      {"plan", "plan --graph " + (dir / "graph.csv").string() + " --from x_t --to y_t"},
      {"sweep-setcount", "sweep-setcount --config " + concept_cfg},
  };
  for (const auto& [name, args] : commands) {
    const fs::path r1 = dir / (name + "_1"), r2 = dir / (name + "_2");
    fs::create_directories(r1);
    fs::create_directories(r2);
    const int rc1 = run_cli(args + " --out " + r1.string());
    const int rc2 = run_cli(args + " --out " + r2.string());
    const bool same =
        rc1 == 0 && rc2 == 0 && tree_fingerprint(r1) == tree_fingerprint(r2);
    c << " " << name << (same ? "=ok" : "=DIFFERS");
    c.expect(same, name + " rerun not byte-identical");
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  std::cout << "== acceptance suite ==\n";
  criterion("criterion 1 (figure reproduction: supervision vs alignment)", criterion1);
  criterion("criterion 2 (rule-of-thumb validity)", criterion2);
  criterion("criterion 3 (gradient correctness)", criterion3);
  criterion("criterion 4 (oracle equivalence)", criterion4);
  criterion("criterion 5 (method ordering trend)", criterion5);
  criterion("criterion 6 (retrieval improvement)", criterion6);
  criterion("criterion 7 (noise robustness trend)", criterion7);
  criterion("criterion 8 (set-count sqrt scaling)", criterion8);
  criterion("criterion 9 (strong-alignment composition, discrete)", criterion9);
  criterion("criterion 10 (CLI determinism)", criterion10);
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
