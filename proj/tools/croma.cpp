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

// Batch experiment runner. Subcommands:
//   tradeoff        linear-world supervision vs alignment sweep
//   train           meta-train and dump a meta state
//   evaluate        few-shot evaluation protocol over strategies
//   retrieve        cross-modal retrieval metrics
//   plan            lowest-error path in a modality-task graph
//   sweep-setcount  weak-set count study and S* fit
//
// Exit codes: 0 success, 2 configuration error, 3 numeric error, 4 I/O error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "croma/analysis.hpp"
#include "croma/config.hpp"
#include "croma/csv.hpp"
#include "croma/error.hpp"
#include "croma/graph.hpp"
#include "croma/linear_world.hpp"
#include "croma/metrics.hpp"
#include "croma/parallel.hpp"
#include "croma/rng.hpp"
#include "croma/strategies.hpp"

namespace {

using namespace croma;

// Stream tags reserved by the CLI driver.
constexpr uint64_t kTagTradeoffDump = 62000;
constexpr uint64_t kTagWorldRepeat = 70000;
constexpr uint64_t kTagRunRepeat = 71000;
constexpr uint64_t kTagRetrieveTask = 72000;
constexpr uint64_t kTagSetcount = 80000;

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed_override;
  std::optional<std::string> out_override;
};

ExperimentConfig load(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed_override) cfg.run.seed = *args.seed_override;
  if (args.out_override) cfg.run.out_dir = *args.out_override;
  return cfg;
}

void require_world(const ExperimentConfig& cfg, const std::string& kind,
                   const char* cmd) {
  if (cfg.world.kind != kind)
    throw ConfigError(std::string(cmd) + ": requires world.kind = " + kind);
}

std::string method_name(analysis::RiskMethod m) {
  switch (m) {
    case analysis::RiskMethod::kSupervisedSource: return "supervised_source";
    case analysis::RiskMethod::kSupervisedTarget: return "supervised_target";
    case analysis::RiskMethod::kCrossModalAligned: return "crossmodal_aligned";
  }
  throw ConfigError("unknown risk method");
}

// ---------------------------------------------------------------------------
// tradeoff

int cmd_tradeoff(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  require_world(cfg, "linear", "tradeoff");
  const auto& tr = cfg.tradeoff;
  const std::string dir = cfg.run.out_dir;

  // Predicted errors and the decision rule, one row per grid point.
  CsvWriter pred({"n_align", "sigma_w", "err_source", "err_target", "err_align",
                  "err_crossmodal", "rule_lhs", "rule_rhs", "verdict"});
  for (double sw : tr.sigma_w_grid) {
    for (size_t na : tr.n_align_grid) {
      synth::LinearWorldConfig wc = cfg.world.linear;
      wc.sigma_w = sw;
      wc.n_align = na;
      const auto p = analysis::predicted_errors(wc);
      const auto dec = analysis::choose_strategy(wc);
      pred.add_row({std::to_string(na), format_double(sw),
                    format_double(p.err_source), format_double(p.err_target),
                    format_double(p.err_align), format_double(p.err_crossmodal),
                    format_double(dec.lhs), format_double(dec.rhs),
                    dec.choice == analysis::StrategyChoice::kCrossModal
                        ? "crossmodal"
                        : "supervised"});
    }
  }
  pred.save(dir + "/predictions.csv");

  // Measured risks via the shared sweep (common random numbers per seed,
  // antithetic alignment noise).
  analysis::TradeoffOptions opt;
  opt.n_align_grid = tr.n_align_grid;
  opt.sigma_w_grid = tr.sigma_w_grid;
  opt.seeds = tr.seeds;
  opt.mc_samples = tr.mc_samples;
  opt.risk_eval = tr.risk_eval;
  opt.antithetic = tr.antithetic;
  opt.max_world_cond = tr.max_world_cond;
  const auto points = analysis::run_tradeoff_sweep(cfg.world.linear, opt, cfg.run.seed);

  CsvWriter measured({"n_align", "sigma_w", "seed", "method", "risk"});
  for (const auto& p : points)
    measured.add_row({std::to_string(p.n_align), format_double(p.sigma_w),
                      std::to_string(p.seed), method_name(p.method),
                      format_double(p.risk)});
  measured.save(dir + "/measured.csv");

  if (tr.dump_world) {
    const auto [world, data] = synth::gen_linear_world(
        cfg.world.linear, derive_stream(cfg.run.seed, kTagTradeoffDump));
    synth::save_csv_bundle(world, data, dir + "/world_dump");
  }

  // Aggregate plot data: mean and std per (n_align, sigma_w, method).
  CsvWriter fig({"n_align", "sigma_w", "method", "mean_risk", "std_risk"});
  for (double sw : tr.sigma_w_grid) {
    for (size_t na : tr.n_align_grid) {
      for (analysis::RiskMethod method :
           {analysis::RiskMethod::kSupervisedSource,
            analysis::RiskMethod::kSupervisedTarget,
            analysis::RiskMethod::kCrossModalAligned}) {
        std::vector<double> risks;
        for (const auto& p : points)
          if (p.n_align == na && p.sigma_w == sw && p.method == method)
            risks.push_back(p.risk);
        std::sort(risks.begin(), risks.end());
        double mean = 0.0;
        for (double r : risks) mean += r;
        mean /= static_cast<double>(risks.size());
        double ss = 0.0;
        for (double r : risks) ss += (r - mean) * (r - mean);
        const double stddev = risks.size() > 1
                                  ? std::sqrt(ss / static_cast<double>(risks.size() - 1))
                                  : 0.0;
        fig.add_row({std::to_string(na), format_double(sw), method_name(method),
                     format_double(mean), format_double(stddev)});
      }
    }
  }
  fig.save(dir + "/figure_syn_data.csv");
  std::cout << "tradeoff: wrote predictions.csv, measured.csv, figure_syn_data.csv to "
            << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  require_world(cfg, "concept", "train");
  const meta::StrategyKind kind = cfg.strategies.front();
  if (kind != meta::StrategyKind::kCroma &&
      kind != meta::StrategyKind::kAlignThenClassify &&
      kind != meta::StrategyKind::kAlignThenMetaClassify) {
    throw ConfigError("train: metastate dumps cover the alignment-based strategies "
                      "(croma, align_classify, align_meta_classify)");
  }
  const auto world =
      synth::gen_concept_world(cfg.world.concepts, derive_stream(cfg.run.seed, kTagWorldRepeat));

  meta::MetaConfig mc = cfg.train;
  mc.encoder_reptile = kind == meta::StrategyKind::kCroma;
  mc.classifier_reptile = kind != meta::StrategyKind::kAlignThenClassify;
  meta::WorldAccess access(world, meta::AccessPolicy::for_strategy(kind));
  const auto result =
      meta::croma_meta_train(access, mc, derive_stream(cfg.run.seed, kTagRunRepeat));

  meta::save_meta_state(result.state, cfg.run.out_dir + "/metastate");
  CsvWriter log({"iteration", "align_loss", "cls_loss"});
  for (const auto& row : result.log)
    log.add_row({std::to_string(row.iteration), format_double(row.align_loss),
                 format_double(row.cls_loss)});
  log.save(cfg.run.out_dir + "/training_log.csv");
  std::cout << "train: " << to_string(kind) << " for " << mc.iterations
            << " iterations; wrote metastate/ and training_log.csv to "
            << cfg.run.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const CommonArgs& args, const std::string& metastate_path) {
  const ExperimentConfig cfg = load(args);
  require_world(cfg, "concept", "evaluate");
  const auto& protocol = cfg.protocol;
  const std::string dir = cfg.run.out_dir;

  CsvWriter episodes({"strategy", "k", "seed", "task_id", "accuracy"});
  std::vector<meta::EpisodeResult> all_results;

  const auto record = [&](const meta::EvalRun& run, size_t repeat) {
    for (const auto& r : run.results) {
      episodes.add_row({to_string(r.strategy), std::to_string(r.k_shot),
                        std::to_string(repeat), std::to_string(r.task_index),
                        format_double(r.accuracy)});
      all_results.push_back(r);
    }
  };

  if (!metastate_path.empty()) {
    // Score a saved meta state against the world and protocol derived from
    // this config's seed (repeat 0), as produced by `train`.
    const auto world = synth::gen_concept_world(
        cfg.world.concepts, derive_stream(cfg.run.seed, kTagWorldRepeat));
    const meta::MetaState state = meta::load_meta_state(metastate_path);
    meta::TrainedStrategy trained;
    trained.kind = meta::StrategyKind::kCroma;
    trained.target_encoder = state.e_tgt_meta;
    trained.phi_trunk = state.phi_meta;
    meta::WorldAccess access(world, meta::AccessPolicy::for_strategy(trained.kind));
    const auto run = meta::evaluate_strategy(
        trained, access, protocol.k_grid, protocol.n_eval_tasks, protocol.n_way,
        cfg.train,
        derive_stream(derive_stream(cfg.run.seed, kTagRunRepeat), 42));
    record(run, 0);
  } else {
    // Repeats run on independent streams; per-repeat slots keep the output
    // identical for any CROMA_THREADS value.
    std::vector<std::vector<meta::EvalRun>> per_repeat(protocol.repeats);
    parallel_for(protocol.repeats, env_thread_count(), [&](size_t r) {
      const auto world = synth::gen_concept_world(
          cfg.world.concepts, derive_stream(cfg.run.seed, kTagWorldRepeat + r));
      const uint64_t run_seed = derive_stream(cfg.run.seed, kTagRunRepeat + r);
      for (meta::StrategyKind kind : cfg.strategies) {
        per_repeat[r].push_back(meta::run_strategy(kind, world, protocol.k_grid,
                                                   protocol.n_eval_tasks,
                                                   protocol.n_way, cfg.train,
                                                   run_seed));
      }
    });
    for (size_t r = 0; r < protocol.repeats; ++r)
      for (const auto& run : per_repeat[r]) record(run, r);
  }
  episodes.save(dir + "/episodes.csv");

  CsvWriter summary({"strategy", "k", "mean", "std", "count"});
  for (const auto& row : metrics::aggregate_accuracy(all_results))
    summary.add_row({to_string(row.strategy), std::to_string(row.k_shot),
                     format_double(row.mean), format_double(row.stddev),
                     std::to_string(row.count)});
  summary.save(dir + "/summary.csv");

  // The noise sweep meta-trains its strategy in-process, so it only runs in
  // the self-contained (no --metastate) mode.
  if (!cfg.noise.rates.empty() && metastate_path.empty()) {
    CsvWriter noise({"strategy", "k", "rate", "seed", "task_id", "accuracy"});
    std::vector<std::pair<double, meta::EpisodeResult>> noisy_results;
    std::vector<std::vector<metrics::NoisePoint>> sweeps(protocol.repeats);
    parallel_for(protocol.repeats, env_thread_count(), [&](size_t r) {
      const auto world = synth::gen_concept_world(
          cfg.world.concepts, derive_stream(cfg.run.seed, kTagWorldRepeat + r));
      sweeps[r] = metrics::noise_sweep(cfg.noise.strategy, world, cfg.noise.rates,
                                       protocol, cfg.train,
                                       derive_stream(cfg.run.seed, kTagRunRepeat + r));
    });
    for (size_t r = 0; r < protocol.repeats; ++r) {
      const auto& sweep = sweeps[r];
      for (const auto& point : sweep) {
        for (const auto& res : point.run.results) {
          noise.add_row({to_string(res.strategy), std::to_string(res.k_shot),
                         format_double(point.rate), std::to_string(r),
                         std::to_string(res.task_index), format_double(res.accuracy)});
          noisy_results.emplace_back(point.rate, res);
        }
      }
    }
    noise.save(dir + "/noise.csv");

    CsvWriter nsum({"strategy", "k", "rate", "mean", "std", "count"});
    for (double rate : cfg.noise.rates) {
      std::vector<meta::EpisodeResult> at_rate;
      for (const auto& [r, res] : noisy_results)
        if (r == rate) at_rate.push_back(res);
      for (const auto& row : metrics::aggregate_accuracy(at_rate))
        nsum.add_row({to_string(row.strategy), std::to_string(row.k_shot),
                      format_double(rate), format_double(row.mean),
                      format_double(row.stddev), std::to_string(row.count)});
    }
    nsum.save(dir + "/noise_summary.csv");
  }
  std::cout << "evaluate: wrote episodes.csv and summary.csv to " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// retrieve

int cmd_retrieve(const CommonArgs& args, const std::string& metastate_path) {
  const ExperimentConfig cfg = load(args);
  require_world(cfg, "concept", "retrieve");
  const auto world = synth::gen_concept_world(
      cfg.world.concepts, derive_stream(cfg.run.seed, kTagWorldRepeat));
  const std::string dir = cfg.run.out_dir;

  // Held-out pool: the test split of one strong alignment task.
  const auto pool_task = synth::sample_alignment_task(
      world, synth::AlignMode::kStrong, 2 * cfg.retrieve.pairs,
      derive_stream(cfg.run.seed, kTagRetrieveTask));

  const meta::MetaState init = meta::init_meta_state(
      world, cfg.train, derive_stream(cfg.run.seed, kTagRunRepeat));
  meta::MetaState trained;
  if (!metastate_path.empty()) {
    trained = meta::load_meta_state(metastate_path);
  } else {
    meta::MetaConfig mc = cfg.train;
    const auto kind = cfg.retrieve.strategy;
    mc.encoder_reptile = kind == meta::StrategyKind::kCroma;
    mc.classifier_reptile = kind != meta::StrategyKind::kAlignThenClassify;
    meta::WorldAccess access(world, meta::AccessPolicy::for_strategy(kind));
    trained = meta::croma_meta_train(access, mc,
                                     derive_stream(cfg.run.seed, kTagRunRepeat))
                  .state;
  }

  CsvWriter out({"strategy", "k", "R1", "R5", "R10", "median_rank", "mean_rank",
                 "cosine_loss"});
  const std::vector<size_t> adapt_k = {5, 10};
  const auto emit = [&](const std::string& name, const meta::MetaState& st) {
    for (size_t k : adapt_k) {
      // k-shot alignment: adapt the encoders on the first k train pairs,
      // then rank the held-out test pairs.
      synth::AlignmentTask few = pool_task;
      if (few.train_src.rows < k)
        throw ConfigError("retrieve: pool task has fewer than k train pairs");
      few.train_src.rows = few.train_tgt.rows = k;
      few.train_src.data.resize(k * few.train_src.cols);
      few.train_tgt.data.resize(k * few.train_tgt.cols);
      align::InnerTrainConfig inner;
      inner.steps = cfg.train.inner_steps;
      inner.lr = cfg.train.align_lr;
      const auto adapted =
          align::align_inner_train(st.e_src_meta, st.e_tgt_meta, few, cfg.train.loss,
                                   inner, derive_stream(cfg.run.seed, 4242 + k));
      const auto rep = metrics::retrieval_metrics(adapted.e_src, adapted.e_tgt,
                                                  pool_task.test_src,
                                                  pool_task.test_tgt);
      out.add_row({name, std::to_string(k), format_double(rep.recall_at_1),
                   format_double(rep.recall_at_5), format_double(rep.recall_at_10),
                   format_double(rep.median_rank), format_double(rep.mean_rank),
                   format_double(rep.cosine_loss)});
    }
  };
  emit("no_align", init);
  emit(to_string(cfg.retrieve.strategy), trained);
  out.save(dir + "/retrieval.csv");
  std::cout << "retrieve: wrote retrieval.csv to " << dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// plan

int cmd_plan(const std::string& graph_path, const std::string& from,
             const std::string& to, const std::string& out_dir) {
  const auto graph = analysis::load_graph_csv(graph_path);
  const auto plan = analysis::plan_path(graph, from, to);

  std::cout << "path:";
  for (const auto& v : plan.vertices) std::cout << " " << v;
  std::cout << "\ntotal_error: " << format_double(plan.total_error) << "\n";
  if (plan.direct_error)
    std::cout << "direct_error: " << format_double(*plan.direct_error) << "\n";
  else
    std::cout << "direct_error: none\n";

  CsvWriter w({"step", "kind", "src", "dst", "error"});
  for (size_t i = 0; i < plan.path.size(); ++i) {
    const auto& e = plan.path[i];
    const char* kind = e.kind == analysis::EdgeKind::kClassify  ? "classify"
                       : e.kind == analysis::EdgeKind::kAlign   ? "align"
                                                                : "taskrel";
    w.add_row({std::to_string(i), kind, plan.vertices[i], plan.vertices[i + 1],
               format_double(e.error)});
  }
  w.save(out_dir + "/plan.csv");
  return 0;
}

// ---------------------------------------------------------------------------
// sweep-setcount

int cmd_sweep_setcount(const CommonArgs& args) {
  const ExperimentConfig cfg = load(args);
  require_world(cfg, "concept", "sweep-setcount");
  const auto& sc = cfg.setcount;
  const std::string dir = cfg.run.out_dir;

  CsvWriter sweep({"n_total", "num_sets", "seed", "error"});
  CsvWriter fits({"n_total", "c1", "c2", "s_star"});
  std::vector<double> n_values, s_stars;
  for (size_t n : sc.n_grid) {
    std::vector<double> mean_err(sc.s_grid.size(), 0.0);
    for (size_t seed = 0; seed < sc.seeds; ++seed) {
      const auto world = synth::gen_concept_world(
          cfg.world.concepts, derive_stream(cfg.run.seed, kTagSetcount + seed));
      for (size_t si = 0; si < sc.s_grid.size(); ++si) {
        const double err = analysis::measure_weak_set_error(
            world, sc.s_grid[si], n, sc.obs_noise, sc.eval_samples,
            derive_stream(cfg.run.seed, kTagSetcount + 777 * n + 31 * seed + si));
        sweep.add_row({std::to_string(n), std::to_string(sc.s_grid[si]),
                       std::to_string(seed), format_double(err)});
        mean_err[si] += err / static_cast<double>(sc.seeds);
      }
    }
    std::vector<double> s_values(sc.s_grid.begin(), sc.s_grid.end());
    const auto fit = analysis::fit_set_count(s_values, mean_err, static_cast<double>(n));
    fits.add_row({std::to_string(n), format_double(fit.c1), format_double(fit.c2),
                  format_double(fit.s_star)});
    n_values.push_back(static_cast<double>(n));
    s_stars.push_back(fit.s_star);
  }
  sweep.save(dir + "/setcount.csv");
  fits.save(dir + "/setcount_fit.csv");
  if (n_values.size() >= 2) {
    std::cout << "s_star log-log slope vs N: "
              << format_double(analysis::log_log_slope(n_values, s_stars)) << "\n";
  }
  std::cout << "sweep-setcount: wrote setcount.csv and setcount_fit.csv to " << dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modal generalization laboratory"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string metastate_path;
  std::string graph_path, plan_from, plan_to, plan_out = ".";

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", common.seed_override, "override [run] seed");
    sub->add_option("--out", common.out_override, "override [run] out_dir");
  };

  add_common(app.add_subcommand("tradeoff", "supervision vs alignment sweep"));
  add_common(app.add_subcommand("train", "meta-train and dump a meta state"));
  auto* sub_eval = app.add_subcommand("evaluate", "few-shot evaluation protocol");
  add_common(sub_eval);
  sub_eval->add_option("--metastate", metastate_path, "saved meta state directory");
  auto* sub_retr = app.add_subcommand("retrieve", "cross-modal retrieval metrics");
  add_common(sub_retr);
  sub_retr->add_option("--metastate", metastate_path, "saved meta state directory");
  auto* sub_plan = app.add_subcommand("plan", "lowest-error modality-task path");
  sub_plan->add_option("--graph", graph_path, "edge-list CSV")->required();
  sub_plan->add_option("--from", plan_from, "target modality vertex")->required();
  sub_plan->add_option("--to", plan_to, "target task vertex")->required();
  sub_plan->add_option("--out", plan_out, "output directory for plan.csv");
  add_common(app.add_subcommand("sweep-setcount", "weak-set count study"));

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("tradeoff")) return cmd_tradeoff(common);
    if (app.got_subcommand("train")) return cmd_train(common);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(common, metastate_path);
    if (app.got_subcommand("retrieve")) return cmd_retrieve(common, metastate_path);
    if (app.got_subcommand("plan")) return cmd_plan(graph_path, plan_from, plan_to, plan_out);
    if (app.got_subcommand("sweep-setcount")) return cmd_sweep_setcount(common);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
