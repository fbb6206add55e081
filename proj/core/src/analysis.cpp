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

#include "croma/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "croma/error.hpp"
#include "croma/parallel.hpp"
#include "croma/rng.hpp"

namespace croma::analysis {

namespace {

Eigen::MatrixXd to_eigen(const Mat& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = 0; j < m.cols; ++j)
      e(static_cast<long>(i), static_cast<long>(j)) = m.at(i, j);
  return e;
}

Mat from_eigen(const Eigen::MatrixXd& e) {
  Mat m(static_cast<size_t>(e.rows()), static_cast<size_t>(e.cols()));
  for (long i = 0; i < e.rows(); ++i)
    for (long j = 0; j < e.cols(); ++j)
      m.at(static_cast<size_t>(i), static_cast<size_t>(j)) = e(i, j);
  return m;
}

}  // namespace

OlsResult ols_fit(const Mat& x, const Mat& y, double ridge) {
  if (x.rows < 1) throw ConfigError("ols_fit: need at least one sample");
  if (x.rows != y.rows) throw ConfigError("ols_fit: X and Y row counts differ");
  if (ridge < 0.0) throw ConfigError("ols_fit: ridge must be >= 0");

  const Eigen::MatrixXd ex = to_eigen(x);
  const Eigen::MatrixXd ey = to_eigen(y);

  OlsResult res;
  if (ridge == 0.0) {
    // Rank-revealing decomposition; a deficient system gets the minimum-norm
    // solution instead of a failed symmetric solve.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ex);
    if (cod.rank() < static_cast<long>(x.cols)) {
      std::cerr << "ols_fit: singular system at ridge=0 (rank " << cod.rank() << " of "
                << x.cols << "), returning minimum-norm solution\n";
      res.used_pseudo_inverse = true;
      res.weights = from_eigen(cod.solve(ey));
      return res;
    }
  }
  Eigen::MatrixXd gram = ex.transpose() * ex;
  gram.diagonal().array() += ridge;
  res.weights = from_eigen(gram.ldlt().solve(ex.transpose() * ey));
  return res;
}

Mat fit_alignment_matrix(const Mat& x1_unsup, const Mat& x2_unsup, double ridge) {
  if (x1_unsup.rows != x2_unsup.rows)
    throw ConfigError("fit_alignment_matrix: pair counts differ");
  // x1 ~= x2 B with B = W^T, so W_hat is the transpose of the regression
  // coefficients.
  return transpose(ols_fit(x2_unsup, x1_unsup, ridge).weights);
}

ErrorPrediction predicted_errors(const synth::LinearWorldConfig& cfg) {
  cfg.validate();
  const double d = static_cast<double>(cfg.d);
  const double s2 = cfg.sigma * cfg.sigma;
  const double sw2 = cfg.sigma_w * cfg.sigma_w;
  ErrorPrediction p;
  p.err_source = d * s2 / static_cast<double>(cfg.n1);
  p.err_target = d * s2 / static_cast<double>(cfg.n2);
  p.err_align = d * d * sw2 / static_cast<double>(cfg.n_align);
  p.err_crossmodal = p.err_align + p.err_source;
  return p;
}

StrategyDecision choose_strategy(const synth::LinearWorldConfig& cfg) {
  cfg.validate();
  const double d = static_cast<double>(cfg.d);
  const double s2 = cfg.sigma * cfg.sigma;
  const double sw2 = cfg.sigma_w * cfg.sigma_w;
  StrategyDecision dec;
  dec.lhs = d * sw2 / static_cast<double>(cfg.n_align) + s2 / static_cast<double>(cfg.n1);
  dec.rhs = s2 / static_cast<double>(cfg.n2);
  dec.choice = dec.lhs < dec.rhs ? StrategyChoice::kCrossModal
                                 : StrategyChoice::kSupervised;
  return dec;
}

namespace {

constexpr uint64_t kTagRiskEval = 51;

// Mean over rows of ((w - u) . x)^2 for a linear predictor against the
// teacher, both given as 1 x d row vectors.
double mean_sq_gap(const Mat& xs, const Mat& w_hat, const Mat& u) {
  double acc = 0.0;
  for (size_t i = 0; i < xs.rows; ++i) {
    double pred = 0.0, truth = 0.0;
    const double* row = xs.row(i);
    for (size_t j = 0; j < xs.cols; ++j) {
      pred += w_hat.at(0, j) * row[j];
      truth += u.at(0, j) * row[j];
    }
    const double gap = pred - truth;
    acc += gap * gap;
  }
  return acc / static_cast<double>(xs.rows);
}

}  // namespace

double measure_risk(const synth::LinearWorld& world, const synth::LinearDatasets& data,
                    RiskMethod method, size_t mc_samples, uint64_t stream_id,
                    RiskEval eval, double ridge) {
  if (eval == RiskEval::kPopulation && mc_samples < 1000)
    throw ConfigError("measure_risk: mc_samples must be >= 1000");
  const auto& cfg = world.cfg;

  // Fit stage.
  Mat w_hat(1, cfg.d);  // effective predictor on the evaluation inputs
  const Mat* teacher = nullptr;
  bool eval_on_source_inputs = false;
  switch (method) {
    case RiskMethod::kSupervisedSource: {
      w_hat = transpose(ols_fit(data.x1_sup, data.y1_sup, ridge).weights);
      teacher = &world.u1;
      eval_on_source_inputs = true;
      break;
    }
    case RiskMethod::kSupervisedTarget: {
      w_hat = transpose(ols_fit(data.x2_sup, data.y2_sup, ridge).weights);
      teacher = &world.u2;
      break;
    }
    case RiskMethod::kCrossModalAligned: {
      // Source model composed with the estimated alignment: the prediction
      // for a target input x2 is w1_hat . (W_hat x2).
      const Mat w1_hat = transpose(ols_fit(data.x1_sup, data.y1_sup, ridge).weights);
      const Mat w_align = fit_alignment_matrix(data.x1_unsup, data.x2_unsup, ridge);
      w_hat = matmul(w1_hat, w_align);  // 1 x d acting on x2
      teacher = &world.u2;
      break;
    }
  }

  // Evaluation stage.
  if (eval == RiskEval::kDesign) {
    const Mat& design = eval_on_source_inputs ? data.x1_sup : data.x2_sup;
    return mean_sq_gap(design, w_hat, *teacher);
  }
  Rng rng(stream_id, kTagRiskEval);
  Mat x2 = Mat::gaussian(mc_samples, cfg.d, rng);
  if (eval_on_source_inputs) {
    const Mat x1 = matmul_nt(x2, world.w);
    return mean_sq_gap(x1, w_hat, *teacher);
  }
  return mean_sq_gap(x2, w_hat, *teacher);
}

std::vector<TradeoffPoint> run_tradeoff_sweep(const synth::LinearWorldConfig& base,
                                              const TradeoffOptions& opt,
                                              uint64_t master_seed) {
  if (opt.n_align_grid.empty() || opt.sigma_w_grid.empty() || opt.seeds == 0)
    throw ConfigError("run_tradeoff_sweep: grids and seeds must be non-empty");
  const size_t max_align =
      *std::max_element(opt.n_align_grid.begin(), opt.n_align_grid.end());

  constexpr uint64_t kTagSeed = 60000;
  constexpr uint64_t kTagNoise = 61000;

  // One result slot per seed keeps the output identical for any worker
  // count; seeds carry fully independent streams.
  std::vector<std::vector<TradeoffPoint>> per_seed(opt.seeds);
  parallel_for(opt.seeds, env_thread_count(), [&](size_t s) {
    const uint64_t seed_stream = derive_stream(master_seed, kTagSeed + s);
    synth::LinearWorldConfig wc = base;
    wc.n_align = max_align;
    wc.sigma_w = 0.0;  // unit noise pool is drawn separately and scaled
    auto [world, clean] =
        synth::gen_linear_world_conditioned(wc, seed_stream, opt.max_world_cond);

    Rng noise_rng(seed_stream, kTagNoise);
    const Mat unit_noise = Mat::gaussian(max_align, wc.d, noise_rng);

    const double sup_src =
        measure_risk(world, clean, RiskMethod::kSupervisedSource, opt.mc_samples,
                     derive_stream(seed_stream, 1), opt.risk_eval);
    const double sup_tgt =
        measure_risk(world, clean, RiskMethod::kSupervisedTarget, opt.mc_samples,
                     derive_stream(seed_stream, 2), opt.risk_eval);
    const uint64_t eval_stream = derive_stream(seed_stream, 3);  // shared across grid

    for (double sw : opt.sigma_w_grid) {
      for (size_t na : opt.n_align_grid) {
        const auto noisy_pairs = [&](double sign) {
          synth::LinearDatasets d = clean;
          d.x1_unsup = Mat(na, wc.d);
          d.x2_unsup = Mat(na, wc.d);
          for (size_t i = 0; i < na; ++i) {
            for (size_t j = 0; j < wc.d; ++j) {
              d.x2_unsup.at(i, j) = clean.x2_unsup.at(i, j);
              d.x1_unsup.at(i, j) =
                  clean.x1_unsup.at(i, j) + sign * sw * unit_noise.at(i, j);
            }
          }
          return d;
        };
        double risk =
            measure_risk(world, noisy_pairs(+1.0), RiskMethod::kCrossModalAligned,
                         opt.mc_samples, eval_stream, opt.risk_eval);
        if (opt.antithetic) {
          risk += measure_risk(world, noisy_pairs(-1.0),
                               RiskMethod::kCrossModalAligned, opt.mc_samples,
                               eval_stream, opt.risk_eval);
          risk *= 0.5;
        }
        per_seed[s].push_back({na, sw, s, RiskMethod::kCrossModalAligned, risk});
        per_seed[s].push_back({na, sw, s, RiskMethod::kSupervisedSource, sup_src});
        per_seed[s].push_back({na, sw, s, RiskMethod::kSupervisedTarget, sup_tgt});
      }
    }
  });

  std::vector<TradeoffPoint> out;
  for (const auto& block : per_seed) out.insert(out.end(), block.begin(), block.end());
  return out;
}

double optimal_set_count(double n_total, double c1, double c2) {
  if (n_total <= 0.0 || c1 <= 0.0 || c2 <= 0.0)
    throw ConfigError("optimal_set_count: all inputs must be positive");
  return std::sqrt(c1 * n_total / c2);
}

bool weak_alignment_preferred(double s, double n_t, double c_s, double c_t) {
  if (s < 1.0 || n_t < 1.0) throw ConfigError("weak_alignment_preferred: S and N_t must be >= 1");
  if (c_s <= 0.0 || c_t <= 0.0)
    throw ConfigError("weak_alignment_preferred: constants must be positive");
  return c_s / s < c_t / n_t;
}

SetCountFit fit_set_count(const std::vector<double>& s_values,
                          const std::vector<double>& errors, double n_total) {
  if (s_values.size() != errors.size() || s_values.size() < 2)
    throw ConfigError("fit_set_count: need matching sweeps with >= 2 points");
  if (n_total <= 0.0) throw ConfigError("fit_set_count: N must be positive");
  // Two-basis least squares: error ~ c1 * (1/S) + c2 * (S/N).
  double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
  for (size_t i = 0; i < s_values.size(); ++i) {
    const double f1 = 1.0 / s_values[i];
    const double f2 = s_values[i] / n_total;
    a11 += f1 * f1;
    a12 += f1 * f2;
    a22 += f2 * f2;
    b1 += f1 * errors[i];
    b2 += f2 * errors[i];
  }
  const double det = a11 * a22 - a12 * a12;
  if (std::fabs(det) < 1e-300) throw NumericError("fit_set_count: degenerate design");
  SetCountFit fit;
  fit.c1 = (a22 * b1 - a12 * b2) / det;
  fit.c2 = (a11 * b2 - a12 * b1) / det;
  if (fit.c1 <= 0.0 || fit.c2 <= 0.0)
    throw NumericError("fit_set_count: fitted constants not positive; sweep is not U-shaped");
  fit.s_star = std::sqrt(fit.c1 * n_total / fit.c2);
  return fit;
}

namespace {
constexpr uint64_t kTagSetAnchors = 52;
constexpr uint64_t kTagSetSamples = 53;
constexpr uint64_t kTagSetEval = 54;

size_t nearest_row(const Mat& anchors, const double* z, size_t dim) {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < anchors.rows; ++a) {
    const double* ar = anchors.row(a);
    double d = 0.0;
    for (size_t j = 0; j < dim; ++j) {
      const double diff = ar[j] - z[j];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}
}  // namespace

double measure_weak_set_error(const synth::ConceptWorld& world, size_t num_sets,
                              size_t n_samples, double obs_noise,
                              size_t eval_samples, uint64_t stream_id) {
  if (num_sets < 1 || n_samples < 1 || eval_samples < 1)
    throw ConfigError("measure_weak_set_error: counts must be >= 1");
  const size_t dim = world.cfg.latent_dim;
  const auto& concepts = world.train_concepts;

  const auto draw_latent = [&](Rng& rng, Mat& out, size_t row) {
    const size_t c = concepts[rng.uniform_int(concepts.size())];
    const Mat z = world.sample_latents(c, 1, rng);
    std::copy(z.row(0), z.row(0) + dim, out.row(row));
  };

  // Set anchors partition the latent space into nearest-anchor cells.
  Rng anchor_rng(stream_id, kTagSetAnchors);
  Mat anchors(num_sets, dim);
  for (size_t a = 0; a < num_sets; ++a) draw_latent(anchor_rng, anchors, a);

  // Noisy member observations accumulate per-set target centers.
  Rng sample_rng(stream_id, kTagSetSamples);
  Mat centers(num_sets, world.cfg.target_dim);
  std::vector<size_t> counts(num_sets, 0);
  Mat global_mean(1, world.cfg.target_dim);
  Mat z(1, dim);
  for (size_t i = 0; i < n_samples; ++i) {
    draw_latent(sample_rng, z, 0);
    const size_t set = nearest_row(anchors, z.row(0), dim);
    Mat obs = world.observe(z, synth::Modality::kTarget);
    for (auto& v : obs.data) v += obs_noise * sample_rng.normal();
    for (size_t j = 0; j < obs.cols; ++j) {
      centers.at(set, j) += obs.at(0, j);
      global_mean.at(0, j) += obs.at(0, j);
    }
    ++counts[set];
  }
  for (size_t j = 0; j < global_mean.cols; ++j)
    global_mean.at(0, j) /= static_cast<double>(n_samples);
  for (size_t a = 0; a < num_sets; ++a) {
    if (counts[a] == 0) {
      // Empty cell: fall back to the global mean.
      std::copy(global_mean.row(0), global_mean.row(0) + global_mean.cols,
                centers.row(a));
    } else {
      for (size_t j = 0; j < centers.cols; ++j)
        centers.at(a, j) /= static_cast<double>(counts[a]);
    }
  }

  // Fresh samples score the center-as-prediction rule against the clean
  // target image.
  Rng eval_rng(stream_id, kTagSetEval);
  double acc = 0.0;
  for (size_t i = 0; i < eval_samples; ++i) {
    draw_latent(eval_rng, z, 0);
    const size_t set = nearest_row(anchors, z.row(0), dim);
    const Mat truth = world.observe(z, synth::Modality::kTarget);
    double err = 0.0;
    for (size_t j = 0; j < truth.cols; ++j) {
      const double diff = centers.at(set, j) - truth.at(0, j);
      err += diff * diff;
    }
    acc += err;
  }
  return acc / static_cast<double>(eval_samples);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("log_log_slope: need matching series with >= 2 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0)
      throw ConfigError("log_log_slope: values must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (std::fabs(denom) < 1e-300) throw NumericError("log_log_slope: degenerate x values");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace croma::analysis
