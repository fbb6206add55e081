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

#ifndef CROMA_ANALYSIS_HPP_
#define CROMA_ANALYSIS_HPP_

#include <cstdint>

#include "croma/concept_world.hpp"
#include "croma/linear_world.hpp"
#include "croma/mat.hpp"

namespace croma::analysis {

struct OlsResult {
  Mat weights;  // d x m, minimizes |X B - Y|^2 + ridge |B|^2
  bool used_pseudo_inverse = false;
};

/// Normal equations with a symmetric solve. At ridge = 0 a rank-deficient
/// system falls back to the minimum-norm least-squares solution (documented
/// pseudo-inverse behavior) and prints a one-line warning to stderr.
OlsResult ols_fit(const Mat& x, const Mat& y, double ridge);

constexpr double kDefaultRidge = 1e-8;

/// Estimate of the alignment map: regresses x1 on x2 over the unsupervised
/// pairs and returns W_hat (d x d) in the same orientation as the world's W,
/// i.e. x1 ~= W_hat x2.
Mat fit_alignment_matrix(const Mat& x1_unsup, const Mat& x2_unsup,
                         double ridge = kDefaultRidge);

/// The closed-form error scalings of the linear tradeoff analysis.
struct ErrorPrediction {
  double err_source = 0.0;      // d sigma^2 / n1
  double err_target = 0.0;      // d sigma^2 / n2
  double err_align = 0.0;       // d^2 sigma_W^2 / n_align
  double err_crossmodal = 0.0;  // err_align + err_source
};

ErrorPrediction predicted_errors(const synth::LinearWorldConfig& cfg);

enum class StrategyChoice { kSupervised, kCrossModal };

/// Rule-of-thumb decision: cross-modal is preferred when
/// d sigma_W^2 / n_align + sigma^2 / n1 < sigma^2 / n2. Note the first term
/// carries d, not d^2, exactly as the rule is stated; the ErrorPrediction
/// formulas carry d^2 for the full alignment matrix. Both forms are kept
/// verbatim. Ties resolve to supervised.
struct StrategyDecision {
  StrategyChoice choice = StrategyChoice::kSupervised;
  double lhs = 0.0;
  double rhs = 0.0;
};

StrategyDecision choose_strategy(const synth::LinearWorldConfig& cfg);

enum class RiskMethod { kSupervisedSource, kSupervisedTarget, kCrossModalAligned };

/// Where the excess risk expectation is taken.
///  - kPopulation: Monte-Carlo over mc_samples fresh x2 ~ N(0, I) (fresh
///    x1 = W x2 for the source method).
///  - kDesign: average over the observed supervised design of the task being
///    solved (D1 inputs for the source method, D2 inputs for the target-task
///    methods). This is the regime in which the d sigma^2 / n expressions
///    are exact, and is what the tradeoff experiment reports.
enum class RiskEval { kPopulation, kDesign };

/// Excess risk of one method against the noiseless teacher; the irreducible
/// sigma^2 never enters because predictions are compared to u_m . x_m.
double measure_risk(const synth::LinearWorld& world, const synth::LinearDatasets& data,
                    RiskMethod method, size_t mc_samples, uint64_t stream_id,
                    RiskEval eval = RiskEval::kPopulation,
                    double ridge = kDefaultRidge);

/// One measured point of the supervision-vs-alignment sweep.
struct TradeoffPoint {
  size_t n_align = 0;
  double sigma_w = 0.0;
  size_t seed = 0;
  RiskMethod method = RiskMethod::kSupervisedTarget;
  double risk = 0.0;
};

struct TradeoffOptions {
  std::vector<size_t> n_align_grid;
  std::vector<double> sigma_w_grid;
  size_t seeds = 50;
  size_t mc_samples = 4000;
  RiskEval risk_eval = RiskEval::kDesign;
  // Antithetic alignment noise cancels the odd cross terms exactly.
  bool antithetic = true;
  double max_world_cond = 30.0;
};

/// The supervision-vs-alignment experiment. Within a seed, every grid point
/// shares the world, the supervised fits, the alignment input pool and one
/// unit noise pool scaled by sigma_w, so curves are directly comparable
/// point to point.
std::vector<TradeoffPoint> run_tradeoff_sweep(const synth::LinearWorldConfig& base,
                                              const TradeoffOptions& opt,
                                              uint64_t master_seed);

/// S* = sqrt(c1 N / c2); all inputs must be positive.
double optimal_set_count(double n_total, double c1, double c2);

/// True when weak alignment wins: c_s / S < c_t / N_t (ties favor
/// supervised).
bool weak_alignment_preferred(double s, double n_t, double c_s, double c_t);

/// Least-squares fit of error ~= c1 / S + c2 * S / N over a measured sweep.
struct SetCountFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double s_star = 0.0;  // sqrt(c1 N / c2)
};

SetCountFit fit_set_count(const std::vector<double>& s_values,
                          const std::vector<double>& errors, double n_total);

/// Weak-set alignment error for the set-count study: N concept-world samples
/// are grouped into S sets (nearest of S latent anchors); the target-space
/// center of each set is estimated from noisy member observations, and the
/// error is the mean squared gap between a fresh sample's predicted center
/// and its clean target image. Behaves like c1/S + c2*S/N.
double measure_weak_set_error(const synth::ConceptWorld& world, size_t num_sets,
                              size_t n_samples, double obs_noise,
                              size_t eval_samples, uint64_t stream_id);

/// Slope of the least-squares line through (log x, log y).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace croma::analysis

#endif  // CROMA_ANALYSIS_HPP_
