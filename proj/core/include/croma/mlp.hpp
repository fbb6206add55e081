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

#ifndef CROMA_MLP_HPP_
#define CROMA_MLP_HPP_

#include <functional>
#include <vector>

#include "croma/mat.hpp"

namespace croma {

class Rng;

enum class Activation { kReLU, kTanh, kIdentity };

/// One dense layer: y = act(x W^T + b).
struct MlpLayer {
  Mat weight;  // out x in
  Mat bias;    // 1 x out
  Activation activation = Activation::kIdentity;
};

/// A stack of dense layers. Doubles as the shape carrier for gradients and
/// optimizer moment buffers, which reuse the layer layout.
struct MlpParams {
  std::vector<MlpLayer> layers;

  size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
  size_t param_count() const;

  MlpParams shaped_zeros() const;

  /// Dimension compatibility between adjacent layers.
  void validate() const;
};

/// Uniform init on [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))],
/// zero biases. `dims` = {in, hidden..., out}; one activation per layer.
MlpParams make_mlp(const std::vector<size_t>& dims,
                   const std::vector<Activation>& activations, Rng& rng);

/// Convenience: hidden layers use `hidden_act`, final layer `final_act`.
MlpParams make_mlp(const std::vector<size_t>& dims, Activation hidden_act,
                   Activation final_act, Rng& rng);

struct ForwardTrace {
  Mat input;
  std::vector<Mat> pre;   // per layer, before activation
  std::vector<Mat> post;  // per layer, after activation

  const Mat& output() const { return post.back(); }
};

/// Forward pass over a row-batch x. The trace holds everything needed for an
/// exact reverse pass.
ForwardTrace mlp_forward(const MlpParams& p, const Mat& x);

struct Gradients {
  MlpParams params;  // same shapes as the network
  Mat input;         // d loss / d input batch
};

/// Exact reverse-mode gradients of the traced forward pass.
Gradients mlp_backward(const MlpParams& p, const ForwardTrace& trace,
                       const Mat& grad_out);

/// Central-difference gradient of an arbitrary scalar loss of the parameters.
/// This is the verification oracle for every analytic gradient in the
/// project; it must stay independent of mlp_backward.
MlpParams finite_diff_grad(const std::function<double(const MlpParams&)>& loss,
                           const MlpParams& p, double h);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor) over all parameters.
double max_relative_error(const MlpParams& a, const MlpParams& b,
                          double floor = 1e-8);

// Elementwise helpers over parameter stacks (used by optimizers and the
// Reptile update).
void axpy(MlpParams& dst, const MlpParams& src, double scale);
void scale_params(MlpParams& p, double s);
double param_dot(const MlpParams& a, const MlpParams& b);
double param_norm(const MlpParams& p);

/// Mean softmax cross-entropy over rows of `logits` with integer labels.
/// Returns the loss and d loss / d logits.
std::pair<double, Mat> softmax_cross_entropy(const Mat& logits,
                                             const std::vector<int>& labels);

/// Mean squared error 1/(2n) * sum ||pred_i - target_i||^2 and its gradient.
std::pair<double, Mat> mse_loss(const Mat& pred, const Mat& target);

}  // namespace croma

#endif  // CROMA_MLP_HPP_
