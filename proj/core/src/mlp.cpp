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

#include "croma/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "croma/error.hpp"
#include "croma/rng.hpp"

namespace croma {

size_t MlpParams::param_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpParams MlpParams::shaped_zeros() const {
  MlpParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    MlpLayer zl;
    zl.weight = Mat::zeros(l.weight.rows, l.weight.cols);
    zl.bias = Mat::zeros(l.bias.rows, l.bias.cols);
    zl.activation = l.activation;
    z.layers.push_back(std::move(zl));
  }
  return z;
}

void MlpParams::validate() const {
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.rows != 1 || l.bias.cols != l.weight.rows) {
      std::ostringstream os;
      os << "MlpParams: layer " << i << " bias shape " << l.bias.rows << "x"
         << l.bias.cols << " does not match " << l.weight.rows << " outputs";
      throw ConfigError(os.str());
    }
    if (i + 1 < layers.size() && layers[i + 1].weight.cols != l.weight.rows) {
      std::ostringstream os;
      os << "MlpParams: layer " << i + 1 << " expects " << layers[i + 1].weight.cols
         << " inputs but layer " << i << " emits " << l.weight.rows;
      throw ConfigError(os.str());
    }
  }
}

MlpParams make_mlp(const std::vector<size_t>& dims,
                   const std::vector<Activation>& activations, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least input and output dims");
  if (activations.size() != dims.size() - 1)
    throw ConfigError("make_mlp: one activation required per layer");
  MlpParams p;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    MlpLayer l;
    const size_t fan_in = dims[i], fan_out = dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    l.weight = Mat(fan_out, fan_in);
    for (auto& w : l.weight.data) w = rng.uniform(-bound, bound);
    l.bias = Mat::zeros(1, fan_out);
    l.activation = activations[i];
    p.layers.push_back(std::move(l));
  }
  return p;
}

MlpParams make_mlp(const std::vector<size_t>& dims, Activation hidden_act,
                   Activation final_act, Rng& rng) {
  std::vector<Activation> acts(dims.size() - 1, hidden_act);
  acts.back() = final_act;
  return make_mlp(dims, acts, rng);
}

namespace {

void apply_activation(Mat& m, Activation a) {
  switch (a) {
    case Activation::kReLU:
      for (auto& x : m.data) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::kTanh:
      for (auto& x : m.data) x = std::tanh(x);
      break;
    case Activation::kIdentity:
      break;
  }
}

// d act / d pre, using pre (ReLU) or post (Tanh) as appropriate.
Mat activation_grad(const Mat& pre, const Mat& post, Activation a) {
  Mat g(pre.rows, pre.cols);
  switch (a) {
    case Activation::kReLU:
      for (size_t i = 0; i < pre.data.size(); ++i) g.data[i] = pre.data[i] > 0.0 ? 1.0 : 0.0;
      break;
    case Activation::kTanh:
      for (size_t i = 0; i < post.data.size(); ++i) g.data[i] = 1.0 - post.data[i] * post.data[i];
      break;
    case Activation::kIdentity:
      for (auto& x : g.data) x = 1.0;
      break;
  }
  return g;
}

}  // namespace

ForwardTrace mlp_forward(const MlpParams& p, const Mat& x) {
  p.validate();
  if (p.layers.empty()) throw ConfigError("mlp_forward: empty network");
  if (x.cols != p.input_dim()) {
    std::ostringstream os;
    os << "mlp_forward: input has " << x.cols << " columns, network expects "
       << p.input_dim();
    throw ConfigError(os.str());
  }
  ForwardTrace t;
  t.input = x;
  const Mat* cur = &t.input;
  for (const auto& l : p.layers) {
    Mat pre = matmul_nt(*cur, l.weight);  // [n x in] . [out x in]^T
    for (size_t i = 0; i < pre.rows; ++i) {
      double* row = pre.row(i);
      for (size_t j = 0; j < pre.cols; ++j) row[j] += l.bias.data[j];
    }
    Mat post = pre;
    apply_activation(post, l.activation);
    t.pre.push_back(std::move(pre));
    t.post.push_back(std::move(post));
    cur = &t.post.back();
  }
  return t;
}

Gradients mlp_backward(const MlpParams& p, const ForwardTrace& trace,
                       const Mat& grad_out) {
  if (trace.post.size() != p.layers.size())
    throw ConfigError("mlp_backward: trace does not match network depth");
  if (!grad_out.same_shape(trace.output()))
    throw ConfigError("mlp_backward: grad_out shape does not match forward output");

  Gradients g;
  g.params = p.shaped_zeros();
  Mat grad_post = grad_out;
  for (size_t li = p.layers.size(); li-- > 0;) {
    const auto& l = p.layers[li];
    const Mat act_g = activation_grad(trace.pre[li], trace.post[li], l.activation);
    const Mat grad_pre = hadamard(grad_post, act_g);
    const Mat& layer_in = li == 0 ? trace.input : trace.post[li - 1];
    g.params.layers[li].weight = matmul_tn(grad_pre, layer_in);  // [out x in]
    g.params.layers[li].bias = col_sums(grad_pre);
    grad_post = matmul(grad_pre, l.weight);  // [n x in]
  }
  g.input = std::move(grad_post);
  return g;
}

MlpParams finite_diff_grad(const std::function<double(const MlpParams&)>& loss,
                           const MlpParams& p, double h) {
  if (h <= 0.0) throw ConfigError("finite_diff_grad: h must be positive");
  MlpParams g = p.shaped_zeros();
  MlpParams probe = p;
  for (size_t li = 0; li < p.layers.size(); ++li) {
    for (Mat MlpLayer::*field : {&MlpLayer::weight, &MlpLayer::bias}) {
      Mat& pm = probe.layers[li].*field;
      Mat& gm = g.layers[li].*field;
      for (size_t i = 0; i < pm.data.size(); ++i) {
        const double orig = pm.data[i];
        pm.data[i] = orig + h;
        const double up = loss(probe);
        pm.data[i] = orig - h;
        const double down = loss(probe);
        pm.data[i] = orig;
        gm.data[i] = (up - down) / (2.0 * h);
      }
    }
  }
  return g;
}

double max_relative_error(const MlpParams& a, const MlpParams& b, double floor) {
  if (a.layers.size() != b.layers.size())
    throw ConfigError("max_relative_error: layer count mismatch");
  double worst = 0.0;
  for (size_t li = 0; li < a.layers.size(); ++li) {
    for (Mat MlpLayer::*field : {&MlpLayer::weight, &MlpLayer::bias}) {
      const Mat& ma = a.layers[li].*field;
      const Mat& mb = b.layers[li].*field;
      if (!ma.same_shape(mb)) throw ConfigError("max_relative_error: shape mismatch");
      for (size_t i = 0; i < ma.data.size(); ++i) {
        const double denom =
            std::max({std::fabs(ma.data[i]), std::fabs(mb.data[i]), floor});
        worst = std::max(worst, std::fabs(ma.data[i] - mb.data[i]) / denom);
      }
    }
  }
  return worst;
}

void axpy(MlpParams& dst, const MlpParams& src, double scale) {
  if (dst.layers.size() != src.layers.size())
    throw ConfigError("axpy: layer count mismatch");
  for (size_t li = 0; li < dst.layers.size(); ++li) {
    for (Mat MlpLayer::*field : {&MlpLayer::weight, &MlpLayer::bias}) {
      Mat& d = dst.layers[li].*field;
      const Mat& s = src.layers[li].*field;
      if (!d.same_shape(s)) throw ConfigError("axpy: shape mismatch");
      for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += scale * s.data[i];
    }
  }
}

void scale_params(MlpParams& p, double s) {
  for (auto& l : p.layers) {
    l.weight *= s;
    l.bias *= s;
  }
}

double param_dot(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) throw ConfigError("param_dot: layer count mismatch");
  double acc = 0.0;
  for (size_t li = 0; li < a.layers.size(); ++li) {
    acc += dot(a.layers[li].weight, b.layers[li].weight);
    acc += dot(a.layers[li].bias, b.layers[li].bias);
  }
  return acc;
}

double param_norm(const MlpParams& p) { return std::sqrt(param_dot(p, p)); }

std::pair<double, Mat> softmax_cross_entropy(const Mat& logits,
                                             const std::vector<int>& labels) {
  if (labels.size() != logits.rows)
    throw ConfigError("softmax_cross_entropy: one label required per row");
  const double n = static_cast<double>(logits.rows);
  Mat grad(logits.rows, logits.cols);
  double loss = 0.0;
  for (size_t i = 0; i < logits.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<size_t>(y) >= logits.cols)
      throw ConfigError("softmax_cross_entropy: label out of range");
    const double* row = logits.row(i);
    double mx = row[0];
    for (size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (size_t j = 0; j < logits.cols; ++j) z += std::exp(row[j] - mx);
    loss += -(row[y] - mx) + std::log(z);
    double* grow = grad.row(i);
    for (size_t j = 0; j < logits.cols; ++j) {
      const double pj = std::exp(row[j] - mx) / z;
      grow[j] = (pj - (static_cast<size_t>(y) == j ? 1.0 : 0.0)) / n;
    }
  }
  return {loss / n, std::move(grad)};
}

std::pair<double, Mat> mse_loss(const Mat& pred, const Mat& target) {
  if (!pred.same_shape(target)) throw ConfigError("mse_loss: shape mismatch");
  const double n = static_cast<double>(pred.rows);
  Mat grad(pred.rows, pred.cols);
  double loss = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    loss += 0.5 * d * d;
    grad.data[i] = d / n;
  }
  return {loss / n, std::move(grad)};
}

}  // namespace croma
