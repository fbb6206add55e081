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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "croma/error.hpp"
#include "croma/mlp.hpp"
#include "croma/optim.hpp"
#include "croma/rng.hpp"

using namespace croma;

namespace {

MlpParams single_layer(double w, double b, Activation act) {
  MlpParams p;
  MlpLayer l;
  l.weight = Mat{{w}};
  l.bias = Mat{{b}};
  l.activation = act;
  p.layers.push_back(l);
  return p;
}

MlpParams random_net(const std::vector<size_t>& dims, Activation hidden,
                     Activation out, uint64_t seed) {
  Rng rng(seed);
  return make_mlp(dims, hidden, out, rng);
}

}  // namespace

TEST_CASE("matmul basics") {
  const Mat a{{1, 2}, {3, 4}};
  const Mat b{{5, 6}, {7, 8}};
  const Mat c = matmul(a, b);
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);
  CHECK_THROWS_AS(matmul(a, Mat(3, 2)), ConfigError);

  // a . b^T and a^T . b agree with explicit transposes.
  const Mat bt = transpose(b);
  const Mat via_nt = matmul_nt(a, bt);
  const Mat via_plain = matmul(a, b);
  for (size_t i = 0; i < via_plain.size(); ++i)
    CHECK(via_nt.data[i] == doctest::Approx(via_plain.data[i]));
}

TEST_CASE("mlp_forward linear map example") {
  const auto p = single_layer(2.0, 0.0, Activation::kIdentity);
  const auto t = mlp_forward(p, Mat{{3.0}});
  CHECK(t.output().at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("mlp_forward relu clips negatives") {
  const auto p = single_layer(1.0, -5.0, Activation::kReLU);
  const auto t = mlp_forward(p, Mat{{3.0}});
  CHECK(t.output().at(0, 0) == 0.0);
}

TEST_CASE("mlp_forward shape contract and determinism") {
  const auto p = random_net({7, 5, 3}, Activation::kTanh, Activation::kIdentity, 11);
  Rng rng(12);
  const Mat x = Mat::gaussian(4, 7, rng);
  const auto t1 = mlp_forward(p, x);
  const auto t2 = mlp_forward(p, x);
  CHECK(t1.output().rows == 4);
  CHECK(t1.output().cols == 3);
  CHECK(t1.output().data == t2.output().data);  // bit-identical
  CHECK_THROWS_AS(mlp_forward(p, Mat(4, 6)), ConfigError);
}

TEST_CASE("mlp_backward product rule example") {
  const auto p = single_layer(2.0, 0.0, Activation::kIdentity);
  const auto t = mlp_forward(p, Mat{{3.0}});
  const auto g = mlp_backward(p, t, Mat{{1.0}});
  CHECK(g.params.layers[0].weight.at(0, 0) == doctest::Approx(3.0));
  CHECK(g.input.at(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("mlp_backward relu dead region") {
  const auto p = single_layer(1.0, 0.0, Activation::kReLU);
  const auto t = mlp_forward(p, Mat{{-2.0}});
  const auto g = mlp_backward(p, t, Mat{{1.0}});
  CHECK(g.params.layers[0].weight.at(0, 0) == 0.0);
  CHECK(g.input.at(0, 0) == 0.0);
}

TEST_CASE("finite_diff_grad scalar examples") {
  // loss(w) = w^2 at w = 3: derivative 6.
  auto p = single_layer(3.0, 0.0, Activation::kIdentity);
  const auto quad = [](const MlpParams& q) {
    const double w = q.layers[0].weight.at(0, 0);
    return w * w;
  };
  const auto g = finite_diff_grad(quad, p, 1e-5);
  CHECK(g.layers[0].weight.at(0, 0) == doctest::Approx(6.0).epsilon(1e-6));

  const auto constant = [](const MlpParams&) { return 7.5; };
  const auto gz = finite_diff_grad(constant, p, 1e-5);
  CHECK(gz.layers[0].weight.at(0, 0) == 0.0);
  CHECK(gz.layers[0].bias.at(0, 0) == 0.0);

  CHECK_THROWS_AS(finite_diff_grad(quad, p, 0.0), ConfigError);
}

// The central oracle property: analytic backprop matches central differences
// on every loss shape we use, over many seeded instances.
TEST_CASE("backprop matches finite differences on composite losses") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Activation hidden = seed % 2 == 0 ? Activation::kTanh : Activation::kReLU;
    const auto p = random_net({4, 6, 3}, hidden, Activation::kIdentity, 100 + seed);
    Rng rng(200 + seed);
    const Mat x = Mat::gaussian(5, 4, rng);
    std::vector<int> labels;
    for (size_t i = 0; i < 5; ++i) labels.push_back(static_cast<int>(rng.uniform_int(3)));

    // Cross-entropy through the net.
    const auto ce_loss = [&](const MlpParams& q) {
      const auto t = mlp_forward(q, x);
      return softmax_cross_entropy(t.output(), labels).first;
    };
    const auto t = mlp_forward(p, x);
    const auto [ce, gce] = softmax_cross_entropy(t.output(), labels);
    (void)ce;
    const auto analytic = mlp_backward(p, t, gce).params;
    const auto numeric = finite_diff_grad(ce_loss, p, 1e-5);
    CHECK(max_relative_error(analytic, numeric, 1e-6) < 1e-4);

    // MSE against a fixed target.
    const Mat target = Mat::gaussian(5, 3, rng);
    const auto mse = [&](const MlpParams& q) {
      const auto tt = mlp_forward(q, x);
      return mse_loss(tt.output(), target).first;
    };
    const auto [ml, gm] = mse_loss(t.output(), target);
    (void)ml;
    const auto analytic_mse = mlp_backward(p, t, gm).params;
    const auto numeric_mse = finite_diff_grad(mse, p, 1e-5);
    CHECK(max_relative_error(analytic_mse, numeric_mse, 1e-6) < 1e-4);
  }
}

TEST_CASE("softmax cross entropy hand value") {
  const Mat logits{{0.0, 0.0}};
  const auto [loss, grad] = softmax_cross_entropy(logits, {0});
  CHECK(loss == doctest::Approx(std::log(2.0)));
  CHECK(grad.at(0, 0) == doctest::Approx(-0.5));
  CHECK(grad.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("opt_step sgd arithmetic and zero-gradient identity") {
  auto p = single_layer(1.0, 0.0, Activation::kIdentity);
  auto g = p.shaped_zeros();
  g.layers[0].weight.at(0, 0) = 2.0;
  auto s = OptState::sgd(0.1);
  opt_step(p, g, s);
  CHECK(p.layers[0].weight.at(0, 0) == doctest::Approx(0.8));

  // Zero gradient leaves parameters untouched for both optimizers.
  auto p2 = single_layer(1.5, -0.25, Activation::kIdentity);
  auto zero = p2.shaped_zeros();
  auto sgd = OptState::sgd(0.3);
  opt_step(p2, zero, sgd);
  CHECK(p2.layers[0].weight.at(0, 0) == 1.5);
  CHECK(p2.layers[0].bias.at(0, 0) == -0.25);

  auto p3 = single_layer(1.5, -0.25, Activation::kIdentity);
  auto adam = OptState::adam(0.3, p3);
  opt_step(p3, zero, adam);
  CHECK(p3.layers[0].weight.at(0, 0) == 1.5);
  CHECK(p3.layers[0].bias.at(0, 0) == -0.25);
}

TEST_CASE("adam reaches the quadratic minimizer") {
  // loss(w) = (w - 3)^2 has its minimum at w = 3 in closed form.
  auto p = single_layer(-1.0, 0.0, Activation::kIdentity);
  auto s = OptState::adam(0.05, p);
  for (int step = 0; step < 2000; ++step) {
    auto g = p.shaped_zeros();
    g.layers[0].weight.at(0, 0) = 2.0 * (p.layers[0].weight.at(0, 0) - 3.0);
    opt_step(p, g, s);
  }
  CHECK(std::fabs(p.layers[0].weight.at(0, 0) - 3.0) < 1e-3);
}

TEST_CASE("opt_step rejects non-finite gradients naming the coordinate") {
  auto p = single_layer(1.0, 0.0, Activation::kIdentity);
  auto g = p.shaped_zeros();
  g.layers[0].weight.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  auto s = OptState::sgd(0.1);
  CHECK_THROWS_WITH_AS(opt_step(p, g, s),
                       doctest::Contains("layer 0 weight (0, 0)"), NumericError);
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a(42, 7);
  Rng b(42, 7);
  Rng c(42, 8);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform_int covers its range uniformly enough") {
  Rng rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_int(7)];
  for (int c : counts) CHECK(std::fabs(c - 10000.0) < 500.0);
}
