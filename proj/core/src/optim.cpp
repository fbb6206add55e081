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

#include "croma/optim.hpp"

#include <cmath>
#include <sstream>

#include "croma/error.hpp"

namespace croma {

OptState OptState::sgd(double lr) {
  OptState s;
  s.kind = OptKind::kSgd;
  s.lr = lr;
  return s;
}

OptState OptState::adam(double lr, const MlpParams& shape, double beta1,
                        double beta2, double eps) {
  OptState s;
  s.kind = OptKind::kAdam;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.m = shape.shaped_zeros();
  s.v = shape.shaped_zeros();
  return s;
}

namespace {

void check_grad_finite(const MlpParams& g) {
  for (size_t li = 0; li < g.layers.size(); ++li) {
    for (Mat MlpLayer::*field : {&MlpLayer::weight, &MlpLayer::bias}) {
      const Mat& m = g.layers[li].*field;
      for (size_t i = 0; i < m.data.size(); ++i) {
        if (!std::isfinite(m.data[i])) {
          std::ostringstream os;
          os << "opt_step: non-finite gradient " << m.data[i] << " in layer " << li
             << (field == &MlpLayer::weight ? " weight (" : " bias (") << i / m.cols
             << ", " << i % m.cols << ")";
          throw NumericError(os.str());
        }
      }
    }
  }
}

}  // namespace

void opt_step(MlpParams& p, const MlpParams& g, OptState& s) {
  if (p.layers.size() != g.layers.size())
    throw ConfigError("opt_step: gradient does not match parameter shapes");
  check_grad_finite(g);

  if (s.kind == OptKind::kSgd) {
    axpy(p, g, -s.lr);
    ++s.step_count;
    return;
  }

  ++s.step_count;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  for (size_t li = 0; li < p.layers.size(); ++li) {
    for (Mat MlpLayer::*field : {&MlpLayer::weight, &MlpLayer::bias}) {
      Mat& pm = p.layers[li].*field;
      const Mat& gm = g.layers[li].*field;
      Mat& mm = s.m.layers[li].*field;
      Mat& vm = s.v.layers[li].*field;
      if (!pm.same_shape(gm)) throw ConfigError("opt_step: gradient shape mismatch");
      for (size_t i = 0; i < pm.data.size(); ++i) {
        mm.data[i] = s.beta1 * mm.data[i] + (1.0 - s.beta1) * gm.data[i];
        vm.data[i] = s.beta2 * vm.data[i] + (1.0 - s.beta2) * gm.data[i] * gm.data[i];
        const double mhat = mm.data[i] / bc1;
        const double vhat = vm.data[i] / bc2;
        pm.data[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
      }
    }
  }
}

}  // namespace croma
