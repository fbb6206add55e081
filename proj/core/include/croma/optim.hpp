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

#ifndef CROMA_OPTIM_HPP_
#define CROMA_OPTIM_HPP_

#include "croma/mlp.hpp"

namespace croma {

enum class OptKind { kSgd, kAdam };

/// First-order optimizer state. Adam keeps bias-corrected first/second
/// moment buffers shaped like the parameters; SGD carries only the rate.
struct OptState {
  OptKind kind = OptKind::kSgd;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  MlpParams m;  // first moments (Adam)
  MlpParams v;  // second moments (Adam)

  static OptState sgd(double lr);
  static OptState adam(double lr, const MlpParams& shape, double beta1 = 0.9,
                       double beta2 = 0.999, double eps = 1e-8);
};

/// One optimizer step. Gradients are checked for finiteness first; a
/// non-finite entry raises NumericError naming the coordinate.
void opt_step(MlpParams& p, const MlpParams& g, OptState& s);

}  // namespace croma

#endif  // CROMA_OPTIM_HPP_
