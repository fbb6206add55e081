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

#ifndef CROMA_PARALLEL_HPP_
#define CROMA_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace croma {

/// Worker count from the CROMA_THREADS environment variable (the only
/// environment knob); defaults to 1, clamped to [1, 64].
size_t env_thread_count();

/// Runs fn(i) for i in [0, n). Work is handed out by index, so results that
/// land in preallocated per-index slots are identical for any thread count.
void parallel_for(size_t n, size_t threads, const std::function<void(size_t)>& fn);

}  // namespace croma

#endif  // CROMA_PARALLEL_HPP_
