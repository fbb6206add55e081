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

#ifndef CROMA_GRAPH_HPP_
#define CROMA_GRAPH_HPP_

#include <optional>
#include <string>
#include <vector>

namespace croma::analysis {

// Bipartite modality-task graph with error-weighted edges. Classifier edges
// run from a modality to a task; alignment edges connect two modalities and
// are traversable both ways; task-relation edges connect two tasks, also
// both ways. Generalizing to a low-resource (modality, task) pair means
// finding the path of lowest cumulative error from that modality vertex to
// that task vertex.

enum class EdgeKind { kClassify, kAlign, kTaskRel };

struct GraphEdge {
  EdgeKind kind = EdgeKind::kClassify;
  std::string src;
  std::string dst;
  double error = 0.0;
};

struct ModalityTaskGraph {
  std::vector<GraphEdge> edges;
  std::vector<std::string> modalities;  // sorted, derived from edges
  std::vector<std::string> tasks;       // sorted, derived from edges

  static ModalityTaskGraph from_edges(std::vector<GraphEdge> edges);

  bool is_modality(const std::string& v) const;
  bool is_task(const std::string& v) const;

  /// Minimum visibility: every modality has at least one classifier edge out
  /// and every task at least one classifier edge in. Throws ConfigError.
  void check_minimum_visibility() const;
};

/// Edge-list CSV with header kind,src,dst,error and kinds
/// {classify, align, taskrel}. Parse failures name the offending line.
ModalityTaskGraph load_graph_csv(const std::string& path);
void save_graph_csv(const ModalityTaskGraph& g, const std::string& path);

struct PathPlan {
  std::vector<std::string> vertices;  // x_t ... y_t
  std::vector<GraphEdge> path;        // edges along the plan
  double total_error = 0.0;
  std::optional<double> direct_error;  // classify edge x_t -> y_t, if any
};

/// Minimum-total-error simple path from a modality vertex to a task vertex.
/// Ties resolve to fewer edges, then to the lexicographically smallest
/// vertex sequence, so output is deterministic. Unreachable targets throw
/// ConfigError.
PathPlan plan_path(const ModalityTaskGraph& g, const std::string& x_t,
                   const std::string& y_t);

}  // namespace croma::analysis

#endif  // CROMA_GRAPH_HPP_
