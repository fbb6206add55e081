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

#include "croma/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "croma/csv.hpp"
#include "croma/error.hpp"

namespace croma::analysis {

namespace {

const char* kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::kClassify: return "classify";
    case EdgeKind::kAlign: return "align";
    case EdgeKind::kTaskRel: return "taskrel";
  }
  throw ConfigError("unknown edge kind");
}

EdgeKind kind_from_name(const std::string& s) {
  if (s == "classify") return EdgeKind::kClassify;
  if (s == "align") return EdgeKind::kAlign;
  if (s == "taskrel") return EdgeKind::kTaskRel;
  throw IoError("graph: unknown edge kind '" + s + "'");
}

void add_vertex(std::set<std::string>& modalities, std::set<std::string>& tasks,
                const std::string& v, bool as_modality) {
  auto& mine = as_modality ? modalities : tasks;
  const auto& other = as_modality ? tasks : modalities;
  if (other.count(v)) {
    throw ConfigError("graph: vertex '" + v + "' is used as both a modality and a task");
  }
  mine.insert(v);
}

}  // namespace

ModalityTaskGraph ModalityTaskGraph::from_edges(std::vector<GraphEdge> edges) {
  ModalityTaskGraph g;
  g.edges = std::move(edges);
  std::set<std::string> modalities, tasks;
  for (const auto& e : g.edges) {
    if (e.error < 0.0)
      throw ConfigError("graph: negative error on edge " + e.src + " -> " + e.dst);
    switch (e.kind) {
      case EdgeKind::kClassify:
        add_vertex(modalities, tasks, e.src, true);
        add_vertex(modalities, tasks, e.dst, false);
        break;
      case EdgeKind::kAlign:
        add_vertex(modalities, tasks, e.src, true);
        add_vertex(modalities, tasks, e.dst, true);
        break;
      case EdgeKind::kTaskRel:
        add_vertex(modalities, tasks, e.src, false);
        add_vertex(modalities, tasks, e.dst, false);
        break;
    }
  }
  g.modalities.assign(modalities.begin(), modalities.end());
  g.tasks.assign(tasks.begin(), tasks.end());
  return g;
}

bool ModalityTaskGraph::is_modality(const std::string& v) const {
  return std::binary_search(modalities.begin(), modalities.end(), v);
}

bool ModalityTaskGraph::is_task(const std::string& v) const {
  return std::binary_search(tasks.begin(), tasks.end(), v);
}

void ModalityTaskGraph::check_minimum_visibility() const {
  for (const auto& m : modalities) {
    const bool ok = std::any_of(edges.begin(), edges.end(), [&](const GraphEdge& e) {
      return e.kind == EdgeKind::kClassify && e.src == m;
    });
    if (!ok)
      throw ConfigError("graph: minimum visibility violated, modality '" + m +
                        "' has no classifier edge");
  }
  for (const auto& t : tasks) {
    const bool ok = std::any_of(edges.begin(), edges.end(), [&](const GraphEdge& e) {
      return e.kind == EdgeKind::kClassify && e.dst == t;
    });
    if (!ok)
      throw ConfigError("graph: minimum visibility violated, task '" + t +
                        "' has no incoming classifier edge");
  }
}

ModalityTaskGraph load_graph_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("graph: cannot open '" + path + "'");
  std::string line;
  size_t lineno = 0;
  std::vector<GraphEdge> edges;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      throw IoError("graph: line " + std::to_string(lineno) + " of '" + path +
                    "' has " + std::to_string(cells.size()) + " fields, expected 4");
    }
    if (lineno == 1) {
      if (cells[0] != "kind" || cells[1] != "src" || cells[2] != "dst" ||
          cells[3] != "error")
        throw IoError("graph: line 1 must be the header kind,src,dst,error");
      continue;
    }
    GraphEdge e;
    e.kind = kind_from_name(cells[0]);
    e.src = cells[1];
    e.dst = cells[2];
    try {
      size_t used = 0;
      e.error = std::stod(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw IoError("graph: line " + std::to_string(lineno) + ": bad error value '" +
                    cells[3] + "'");
    }
    edges.push_back(std::move(e));
  }
  if (lineno == 0) throw IoError("graph: '" + path + "' is empty");
  return ModalityTaskGraph::from_edges(std::move(edges));
}

void save_graph_csv(const ModalityTaskGraph& g, const std::string& path) {
  CsvWriter w({"kind", "src", "dst", "error"});
  for (const auto& e : g.edges)
    w.add_row({kind_name(e.kind), e.src, e.dst, format_double(e.error)});
  w.save(path);
}

namespace {

struct Label {
  double cost = 0.0;
  std::vector<std::string> vertices;
  std::vector<GraphEdge> path;

  size_t hops() const { return path.size(); }
};

// Deterministic total order: cost, then hop count, then vertex sequence.
bool label_less(const Label& a, const Label& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.hops() != b.hops()) return a.hops() < b.hops();
  return a.vertices < b.vertices;
}

}  // namespace

PathPlan plan_path(const ModalityTaskGraph& g, const std::string& x_t,
                   const std::string& y_t) {
  if (!g.is_modality(x_t))
    throw ConfigError("plan_path: '" + x_t + "' is not a modality vertex");
  if (!g.is_task(y_t)) throw ConfigError("plan_path: '" + y_t + "' is not a task vertex");
  g.check_minimum_visibility();

  // Expansion per vertex, honoring edge direction rules.
  const auto neighbors = [&](const std::string& v) {
    std::vector<std::pair<std::string, GraphEdge>> out;
    for (const auto& e : g.edges) {
      switch (e.kind) {
        case EdgeKind::kClassify:
          if (e.src == v) out.emplace_back(e.dst, e);
          break;
        case EdgeKind::kAlign:
        case EdgeKind::kTaskRel:
          if (e.src == v) out.emplace_back(e.dst, e);
          if (e.dst == v) out.emplace_back(e.src, e);
          break;
      }
    }
    return out;
  };

  // Label-setting search. Extending a label strictly increases (cost, hops),
  // and two labels at one vertex can never be prefix-related (that would
  // revisit the vertex), so the first label popped per vertex is optimal
  // under the deterministic order.
  auto queue_cmp = [](const Label& a, const Label& b) { return label_less(b, a); };
  std::priority_queue<Label, std::vector<Label>, decltype(queue_cmp)> open(queue_cmp);
  std::set<std::string> done;

  Label start;
  start.vertices.push_back(x_t);
  open.push(start);
  while (!open.empty()) {
    Label cur = open.top();
    open.pop();
    const std::string& v = cur.vertices.back();
    if (done.count(v)) continue;
    done.insert(v);
    if (v == y_t) {
      PathPlan plan;
      plan.vertices = cur.vertices;
      plan.path = cur.path;
      plan.total_error = cur.cost;
      for (const auto& e : g.edges) {
        if (e.kind == EdgeKind::kClassify && e.src == x_t && e.dst == y_t) {
          if (!plan.direct_error || e.error < *plan.direct_error)
            plan.direct_error = e.error;
        }
      }
      return plan;
    }
    for (const auto& [next, edge] : neighbors(v)) {
      if (done.count(next)) continue;
      if (std::find(cur.vertices.begin(), cur.vertices.end(), next) != cur.vertices.end())
        continue;  // keep the path simple
      Label ext = cur;
      ext.cost += edge.error;
      ext.vertices.push_back(next);
      ext.path.push_back(edge);
      open.push(std::move(ext));
    }
  }
  throw ConfigError("plan_path: task '" + y_t + "' is unreachable from '" + x_t + "'");
}

}  // namespace croma::analysis
