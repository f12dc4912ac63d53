/* Copyright 2026 The Pipelink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pipelink/graph/graph.h"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace pipelink {
namespace {

// Returns the node sequence of some cycle, closed (first == last), or an
// empty vector if the graph is acyclic.
std::vector<NodeId> FindCycle(const std::vector<std::vector<NodeId>>& succ) {
  const size_t n = succ.size();
  enum Color : uint8_t { kWhite, kGray, kBlack };
  std::vector<Color> color(n, kWhite);
  std::vector<NodeId> parent(n, -1);
  for (size_t root = 0; root < n; ++root) {
    if (color[root] != kWhite) continue;
    // Stack of (node, next successor slot).
    std::vector<std::pair<NodeId, size_t>> stack = {{NodeId(root), 0}};
    color[root] = kGray;
    while (!stack.empty()) {
      auto& [v, slot] = stack.back();
      if (slot == succ[v].size()) {
        color[v] = kBlack;
        stack.pop_back();
        continue;
      }
      const NodeId w = succ[v][slot++];
      if (color[w] == kGray) {
        std::vector<NodeId> cycle = {w};
        for (NodeId u = v; u != w; u = parent[u]) cycle.push_back(u);
        cycle.push_back(w);
        std::reverse(cycle.begin(), cycle.end());
        return cycle;
      }
      if (color[w] == kWhite) {
        color[w] = kGray;
        parent[w] = v;
        stack.push_back({w, 0});
      }
    }
  }
  return {};
}

}  // namespace

absl::StatusOr<ComputationGraph> ComputationGraph::Create(
    std::vector<NodeProfile> nodes, std::vector<Edge> edges) {
  if (nodes.empty()) return absl::InvalidArgumentError("graph has no nodes");
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeProfile& a, const NodeProfile& b) {
              return a.id < b.id;
            });
  const NodeId n = static_cast<NodeId>(nodes.size());
  for (NodeId i = 0; i < n; ++i) {
    const NodeProfile& p = nodes[i];
    if (i > 0 && nodes[i - 1].id == p.id) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate node id ", p.id));
    }
    if (p.id != i) {
      return absl::InvalidArgumentError(absl::StrCat(
          "node ids must be dense 0..", n - 1, "; unexpected id ", p.id));
    }
    if (p.flops < 0 || p.mem_bytes < 0 || p.out_bytes < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("node ", p.id, " has a negative profile value"));
    }
  }

  ComputationGraph g;
  g.succ_.resize(n);
  g.pred_.resize(n);
  std::set<Edge> seen;
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "edge ", e.src, "->", e.dst, " references an unknown node"));
    }
    if (!seen.insert(e).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate edge ", e.src, "->", e.dst));
    }
    g.succ_[e.src].push_back(e.dst);
    g.pred_[e.dst].push_back(e.src);
  }
  if (std::vector<NodeId> cycle = FindCycle(g.succ_); !cycle.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("graph contains a cycle: ", absl::StrJoin(cycle, " -> ")));
  }

  std::vector<NodeId> sources;
  std::vector<NodeId> sinks;
  for (NodeId v = 0; v < n; ++v) {
    std::sort(g.succ_[v].begin(), g.succ_[v].end());
    std::sort(g.pred_[v].begin(), g.pred_[v].end());
    if (g.pred_[v].empty()) sources.push_back(v);
    if (g.succ_[v].empty()) sinks.push_back(v);
  }
  if (sources.size() != 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "graph must have exactly one source, found [",
        absl::StrJoin(sources, ","), "]"));
  }
  if (sinks.size() != 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "graph must have exactly one sink, found [", absl::StrJoin(sinks, ","),
        "]"));
  }

  std::vector<int> indeg(n);
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId v = 0; v < n; ++v) {
    indeg[v] = static_cast<int>(g.pred_[v].size());
    if (indeg[v] == 0) ready.push(v);
  }
  g.topo_index_.assign(n, -1);
  while (!ready.empty()) {
    const NodeId v = ready.top();
    ready.pop();
    g.topo_index_[v] = static_cast<int>(g.topo_order_.size());
    g.topo_order_.push_back(v);
    for (NodeId w : g.succ_[v]) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }

  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  return g;
}

int64_t ComputationGraph::total_flops() const {
  int64_t total = 0;
  for (const NodeProfile& p : nodes_) total += p.flops;
  return total;
}

int64_t ComputationGraph::total_mem_bytes() const {
  int64_t total = 0;
  for (const NodeProfile& p : nodes_) total += p.mem_bytes;
  return total;
}

NodeId GraphBuilder::AddNode(std::string kind, int64_t flops,
                             int64_t mem_bytes, int64_t out_bytes) {
  const NodeId id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back({id, std::move(kind), flops, mem_bytes, out_bytes});
  return id;
}

absl::StatusOr<ComputationGraph> GraphBuilder::Build() && {
  return ComputationGraph::Create(std::move(nodes_), std::move(edges_));
}

}  // namespace pipelink
