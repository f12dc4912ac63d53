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

#include "pipelink/graph/partition.h"

#include <algorithm>
#include <set>

#include "absl/strings/str_cat.h"

namespace pipelink {

std::vector<NodeId> FindCandidates(const ComputationGraph& graph) {
  std::vector<NodeId> candidates;
  for (NodeId v : graph.topo_order()) {
    if (graph.out_degree(v) > 1 && graph.in_degree(v) == 1) {
      candidates.push_back(v);
    }
  }
  return candidates;
}

absl::StatusOr<PartitionPlan> Partition(const ComputationGraph& graph,
                                        const std::vector<NodeId>& candidates) {
  const int n = static_cast<int>(graph.num_nodes());
  std::vector<int> cuts;  // topo positions where a new subgraph starts
  cuts.reserve(candidates.size());
  for (NodeId c : candidates) {
    if (c < 0 || c >= n) {
      return absl::InvalidArgumentError(
          absl::StrCat("candidate ", c, " is not a node of the graph"));
    }
    const int pos = graph.topo_index(c);
    if (pos == 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "candidate ", c, " is the graph source; cutting before it leaves "
          "an empty subgraph"));
    }
    if (!cuts.empty() && pos <= cuts.back()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "candidate ", c, " is duplicated or out of topological order; "
          "cutting there leaves an empty subgraph"));
    }
    cuts.push_back(pos);
  }

  PartitionPlan plan;
  plan.subgraph_of.assign(n, -1);
  int start = 0;
  for (size_t k = 0; k <= cuts.size(); ++k) {
    const int end = k < cuts.size() ? cuts[k] : n;
    std::vector<NodeId> members(graph.topo_order().begin() + start,
                                graph.topo_order().begin() + end);
    for (NodeId v : members) {
      plan.subgraph_of[v] = static_cast<int>(plan.subgraphs.size());
    }
    plan.subgraphs.push_back(std::move(members));
    start = end;
  }

  auto deps = DependencySearch(graph, plan.subgraphs);
  if (!deps.ok()) return deps.status();
  plan.sdm = std::move(deps->sdm);
  plan.rdm = std::move(deps->rdm);
  return plan;
}

absl::StatusOr<DependencyMaps> DependencySearch(
    const ComputationGraph& graph,
    const std::vector<std::vector<NodeId>>& subgraphs) {
  const size_t n = graph.num_nodes();
  std::vector<int> owner(n, -1);
  size_t covered = 0;
  for (size_t s = 0; s < subgraphs.size(); ++s) {
    if (subgraphs[s].empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("subgraph ", s, " is empty"));
    }
    for (NodeId v : subgraphs[s]) {
      if (v < 0 || static_cast<size_t>(v) >= n) {
        return absl::InvalidArgumentError(
            absl::StrCat("subgraph ", s, " references unknown node ", v));
      }
      if (owner[v] != -1) {
        return absl::InvalidArgumentError(absl::StrCat(
            "node ", v, " appears in subgraphs ", owner[v], " and ", s));
      }
      owner[v] = static_cast<int>(s);
      ++covered;
    }
  }
  if (covered != n) {
    for (size_t v = 0; v < n; ++v) {
      if (owner[v] == -1) {
        return absl::InvalidArgumentError(
            absl::StrCat("node ", v, " is not covered by any subgraph"));
      }
    }
  }

  DependencyMaps maps;
  for (const Edge& e : graph.edges()) {
    const int i = owner[e.src];
    const int k = owner[e.dst];
    if (i == k) {
      ++maps.intra_edges;
    } else if (k < i) {
      return absl::FailedPreconditionError(absl::StrCat(
          "edge ", e.src, "->", e.dst, " runs backwards from subgraph ", i,
          " to subgraph ", k));
    } else if (k == i + 1) {
      maps.sdm.push_back({{i, e.src}, {k, e.dst}});
    } else {
      maps.rdm.push_back({{i, e.src}, {k, e.dst}});
    }
  }
  std::sort(maps.sdm.begin(), maps.sdm.end());
  std::sort(maps.rdm.begin(), maps.rdm.end());
  return maps;
}

std::vector<SubModuleProfile> ProfileSubmodules(const ComputationGraph& graph,
                                                const PartitionPlan& plan) {
  std::vector<SubModuleProfile> profiles(plan.size());
  for (size_t j = 0; j < plan.size(); ++j) {
    SubModuleProfile& p = profiles[j];
    p.index = static_cast<int>(j);
    for (NodeId v : plan.subgraphs[j]) {
      p.flops += graph.node(v).flops;
      p.mem_bytes += graph.node(v).mem_bytes;
      // Each producer tensor is shipped once per consuming sub-module.
      std::set<int> targets;
      for (NodeId w : graph.successors(v)) {
        const int k = plan.subgraph_of[w];
        if (k != static_cast<int>(j)) targets.insert(k);
      }
      for (int k : targets) {
        if (graph.node(v).out_bytes > 0) p.out_to[k] += graph.node(v).out_bytes;
      }
    }
  }
  return profiles;
}

Matrix<int64_t> ModuleOutputMatrix(
    const std::vector<SubModuleProfile>& profiles) {
  Matrix<int64_t> out(profiles.size(), profiles.size(), 0);
  for (const SubModuleProfile& p : profiles) {
    for (const auto& [k, bytes] : p.out_to) out(p.index, k) = bytes;
  }
  return out;
}

}  // namespace pipelink
