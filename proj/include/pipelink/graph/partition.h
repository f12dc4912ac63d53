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

#ifndef PIPELINK_GRAPH_PARTITION_H_
#define PIPELINK_GRAPH_PARTITION_H_

#include <cstdint>
#include <map>
#include <vector>

#include "absl/status/statusor.h"
#include "pipelink/common/matrix.h"
#include "pipelink/graph/graph.h"

namespace pipelink {

struct NodeRef {
  int subgraph = 0;
  NodeId node = 0;

  bool operator==(const NodeRef&) const = default;
  auto operator<=>(const NodeRef&) const = default;
};

// Cross-subgraph edge between adjacent subgraphs (consumer index = producer
// index + 1).
struct SequentialDep {
  NodeRef producer;
  NodeRef consumer;

  bool operator==(const SequentialDep&) const = default;
  auto operator<=>(const SequentialDep&) const = default;
};

// Cross-subgraph edge that skips at least one subgraph.
struct ResidualDep {
  NodeRef producer;
  NodeRef consumer;

  bool operator==(const ResidualDep&) const = default;
  auto operator<=>(const ResidualDep&) const = default;
};

struct DependencyMaps {
  std::vector<SequentialDep> sdm;
  std::vector<ResidualDep> rdm;
  int intra_edges = 0;
};

// Ordered disjoint cover of a graph by contiguous topological slices.
struct PartitionPlan {
  std::vector<std::vector<NodeId>> subgraphs;
  std::vector<SequentialDep> sdm;
  std::vector<ResidualDep> rdm;
  // subgraph_of[node] = index of the subgraph containing `node`.
  std::vector<int> subgraph_of;

  size_t size() const { return subgraphs.size(); }
};

// Per-sub-module aggregate profile. `out_to` is one row of the
// module-to-module output matrix: target index -> bytes, strictly forward.
struct SubModuleProfile {
  int index = 0;
  int64_t flops = 0;
  int64_t mem_bytes = 0;
  std::map<int, int64_t> out_to;
};

// Nodes with out-degree > 1 and in-degree exactly 1, in topological order.
std::vector<NodeId> FindCandidates(const ComputationGraph& graph);

// Cuts the topological order immediately before every candidate. The first
// subgraph starts at the graph source and the last one runs to the sink.
// Candidates must be distinct, sorted by topological index, and must not be
// the source (each would otherwise leave an empty subgraph).
absl::StatusOr<PartitionPlan> Partition(const ComputationGraph& graph,
                                        const std::vector<NodeId>& candidates);

// Classifies every edge as intra-subgraph, sequential or residual. Fails if
// `subgraphs` is not a disjoint cover or if any edge points backwards.
absl::StatusOr<DependencyMaps> DependencySearch(
    const ComputationGraph& graph,
    const std::vector<std::vector<NodeId>>& subgraphs);

std::vector<SubModuleProfile> ProfileSubmodules(const ComputationGraph& graph,
                                                const PartitionPlan& plan);

// Dense n x n view of the `out_to` rows.
Matrix<int64_t> ModuleOutputMatrix(
    const std::vector<SubModuleProfile>& profiles);

}  // namespace pipelink

#endif  // PIPELINK_GRAPH_PARTITION_H_
