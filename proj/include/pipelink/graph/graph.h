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

#ifndef PIPELINK_GRAPH_GRAPH_H_
#define PIPELINK_GRAPH_GRAPH_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"

namespace pipelink {

using NodeId = int32_t;

// Profile of one operation in a computation graph. `flops` is a count of
// floating point operations; memory and output sizes are bytes.
struct NodeProfile {
  NodeId id = 0;
  std::string kind;
  int64_t flops = 0;
  int64_t mem_bytes = 0;
  int64_t out_bytes = 0;

  bool operator==(const NodeProfile&) const = default;
};

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// An immutable, validated, profiled DAG with exactly one source and one sink.
//
// Node ids are dense (0..n-1). The topological order is computed at
// construction by Kahn's algorithm with smallest-id-first tie-break, so a
// graph whose ids already follow a topological order gets the identity.
class ComputationGraph {
 public:
  // Validates ids, edge endpoints, profile signs, acyclicity and the
  // single-source/single-sink shape. Errors name the offending node or edge;
  // a cycle is reported as its node sequence.
  static absl::StatusOr<ComputationGraph> Create(std::vector<NodeProfile> nodes,
                                                 std::vector<Edge> edges);

  size_t num_nodes() const { return nodes_.size(); }
  size_t num_edges() const { return edges_.size(); }
  const std::vector<NodeProfile>& nodes() const { return nodes_; }
  const NodeProfile& node(NodeId id) const { return nodes_[id]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeId>& topo_order() const { return topo_order_; }

  // Position of `id` in topo_order().
  int topo_index(NodeId id) const { return topo_index_[id]; }
  std::span<const NodeId> successors(NodeId id) const { return succ_[id]; }
  std::span<const NodeId> predecessors(NodeId id) const { return pred_[id]; }
  int in_degree(NodeId id) const { return static_cast<int>(pred_[id].size()); }
  int out_degree(NodeId id) const { return static_cast<int>(succ_[id].size()); }
  NodeId source() const { return topo_order_.front(); }
  NodeId sink() const { return topo_order_.back(); }

  int64_t total_flops() const;
  int64_t total_mem_bytes() const;

  bool operator==(const ComputationGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  ComputationGraph() = default;

  std::vector<NodeProfile> nodes_;
  std::vector<Edge> edges_;
  std::vector<NodeId> topo_order_;
  std::vector<int> topo_index_;
  std::vector<std::vector<NodeId>> succ_;
  std::vector<std::vector<NodeId>> pred_;
};

// Incrementally assembles a graph; ids are assigned in insertion order.
class GraphBuilder {
 public:
  NodeId AddNode(std::string kind, int64_t flops, int64_t mem_bytes,
                 int64_t out_bytes);
  void AddEdge(NodeId src, NodeId dst) { edges_.push_back({src, dst}); }
  absl::StatusOr<ComputationGraph> Build() &&;

 private:
  std::vector<NodeProfile> nodes_;
  std::vector<Edge> edges_;
};

}  // namespace pipelink

#endif  // PIPELINK_GRAPH_GRAPH_H_
