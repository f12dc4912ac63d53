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

#ifndef PIPELINK_GRAPH_GRAPH_IO_H_
#define PIPELINK_GRAPH_GRAPH_IO_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/graph/graph.h"

namespace pipelink {

// Text format:
//   graph v1 <num_nodes> <num_edges>
//   node <id> <kind> <flops> <mem_bytes> <out_bytes>
//   edge <src> <dst>
// Ids are 0..n-1 and must already be in topological order.
std::string SerializeGraph(const ComputationGraph& graph);
absl::StatusOr<ComputationGraph> ParseGraph(std::string_view text);

absl::Status SaveGraph(const ComputationGraph& graph, const std::string& path);
absl::StatusOr<ComputationGraph> LoadGraph(const std::string& path);

}  // namespace pipelink

#endif  // PIPELINK_GRAPH_GRAPH_IO_H_
