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

#include "pipelink/harness/chain_graph.h"

#include "absl/strings/str_cat.h"

namespace pipelink {

absl::StatusOr<ComputationGraph> BuildChainGraph(const ChainSpec& spec) {
  const int n = static_cast<int>(spec.flops.size());
  if (n == 0 || spec.mem.size() != spec.flops.size()) {
    return absl::InvalidArgumentError(
        "chain needs matching, non-empty flops and mem lists");
  }
  for (const ChainResidual& r : spec.residuals) {
    if (r.src < 0 || r.dst >= n || r.dst < r.src + 2 || r.bytes <= 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("invalid chain residual ", r.src, "->", r.dst));
    }
  }
  GraphBuilder b;
  // Skip nodes are created with their producer but wired to a later merge.
  std::vector<std::vector<NodeId>> skips_into(n);
  NodeId prev = -1;
  for (int j = 0; j < n; ++j) {
    const NodeId split = b.AddNode("split", 0, 0, spec.activation_bytes);
    const NodeId block =
        b.AddNode("block", spec.flops[j], spec.mem[j], spec.activation_bytes);
    if (prev >= 0) b.AddEdge(prev, split);
    b.AddEdge(split, block);
    for (const ChainResidual& r : spec.residuals) {
      if (r.src != j) continue;
      const NodeId skip = b.AddNode("skip", 0, 0, r.bytes);
      b.AddEdge(split, skip);
      skips_into[r.dst].push_back(skip);
    }
    const int64_t out =
        j + 1 == n ? spec.return_bytes : spec.activation_bytes;
    const NodeId merge = b.AddNode("merge", 0, 0, out);
    b.AddEdge(split, merge);
    b.AddEdge(block, merge);
    for (NodeId skip : skips_into[j]) b.AddEdge(skip, merge);
    prev = merge;
  }
  return std::move(b).Build();
}

}  // namespace pipelink
