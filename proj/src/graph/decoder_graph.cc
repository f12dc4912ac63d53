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

#include "pipelink/graph/decoder_graph.h"

#include <algorithm>
#include <cassert>
#include <vector>

#include "absl/strings/str_cat.h"
#include "pipelink/common/digest.h"

namespace pipelink {

ComputationGraph GenerateDecoderGraph(int num_blocks, int64_t hidden,
                                      uint64_t seed) {
  assert(num_blocks >= 1 && hidden >= 1);
  const int64_t h = hidden;
  const int64_t vocab = 4 * h;
  GraphBuilder b;
  const NodeId embed = b.AddNode("embed", 2 * h, 4 * vocab * h, 4 * h);

  std::vector<NodeId> splits;
  std::vector<NodeId> merges;
  NodeId prev = embed;
  uint64_t rng = Mix64(seed);
  for (int blk = 0; blk < num_blocks; ++blk) {
    const NodeId split = b.AddNode("split", 0, 0, 4 * h);
    const NodeId norm = b.AddNode("norm", 5 * h, 8 * h, 4 * h);
    const NodeId attn = b.AddNode("attn", 8 * h * h, 16 * h * h, 4 * h);
    const NodeId mlp = b.AddNode("mlp", 16 * h * h, 32 * h * h, 4 * h);
    const NodeId merge = b.AddNode("merge", 2 * h, 0, 4 * h);
    b.AddEdge(prev, split);
    b.AddEdge(split, norm);
    b.AddEdge(norm, attn);
    b.AddEdge(attn, mlp);
    b.AddEdge(mlp, merge);
    b.AddEdge(split, merge);
    splits.push_back(split);
    merges.push_back(merge);
    prev = merge;
  }
  for (int blk = 2; blk < num_blocks; blk += 3) {
    const int lo = std::max(0, blk - 3);
    const int hi = blk - 2;
    rng = Mix64(rng + static_cast<uint64_t>(blk));
    const int src = lo + static_cast<int>(rng % static_cast<uint64_t>(hi - lo + 1));
    b.AddEdge(splits[src], merges[blk]);
  }
  const NodeId head = b.AddNode("head", 2 * vocab * h, 4 * vocab * h, 4 * vocab);
  b.AddEdge(prev, head);

  auto graph = std::move(b).Build();
  assert(graph.ok());
  return *std::move(graph);
}

}  // namespace pipelink
