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

#ifndef PIPELINK_HARNESS_CHAIN_GRAPH_H_
#define PIPELINK_HARNESS_CHAIN_GRAPH_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "pipelink/graph/graph.h"

namespace pipelink {

// Skip connection from sub-module `src` to sub-module `dst` (dst > src + 1).
struct ChainResidual {
  int src = 0;
  int dst = 0;
  int64_t bytes = 0;
};

// A chain of sub-modules with exact per-module profiles.
struct ChainSpec {
  std::vector<int64_t> flops;  // per sub-module
  std::vector<int64_t> mem;    // per sub-module
  int64_t activation_bytes = 0;
  std::vector<ChainResidual> residuals;
  int64_t return_bytes = 0;
};

// Builds a graph whose candidate-node partition yields exactly the
// sub-modules of `spec`. Sub-module j is split_j -> {block_j, skip_j...} ->
// merge_j; split_j (j > 0) is the partition candidate.
absl::StatusOr<ComputationGraph> BuildChainGraph(const ChainSpec& spec);

}  // namespace pipelink

#endif  // PIPELINK_HARNESS_CHAIN_GRAPH_H_
