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

#ifndef PIPELINK_GRAPH_DECODER_GRAPH_H_
#define PIPELINK_GRAPH_DECODER_GRAPH_H_

#include <cstdint>

#include "pipelink/graph/graph.h"

namespace pipelink {

// Synthetic decoder-style graph used in place of a real exported model.
//
// Layout (ids in this order):
//   embed
//   per block b: split_b -> norm_b -> attn_b -> mlp_b -> merge_b, plus the
//                residual edge split_b -> merge_b; merge_b feeds split_{b+1}
//   head
// Every block with b % 3 == 2 also receives a cross-block skip edge
// split_s -> merge_b where s is drawn by `seed` from [max(0, b-3), b-2].
//
// Per-token profiles for hidden size h and vocabulary V = 4h, all in bytes
// for fp32 weights and activations:
//   embed  flops 2h       mem 4Vh    out 4h
//   split  flops 0        mem 0      out 4h
//   norm   flops 5h       mem 8h     out 4h
//   attn   flops 8h^2     mem 16h^2  out 4h
//   mlp    flops 16h^2    mem 32h^2  out 4h
//   merge  flops 2h       mem 0      out 4h
//   head   flops 2Vh      mem 4Vh    out 4V
ComputationGraph GenerateDecoderGraph(int num_blocks, int64_t hidden,
                                      uint64_t seed);

}  // namespace pipelink

#endif  // PIPELINK_GRAPH_DECODER_GRAPH_H_
