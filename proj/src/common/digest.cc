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

#include "pipelink/common/digest.h"

#include <cstring>

namespace pipelink {

uint64_t Checksum(std::span<const uint8_t> bytes) {
  uint64_t acc = Mix64(bytes.size());
  size_t i = 0;
  for (; i + 8 <= bytes.size(); i += 8) {
    uint64_t word;
    std::memcpy(&word, bytes.data() + i, 8);
    acc = (acc ^ word) * 0x100000001b3ULL;
    acc ^= acc >> 29;
  }
  uint64_t tail = 0;
  std::memcpy(&tail, bytes.data() + i, bytes.size() - i);
  return Mix64(acc ^ tail);
}

void FillDeterministic(uint64_t seed, std::span<uint8_t> out) {
  // A 64-byte block is generated once and replicated by doubling copies.
  uint8_t block[64];
  for (int k = 0; k < 8; ++k) {
    const uint64_t word = Mix64(seed + static_cast<uint64_t>(k));
    std::memcpy(block + 8 * k, &word, 8);
  }
  const size_t first = out.size() < sizeof(block) ? out.size() : sizeof(block);
  std::memcpy(out.data(), block, first);
  size_t filled = first;
  while (filled < out.size()) {
    const size_t chunk =
        filled < out.size() - filled ? filled : out.size() - filled;
    std::memcpy(out.data() + filled, out.data(), chunk);
    filled += chunk;
  }
}

}  // namespace pipelink
