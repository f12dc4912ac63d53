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

#ifndef PIPELINK_COMMON_DIGEST_H_
#define PIPELINK_COMMON_DIGEST_H_

#include <cstdint>
#include <span>

namespace pipelink {

// splitmix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t CombineDigest(uint64_t seed, uint64_t value) {
  return Mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) +
                       (seed >> 2)));
}

// Word-at-a-time checksum over a byte buffer. Not cryptographic.
uint64_t Checksum(std::span<const uint8_t> bytes);

// Fills `out` with a deterministic byte stream derived from `seed`.
void FillDeterministic(uint64_t seed, std::span<uint8_t> out);

}  // namespace pipelink

#endif  // PIPELINK_COMMON_DIGEST_H_
