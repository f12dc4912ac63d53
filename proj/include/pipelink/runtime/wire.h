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

#ifndef PIPELINK_RUNTIME_WIRE_H_
#define PIPELINK_RUNTIME_WIRE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace pipelink {

enum class MsgType : uint8_t {
  kActivation = 1,
  kResidual = 2,
  kLogits = 3,
  kControl = 4,
};

const char* MsgTypeName(MsgType type);

// Little-endian layout:
//   "PLK1" | type u8 | sample u32 | token u32 | source_module u16 |
//   target_module u16 | payload_len u32 | payload | digest u64
// where digest = Checksum(payload).
inline constexpr size_t kFrameHeaderBytes = 21;
inline constexpr size_t kFrameTrailerBytes = 8;
inline constexpr uint32_t kMaxPayloadBytes = 1u << 30;

struct Frame {
  MsgType type = MsgType::kActivation;
  uint32_t sample_id = 0;
  uint32_t token_index = 0;
  uint16_t source_module = 0;
  uint16_t target_module = 0;
  std::vector<uint8_t> payload;
};

std::vector<uint8_t> EncodeFrame(const Frame& frame);
// Decodes exactly one frame occupying all of `bytes`.
absl::StatusOr<Frame> DecodeFrame(std::span<const uint8_t> bytes);
// Blocks for the next frame on `fd`. OutOfRange signals a clean end of stream
// before the first byte of a frame.
absl::StatusOr<Frame> ReadFrame(int fd);

// One logical tensor carried inside a frame: the output of `src_module`
// consumed by `dst_module`. `bytes` is its simulated size.
struct Segment {
  uint16_t src_module = 0;
  uint16_t dst_module = 0;
  uint64_t data_digest = 0;
  uint32_t bytes = 0;

  bool operator==(const Segment&) const = default;
};

// Routing envelope at the start of every data payload.
struct Envelope {
  uint32_t epoch = 0;
  uint32_t seq = 0;
  uint16_t sender = 0;
  std::vector<Segment> segments;

  int64_t SimulatedBytes() const;
  bool operator==(const Envelope&) const = default;
};

size_t EnvelopeHeaderBytes(size_t num_segments);

// The payload is padded with deterministic filler up to the simulated size,
// so its length is max(header, SimulatedBytes()).
std::vector<uint8_t> EncodeEnvelope(const Envelope& envelope);
absl::StatusOr<Envelope> DecodeEnvelope(std::span<const uint8_t> payload);

// Per-pass work report a device sends to the Leader.
struct PassStats {
  uint32_t seq = 0;
  uint16_t device = 0;
  double busy_sec = 0;  // simulated seconds
  int64_t flops = 0;

  bool operator==(const PassStats&) const = default;
};

std::vector<uint8_t> EncodePassStats(const PassStats& stats);
absl::StatusOr<PassStats> DecodePassStats(std::span<const uint8_t> payload);

}  // namespace pipelink

#endif  // PIPELINK_RUNTIME_WIRE_H_
