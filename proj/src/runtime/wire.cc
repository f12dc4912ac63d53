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

#include "pipelink/runtime/wire.h"

#include <cstring>

#include "absl/strings/str_cat.h"
#include "pipelink/common/digest.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/net/socket.h"

namespace pipelink {
namespace {

constexpr uint8_t kMagic[4] = {'P', 'L', 'K', '1'};
constexpr size_t kSegmentBytes = 16;
constexpr size_t kEnvelopeFixedBytes = 12;
constexpr size_t kPassStatsBytes = 22;

class Writer {
 public:
  explicit Writer(std::vector<uint8_t>* out) : out_(out) {}
  template <typename T>
  void Put(T value) {
    static_assert(std::is_integral_v<T>);
    for (size_t i = 0; i < sizeof(T); ++i) {
      out_->push_back(static_cast<uint8_t>(
          static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)));
    }
  }
  void PutDouble(double value) {
    uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    Put(bits);
  }

 private:
  std::vector<uint8_t>* out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}
  template <typename T>
  bool Get(T* value) {
    if (pos_ + sizeof(T) > in_.size()) return false;
    std::make_unsigned_t<T> v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::make_unsigned_t<T>>(in_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    *value = static_cast<T>(v);
    return true;
  }
  bool GetDouble(double* value) {
    uint64_t bits;
    if (!Get(&bits)) return false;
    std::memcpy(value, &bits, sizeof(bits));
    return true;
  }
  size_t pos() const { return pos_; }

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

bool ValidType(uint8_t type) {
  return type >= static_cast<uint8_t>(MsgType::kActivation) &&
         type <= static_cast<uint8_t>(MsgType::kControl);
}

struct Header {
  Frame frame;
  uint32_t payload_len = 0;
};

absl::StatusOr<Header> DecodeHeader(std::span<const uint8_t> bytes) {
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    return absl::DataLossError("bad frame magic");
  }
  Reader r(bytes.subspan(sizeof(kMagic)));
  Header h;
  uint8_t type = 0;
  r.Get(&type);
  if (!ValidType(type)) {
    return absl::DataLossError(absl::StrCat("unknown frame type ", type));
  }
  h.frame.type = static_cast<MsgType>(type);
  r.Get(&h.frame.sample_id);
  r.Get(&h.frame.token_index);
  r.Get(&h.frame.source_module);
  r.Get(&h.frame.target_module);
  r.Get(&h.payload_len);
  if (h.payload_len > kMaxPayloadBytes) {
    return absl::DataLossError(
        absl::StrCat("frame payload of ", h.payload_len, " bytes is too large"));
  }
  return h;
}

absl::Status CheckDigest(const Frame& frame, std::span<const uint8_t> trailer) {
  uint64_t digest = 0;
  Reader(trailer).Get(&digest);
  if (digest != Checksum(frame.payload)) {
    return absl::DataLossError(absl::StrCat(
        MsgTypeName(frame.type), " frame for sample ", frame.sample_id,
        " token ", frame.token_index, " failed its payload checksum"));
  }
  return absl::OkStatus();
}

}  // namespace

const char* MsgTypeName(MsgType type) {
  switch (type) {
    case MsgType::kActivation:
      return "ACTIVATION";
    case MsgType::kResidual:
      return "RESIDUAL";
    case MsgType::kLogits:
      return "LOGITS";
    case MsgType::kControl:
      return "CONTROL";
  }
  return "UNKNOWN";
}

std::vector<uint8_t> EncodeFrame(const Frame& frame) {
  std::vector<uint8_t> out;
  out.reserve(kFrameHeaderBytes + frame.payload.size() + kFrameTrailerBytes);
  for (uint8_t c : kMagic) out.push_back(c);
  Writer w(&out);
  w.Put(static_cast<uint8_t>(frame.type));
  w.Put(frame.sample_id);
  w.Put(frame.token_index);
  w.Put(frame.source_module);
  w.Put(frame.target_module);
  w.Put(static_cast<uint32_t>(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  w.Put(Checksum(frame.payload));
  return out;
}

absl::StatusOr<Frame> DecodeFrame(std::span<const uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes + kFrameTrailerBytes) {
    return absl::DataLossError(
        absl::StrCat("frame of ", bytes.size(), " bytes is truncated"));
  }
  ASSIGN_OR_RETURN(Header h, DecodeHeader(bytes.first(kFrameHeaderBytes)));
  if (bytes.size() != kFrameHeaderBytes + h.payload_len + kFrameTrailerBytes) {
    return absl::DataLossError(absl::StrCat(
        "frame declares ", h.payload_len, " payload bytes but carries ",
        bytes.size() - kFrameHeaderBytes - kFrameTrailerBytes));
  }
  const auto payload = bytes.subspan(kFrameHeaderBytes, h.payload_len);
  h.frame.payload.assign(payload.begin(), payload.end());
  RETURN_IF_ERROR(
      CheckDigest(h.frame, bytes.subspan(kFrameHeaderBytes + h.payload_len)));
  return std::move(h.frame);
}

absl::StatusOr<Frame> ReadFrame(int fd) {
  uint8_t header[kFrameHeaderBytes];
  RETURN_IF_ERROR(RecvAll(fd, header));
  ASSIGN_OR_RETURN(Header h, DecodeHeader(header));
  h.frame.payload.resize(h.payload_len);
  uint8_t trailer[kFrameTrailerBytes];
  absl::Status st = RecvAll(fd, h.frame.payload);
  if (st.ok()) st = RecvAll(fd, trailer);
  if (absl::IsOutOfRange(st)) {
    return absl::DataLossError("stream closed mid-frame");
  }
  RETURN_IF_ERROR(st);
  RETURN_IF_ERROR(CheckDigest(h.frame, trailer));
  return std::move(h.frame);
}

int64_t Envelope::SimulatedBytes() const {
  int64_t total = 0;
  for (const Segment& s : segments) total += s.bytes;
  return total;
}

size_t EnvelopeHeaderBytes(size_t num_segments) {
  return kEnvelopeFixedBytes + kSegmentBytes * num_segments;
}

std::vector<uint8_t> EncodeEnvelope(const Envelope& envelope) {
  const size_t header = EnvelopeHeaderBytes(envelope.segments.size());
  const size_t total =
      std::max<size_t>(header, static_cast<size_t>(envelope.SimulatedBytes()));
  std::vector<uint8_t> out;
  out.reserve(total);
  Writer w(&out);
  w.Put(envelope.epoch);
  w.Put(envelope.seq);
  w.Put(envelope.sender);
  w.Put(static_cast<uint16_t>(envelope.segments.size()));
  for (const Segment& s : envelope.segments) {
    w.Put(s.src_module);
    w.Put(s.dst_module);
    w.Put(s.data_digest);
    w.Put(s.bytes);
  }
  out.resize(total);
  uint64_t seed = CombineDigest(envelope.seq, envelope.sender);
  for (const Segment& s : envelope.segments) seed = CombineDigest(seed, s.data_digest);
  FillDeterministic(seed, std::span<uint8_t>(out).subspan(header));
  return out;
}

absl::StatusOr<Envelope> DecodeEnvelope(std::span<const uint8_t> payload) {
  Reader r(payload);
  Envelope e;
  uint16_t count = 0;
  if (!r.Get(&e.epoch) || !r.Get(&e.seq) || !r.Get(&e.sender) ||
      !r.Get(&count)) {
    return absl::DataLossError("envelope header is truncated");
  }
  if (payload.size() < EnvelopeHeaderBytes(count)) {
    return absl::DataLossError(absl::StrCat(
        "envelope declares ", count, " segments but has ", payload.size(),
        " bytes"));
  }
  e.segments.resize(count);
  for (Segment& s : e.segments) {
    r.Get(&s.src_module);
    r.Get(&s.dst_module);
    r.Get(&s.data_digest);
    r.Get(&s.bytes);
  }
  const size_t expected = std::max<size_t>(
      EnvelopeHeaderBytes(count), static_cast<size_t>(e.SimulatedBytes()));
  if (payload.size() != expected) {
    return absl::DataLossError(absl::StrCat(
        "envelope payload is ", payload.size(), " bytes, segments need ",
        expected));
  }
  return e;
}

std::vector<uint8_t> EncodePassStats(const PassStats& stats) {
  std::vector<uint8_t> out;
  out.reserve(kPassStatsBytes);
  Writer w(&out);
  w.Put(stats.seq);
  w.Put(stats.device);
  w.PutDouble(stats.busy_sec);
  w.Put(stats.flops);
  return out;
}

absl::StatusOr<PassStats> DecodePassStats(std::span<const uint8_t> payload) {
  if (payload.size() != kPassStatsBytes) {
    return absl::DataLossError(absl::StrCat(
        "pass stats payload is ", payload.size(), " bytes, expected ",
        kPassStatsBytes));
  }
  Reader r(payload);
  PassStats s;
  r.Get(&s.seq);
  r.Get(&s.device);
  r.GetDouble(&s.busy_sec);
  r.Get(&s.flops);
  return s;
}

}  // namespace pipelink
