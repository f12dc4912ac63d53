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

#ifndef PIPELINK_NET_LINK_SHAPER_H_
#define PIPELINK_NET_LINK_SHAPER_H_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "pipelink/common/clock.h"
#include "pipelink/net/socket.h"

namespace pipelink {

// Simulated characteristics of a directed link.
struct LinkShape {
  double bandwidth_bps = 0;  // bytes per simulated second, > 0
  double latency_sec = 0;    // simulated seconds, >= 0
};

// Serial-link timing model. A transfer starts when both the caller is ready
// and the previous transfer has finished serializing; it is delivered one
// latency after its last byte is serialized. All durations are multiplied by
// `time_scale` to map simulated seconds onto wall-clock time.
class LinkClock {
 public:
  struct Slot {
    TimePoint start;
    TimePoint delivery;
  };

  LinkClock(std::optional<LinkShape> shape, double time_scale)
      : shape_(shape), time_scale_(time_scale) {}

  Slot Reserve(TimePoint now, int64_t bytes);

  // Unloaded transfer time in simulated seconds.
  double IdealSeconds(int64_t bytes) const;

 private:
  std::optional<LinkShape> shape_;
  double time_scale_;
  TimePoint free_at_{};
};

// Owns the write side of a connected stream socket. A dedicated writer thread
// drains a FIFO and writes each buffer no earlier than its shaped delivery
// time; the socket is never touched by any other thread.
class ShapedSender {
 public:
  using WrittenCallback = std::function<void(TimePoint written)>;

  struct Ticket {
    TimePoint enqueued;
    TimePoint delivery;
  };

  ShapedSender(Fd socket, std::optional<LinkShape> shape, double time_scale);
  ~ShapedSender();
  ShapedSender(const ShapedSender&) = delete;
  ShapedSender& operator=(const ShapedSender&) = delete;

  // `shaped_bytes` is the size charged against the link; it may differ from
  // bytes.size() when framing overhead is not part of the simulated payload.
  Ticket Send(std::vector<uint8_t> bytes, int64_t shaped_bytes,
              WrittenCallback on_written = nullptr);

  // Flushes pending buffers, half-closes the socket and joins the writer.
  void Close();
  // Drops pending buffers and unblocks the writer immediately.
  void Abort();

  absl::Status status() const;

 private:
  struct Pending {
    TimePoint delivery;
    std::vector<uint8_t> bytes;
    WrittenCallback on_written;
  };

  void WriterLoop();

  Fd socket_;
  LinkClock clock_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Pending> queue_;
  bool closing_ = false;
  bool aborted_ = false;
  absl::Status status_;
  std::thread writer_;
};

}  // namespace pipelink

#endif  // PIPELINK_NET_LINK_SHAPER_H_
