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

#ifndef PIPELINK_NET_SOCKET_H_
#define PIPELINK_NET_SOCKET_H_

#include <cstdint>
#include <span>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace pipelink {

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 0;
};

// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(other.release()) {}
  Fd& operator=(Fd&& other) noexcept;
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset();

 private:
  int fd_ = -1;
};

// Listens on 127.0.0.1:`port`; port 0 picks an ephemeral port.
absl::StatusOr<Fd> ListenTcp(uint16_t port);
absl::StatusOr<uint16_t> LocalPort(const Fd& socket);

// Connection refused maps to Unavailable, an expired deadline to
// DeadlineExceeded.
absl::StatusOr<Fd> ConnectTcp(const Endpoint& endpoint, double timeout_sec);
absl::StatusOr<Fd> AcceptTcp(const Fd& listener, double timeout_sec);

absl::Status SendAll(int fd, std::span<const uint8_t> bytes);
// Returns OutOfRange if the peer closed the stream before any byte of
// `bytes` arrived, DataLoss if it closed part-way.
absl::Status RecvAll(int fd, std::span<uint8_t> bytes);

// Half-closes the write side so the peer's reader observes end of stream.
void ShutdownWrite(int fd);
// Wakes any thread blocked on `fd` in either direction.
void ShutdownBoth(int fd);

}  // namespace pipelink

#endif  // PIPELINK_NET_SOCKET_H_
