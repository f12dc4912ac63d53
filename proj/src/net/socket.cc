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

#include "pipelink/net/socket.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "absl/strings/str_cat.h"

namespace pipelink {
namespace {

absl::Status ErrnoStatus(const std::string& what) {
  return absl::InternalError(absl::StrCat(what, ": ", std::strerror(errno)));
}

void SetNoDelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

absl::StatusOr<sockaddr_in> MakeAddr(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    return absl::InvalidArgumentError(absl::StrCat("bad host '", ep.host, "'"));
  }
  return addr;
}

}  // namespace

Fd& Fd::operator=(Fd&& other) noexcept {
  if (this != &other) {
    reset();
    fd_ = other.release();
  }
  return *this;
}

void Fd::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

absl::StatusOr<Fd> ListenTcp(uint16_t port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) return ErrnoStatus("socket");
  int one = 1;
  setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno == EADDRINUSE) {
      return absl::AlreadyExistsError(
          absl::StrCat("port ", port, " is already in use"));
    }
    return ErrnoStatus(absl::StrCat("bind port ", port));
  }
  if (::listen(fd.get(), 64) != 0) return ErrnoStatus("listen");
  return fd;
}

absl::StatusOr<uint16_t> LocalPort(const Fd& socket) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(socket.get(), reinterpret_cast<sockaddr*>(&addr), &len) !=
      0) {
    return ErrnoStatus("getsockname");
  }
  return ntohs(addr.sin_port);
}

absl::StatusOr<Fd> ConnectTcp(const Endpoint& endpoint, double timeout_sec) {
  auto addr = MakeAddr(endpoint);
  if (!addr.ok()) return addr.status();
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!fd.valid()) return ErrnoStatus("socket");
  const std::string where = absl::StrCat(endpoint.host, ":", endpoint.port);
  int rc = ::connect(fd.get(), reinterpret_cast<const sockaddr*>(&*addr),
                     sizeof(*addr));
  if (rc != 0 && errno != EINPROGRESS) {
    if (errno == ECONNREFUSED) {
      return absl::UnavailableError(absl::StrCat("connection refused by ", where));
    }
    return ErrnoStatus(absl::StrCat("connect ", where));
  }
  if (rc != 0) {
    pollfd pfd{fd.get(), POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout_sec * 1000));
    if (rc == 0) {
      return absl::DeadlineExceededError(
          absl::StrCat("timed out connecting to ", where));
    }
    int err = 0;
    socklen_t len = sizeof(err);
    getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err == ECONNREFUSED) {
      return absl::UnavailableError(absl::StrCat("connection refused by ", where));
    }
    if (err != 0) {
      errno = err;
      return ErrnoStatus(absl::StrCat("connect ", where));
    }
  }
  const int flags = fcntl(fd.get(), F_GETFL);
  fcntl(fd.get(), F_SETFL, flags & ~O_NONBLOCK);
  SetNoDelay(fd.get());
  return fd;
}

absl::StatusOr<Fd> AcceptTcp(const Fd& listener, double timeout_sec) {
  pollfd pfd{listener.get(), POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout_sec * 1000));
  if (rc == 0) return absl::DeadlineExceededError("timed out waiting for peer");
  if (rc < 0) return ErrnoStatus("poll");
  Fd fd(::accept4(listener.get(), nullptr, nullptr, SOCK_CLOEXEC));
  if (!fd.valid()) return ErrnoStatus("accept");
  SetNoDelay(fd.get());
  return fd;
}

absl::Status SendAll(int fd, std::span<const uint8_t> bytes) {
  size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n =
        ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return absl::UnavailableError(
          absl::StrCat("send failed: ", std::strerror(errno)));
    }
    sent += static_cast<size_t>(n);
  }
  return absl::OkStatus();
}

absl::Status RecvAll(int fd, std::span<uint8_t> bytes) {
  size_t got = 0;
  while (got < bytes.size()) {
    const ssize_t n = ::recv(fd, bytes.data() + got, bytes.size() - got, 0);
    if (n == 0) {
      if (got == 0) return absl::OutOfRangeError("end of stream");
      return absl::DataLossError("stream closed mid-message");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      return absl::UnavailableError(
          absl::StrCat("recv failed: ", std::strerror(errno)));
    }
    got += static_cast<size_t>(n);
  }
  return absl::OkStatus();
}

void ShutdownWrite(int fd) { ::shutdown(fd, SHUT_WR); }
void ShutdownBoth(int fd) { ::shutdown(fd, SHUT_RDWR); }

}  // namespace pipelink
