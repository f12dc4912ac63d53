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

#include "pipelink/net/link_shaper.h"

#include <algorithm>

namespace pipelink {

LinkClock::Slot LinkClock::Reserve(TimePoint now, int64_t bytes) {
  if (!shape_) return {now, now};
  const TimePoint start = std::max(now, free_at_);
  free_at_ = start + FromSeconds(static_cast<double>(bytes) /
                                 shape_->bandwidth_bps * time_scale_);
  return {start, free_at_ + FromSeconds(shape_->latency_sec * time_scale_)};
}

double LinkClock::IdealSeconds(int64_t bytes) const {
  if (!shape_) return 0;
  return shape_->latency_sec +
         static_cast<double>(bytes) / shape_->bandwidth_bps;
}

ShapedSender::ShapedSender(Fd socket, std::optional<LinkShape> shape,
                           double time_scale)
    : socket_(std::move(socket)), clock_(shape, time_scale) {
  writer_ = std::thread([this] { WriterLoop(); });
}

ShapedSender::~ShapedSender() { Close(); }

ShapedSender::Ticket ShapedSender::Send(std::vector<uint8_t> bytes,
                                        int64_t shaped_bytes,
                                        WrittenCallback on_written) {
  std::lock_guard<std::mutex> lock(mu_);
  const TimePoint now = SteadyClock::now();
  const LinkClock::Slot slot = clock_.Reserve(now, shaped_bytes);
  if (!closing_ && !aborted_) {
    queue_.push_back({slot.delivery, std::move(bytes), std::move(on_written)});
    cv_.notify_one();
  }
  return {now, slot.delivery};
}

void ShapedSender::Close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closing_ = true;
    cv_.notify_one();
  }
  if (writer_.joinable()) writer_.join();
  if (socket_.valid()) ShutdownWrite(socket_.get());
}

void ShapedSender::Abort() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    aborted_ = true;
    queue_.clear();
    cv_.notify_one();
  }
  if (socket_.valid()) ShutdownBoth(socket_.get());
  if (writer_.joinable()) writer_.join();
}

absl::Status ShapedSender::status() const {
  std::lock_guard<std::mutex> lock(mu_);
  return status_;
}

void ShapedSender::WriterLoop() {
  TightenTimerSlack();
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    cv_.wait(lock, [&] { return aborted_ || closing_ || !queue_.empty(); });
    if (aborted_) return;
    if (queue_.empty()) {
      if (closing_) return;
      continue;
    }
    const TimePoint delivery = queue_.front().delivery;
    if (SteadyClock::now() < delivery) {
      // Wake early only for abort; new frames never precede the head.
      cv_.wait_until(lock, delivery, [&] { return aborted_; });
      if (aborted_) return;
      if (SteadyClock::now() < delivery) continue;
    }
    Pending item = std::move(queue_.front());
    queue_.pop_front();
    lock.unlock();
    absl::Status st = SendAll(socket_.get(), item.bytes);
    const TimePoint written = SteadyClock::now();
    if (st.ok() && item.on_written) item.on_written(written);
    lock.lock();
    if (!st.ok() && status_.ok()) status_ = st;
  }
}

}  // namespace pipelink
