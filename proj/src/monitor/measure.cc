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

#include "pipelink/monitor/measure.h"

#include <algorithm>
#include <cstring>
#include <future>

#include "absl/strings/str_cat.h"
#include "pipelink/common/clock.h"
#include "pipelink/common/digest.h"
#include "pipelink/common/status_macros.h"

namespace pipelink {

absl::StatusOr<double> BandwidthFromSample(const MeasurementSample& sample) {
  if (!(sample.elapsed_sec > 0)) {
    return absl::InvalidArgumentError("measurement has non-positive elapsed time");
  }
  if (sample.bytes_sent <= 0) {
    return absl::InvalidArgumentError("measurement carried no bytes");
  }
  return static_cast<double>(sample.bytes_sent) / sample.elapsed_sec;
}

absl::StatusOr<ProbeReceiver> ProbeReceiver::Listen(DeviceId id,
                                                    double time_scale) {
  ASSIGN_OR_RETURN(Fd listener, ListenTcp(0));
  ASSIGN_OR_RETURN(const uint16_t port, LocalPort(listener));
  return ProbeReceiver(id, std::move(listener), port, time_scale);
}

absl::StatusOr<MeasurementSample> ProbeReceiver::ReceiveOne(
    double timeout_sec) {
  ASSIGN_OR_RETURN(Fd conn, AcceptTcp(listener_, timeout_sec));
  const TimePoint start = SteadyClock::now();
  uint8_t header[12];
  RETURN_IF_ERROR(RecvAll(conn.get(), header));
  int64_t length = 0;
  DeviceId sender = 0;
  std::memcpy(&length, header, 8);
  std::memcpy(&sender, header + 8, 4);
  std::vector<uint8_t> buffer(std::min<int64_t>(length, 1 << 20));
  int64_t remaining = length;
  while (remaining > 0) {
    const size_t n = static_cast<size_t>(
        std::min<int64_t>(remaining, static_cast<int64_t>(buffer.size())));
    RETURN_IF_ERROR(RecvAll(conn.get(), std::span<uint8_t>(buffer).first(n)));
    remaining -= static_cast<int64_t>(n);
  }
  const TimePoint end = SteadyClock::now();
  MeasurementSample sample;
  sample.bytes_sent = length;
  sample.elapsed_sec = SecondsBetween(start, end) / time_scale_;
  sample.sender = sender;
  sample.receiver = id_;
  return sample;
}

absl::Status SendProbe(DeviceId sender, const Endpoint& receiver,
                       int64_t chunk_bytes, std::optional<LinkShape> shape,
                       double time_scale, double timeout_sec) {
  if (chunk_bytes < kMinProbeBytes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "probe chunk must be at least ", kMinProbeBytes, " bytes, got ",
        chunk_bytes));
  }
  ASSIGN_OR_RETURN(Fd conn, ConnectTcp(receiver, timeout_sec));
  std::vector<uint8_t> bytes(12 + static_cast<size_t>(chunk_bytes));
  std::memcpy(bytes.data(), &chunk_bytes, 8);
  std::memcpy(bytes.data() + 8, &sender, 4);
  FillDeterministic(static_cast<uint64_t>(chunk_bytes),
                    std::span<uint8_t>(bytes).subspan(12));
  ShapedSender out(std::move(conn), shape, time_scale);
  out.Send(std::move(bytes), chunk_bytes);
  out.Close();
  return out.status();
}

absl::StatusOr<MeasurementSample> MeasureBandwidth(
    DeviceId sender, DeviceId receiver, std::optional<LinkShape> shape,
    int64_t chunk_bytes, double time_scale, double timeout_sec) {
  if (chunk_bytes < kMinProbeBytes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "probe chunk must be at least ", kMinProbeBytes, " bytes, got ",
        chunk_bytes));
  }
  ASSIGN_OR_RETURN(ProbeReceiver rx, ProbeReceiver::Listen(receiver, time_scale));
  auto send = std::async(std::launch::async, [&] {
    return SendProbe(sender, rx.endpoint(), chunk_bytes, shape, time_scale,
                     timeout_sec);
  });
  absl::StatusOr<MeasurementSample> sample = rx.ReceiveOne(timeout_sec);
  const absl::Status sent = send.get();
  if (!sent.ok()) return sent;
  return sample;
}

absl::StatusOr<BandwidthEstimate> EstimateBandwidth(
    DeviceId sender, DeviceId receiver, std::optional<LinkShape> shape,
    const BandwidthProbeOptions& options) {
  if (options.measured_rounds <= 0) {
    return absl::InvalidArgumentError("measured_rounds must be positive");
  }
  BandwidthEstimate estimate;
  for (int round = 0; round < options.warmup_rounds + options.measured_rounds;
       ++round) {
    ASSIGN_OR_RETURN(const MeasurementSample sample,
                     MeasureBandwidth(sender, receiver, shape,
                                      options.chunk_bytes, options.time_scale,
                                      options.timeout_sec));
    if (round < options.warmup_rounds) continue;
    ASSIGN_OR_RETURN(const double bps, BandwidthFromSample(sample));
    estimate.samples_bps.push_back(bps);
  }
  std::vector<double> sorted = estimate.samples_bps;
  std::sort(sorted.begin(), sorted.end());
  const size_t k = sorted.size();
  estimate.median_bps =
      k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
  return estimate;
}

absl::StatusOr<double> SimulatedDevice::Execute(int64_t flops) {
  if (stopped_) return absl::UnavailableError("device worker is not running");
  double seconds = static_cast<double>(flops) / flops_per_sec_;
  if (noise_ > 0) {
    state_ = Mix64(state_);
    const double u = static_cast<double>(state_ >> 11) * 0x1.0p-53;
    seconds *= 1.0 + noise_ * (2.0 * u - 1.0);
  }
  const TimePoint start = SteadyClock::now();
  SleepUntil(start + FromSeconds(seconds * time_scale_));
  return SecondsBetween(start, SteadyClock::now());
}

absl::StatusOr<double> MeasureFlops(ComputeWorker& worker,
                                    const ComputationGraph& test_model) {
  const int64_t num_flop = test_model.total_flops();
  if (num_flop <= 0) {
    return absl::InvalidArgumentError(
        "test model performs no floating point operations");
  }
  ASSIGN_OR_RETURN(const double wall, worker.Execute(num_flop));
  const double simulated = wall / worker.time_scale();
  if (!(simulated > 0)) {
    return absl::InternalError("test model execution took no measurable time");
  }
  return static_cast<double>(num_flop) / simulated;
}

}  // namespace pipelink
