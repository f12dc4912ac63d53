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

#ifndef PIPELINK_MONITOR_MEASURE_H_
#define PIPELINK_MONITOR_MEASURE_H_

#include <atomic>
#include <cstdint>
#include <optional>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/graph/graph.h"
#include "pipelink/monitor/fleet.h"
#include "pipelink/net/link_shaper.h"
#include "pipelink/net/socket.h"

namespace pipelink {

inline constexpr int64_t kMinProbeBytes = 64 * 1024;
inline constexpr int64_t kDefaultProbeBytes = 4 * 1024 * 1024;

struct MeasurementSample {
  int64_t bytes_sent = 0;
  double elapsed_sec = 0;  // receiver side, connection accept to last byte
  DeviceId sender = 0;
  DeviceId receiver = 0;
};

// bytes_sent / elapsed_sec. Requires elapsed_sec > 0.
absl::StatusOr<double> BandwidthFromSample(const MeasurementSample& sample);

// Receiving half of a bandwidth probe: listens on an ephemeral loopback port
// and times one transfer per ReceiveOne() call.
class ProbeReceiver {
 public:
  static absl::StatusOr<ProbeReceiver> Listen(DeviceId id, double time_scale);

  Endpoint endpoint() const { return {"127.0.0.1", port_}; }
  // Elapsed time is reported in simulated seconds (wall / time_scale).
  absl::StatusOr<MeasurementSample> ReceiveOne(double timeout_sec);

 private:
  ProbeReceiver(DeviceId id, Fd listener, uint16_t port, double time_scale)
      : id_(id), listener_(std::move(listener)), port_(port),
        time_scale_(time_scale) {}

  DeviceId id_;
  Fd listener_;
  uint16_t port_;
  double time_scale_;
};

// Sending half: connects, then writes a length-prefixed chunk through a link
// shaped by `shape` (unshaped loopback when absent).
absl::Status SendProbe(DeviceId sender, const Endpoint& receiver,
                       int64_t chunk_bytes, std::optional<LinkShape> shape,
                       double time_scale, double timeout_sec = 10.0);

struct BandwidthProbeOptions {
  int64_t chunk_bytes = kDefaultProbeBytes;
  int warmup_rounds = 3;
  int measured_rounds = 5;
  double timeout_sec = 10.0;
  double time_scale = 1.0;
};

// One sender -> receiver transfer on loopback.
absl::StatusOr<MeasurementSample> MeasureBandwidth(
    DeviceId sender, DeviceId receiver, std::optional<LinkShape> shape,
    int64_t chunk_bytes, double time_scale = 1.0, double timeout_sec = 10.0);

struct BandwidthEstimate {
  double median_bps = 0;
  std::vector<double> samples_bps;  // measured rounds only
};

// Warmup rounds followed by measured rounds; reports the median.
absl::StatusOr<BandwidthEstimate> EstimateBandwidth(
    DeviceId sender, DeviceId receiver, std::optional<LinkShape> shape,
    const BandwidthProbeOptions& options);

// Synthetic compute executor standing in for a device: executing F FLOPs
// takes F / speed simulated seconds, realized as a timed sleep.
class ComputeWorker {
 public:
  virtual ~ComputeWorker() = default;
  // Returns the measured wall-clock duration in seconds.
  virtual absl::StatusOr<double> Execute(int64_t flops) = 0;
  virtual double time_scale() const = 0;
};

class SimulatedDevice : public ComputeWorker {
 public:
  // `noise` is a relative multiplicative perturbation applied
  // deterministically from `seed` (0 disables it).
  SimulatedDevice(double flops_per_sec, double time_scale, double noise = 0,
                  uint64_t seed = 0)
      : flops_per_sec_(flops_per_sec), time_scale_(time_scale), noise_(noise),
        state_(seed) {}

  absl::StatusOr<double> Execute(int64_t flops) override;
  double time_scale() const override { return time_scale_; }
  void Stop() { stopped_ = true; }

 private:
  double flops_per_sec_;
  double time_scale_;
  double noise_;
  uint64_t state_;
  std::atomic<bool> stopped_{false};
};

// NumFlop(test_model) / measured execution time, in simulated FLOP/s.
absl::StatusOr<double> MeasureFlops(ComputeWorker& worker,
                                    const ComputationGraph& test_model);

}  // namespace pipelink

#endif  // PIPELINK_MONITOR_MEASURE_H_
