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

#ifndef PIPELINK_MONITOR_SNAPSHOT_H_
#define PIPELINK_MONITOR_SNAPSHOT_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>

#include "absl/status/statusor.h"
#include "pipelink/monitor/fleet.h"

namespace pipelink {

// Live metrics reported by a device's monitor.
struct DeviceReading {
  DeviceId id = 0;
  int64_t mem_avail_bytes = 0;
  // Measured FLOP/s over the reporting window, when enough work ran.
  std::optional<double> flops_per_sec;
};

class DeviceAgent {
 public:
  virtual ~DeviceAgent() = default;
  virtual DeviceId id() const = 0;
  // Returns nullopt when the device does not answer within `timeout_sec`.
  virtual std::optional<DeviceReading> Poll(double timeout_sec) = 0;
};

// Reports memory as the idle availability minus the bytes of every resident
// sub-module. Thread-safe.
class ResidentSetAgent : public DeviceAgent {
 public:
  ResidentSetAgent(DeviceId id, int64_t idle_avail_bytes)
      : id_(id), idle_avail_bytes_(idle_avail_bytes) {}

  DeviceId id() const override { return id_; }
  std::optional<DeviceReading> Poll(double timeout_sec) override;

  // Loading an already resident module is a no-op.
  void Load(int module, int64_t bytes);
  void Release(int module);
  int64_t resident_bytes() const;
  bool resident(int module) const;
  void SetResponsive(bool responsive);

 private:
  const DeviceId id_;
  const int64_t idle_avail_bytes_;
  mutable std::mutex mu_;
  std::map<int, int64_t> resident_;
  bool responsive_ = true;
};

// Merges live readings into the static fleet. Memory readings replace
// mem_avail (clamped to [0, mem_total]); measured speeds replace the
// configured FLOP/s. Fails listing every device that did not answer.
absl::StatusOr<FleetProfile> SnapshotRuntime(
    const FleetProfile& static_fleet, std::span<DeviceAgent* const> agents,
    double timeout_sec = 1.0);

}  // namespace pipelink

#endif  // PIPELINK_MONITOR_SNAPSHOT_H_
