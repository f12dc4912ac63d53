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

#ifndef PIPELINK_MONITOR_FLEET_H_
#define PIPELINK_MONITOR_FLEET_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/common/matrix.h"
#include "pipelink/net/link_shaper.h"

namespace pipelink {

using DeviceId = int32_t;

struct DeviceProfile {
  DeviceId id = 0;
  double flops_per_sec = 0;
  int64_t mem_total_bytes = 0;
  int64_t mem_avail_bytes = 0;

  bool operator==(const DeviceProfile&) const = default;
};

// Per-device capabilities plus directed pairwise link characteristics.
// bandwidth(i, j) is bytes/sec from i to j; latency(i, j) is seconds.
// Diagonals are zero.
struct FleetProfile {
  std::vector<DeviceProfile> devices;
  Matrix<double> bandwidth;
  Matrix<double> latency;

  size_t size() const { return devices.size(); }
  LinkShape link(DeviceId from, DeviceId to) const {
    return {bandwidth(from, to), latency(from, to)};
  }

  bool operator==(const FleetProfile&) const = default;
};

// Checks every FleetProfile invariant; errors name the device or link.
absl::Status ValidateFleet(const FleetProfile& fleet);

// Text format:
//   fleet v1 <m>
//   device <id> <flops_per_sec> <mem_total> <mem_avail>
//   link <i> <j> <bandwidth_Bps> <latency_sec>     (every ordered pair i != j)
std::string SerializeFleet(const FleetProfile& fleet);
absl::StatusOr<FleetProfile> ParseFleet(std::string_view text);
absl::StatusOr<FleetProfile> LoadFleet(const std::string& path);
absl::Status SaveFleet(const FleetProfile& fleet, const std::string& path);

// Builds a fleet with one uniform link shape between every ordered pair.
FleetProfile UniformFleet(std::vector<DeviceProfile> devices,
                          double bandwidth_bps, double latency_sec);

}  // namespace pipelink

#endif  // PIPELINK_MONITOR_FLEET_H_
