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

#ifndef PIPELINK_RUNTIME_TRANSMISSION_MAP_H_
#define PIPELINK_RUNTIME_TRANSMISSION_MAP_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/assign/assignment.h"
#include "pipelink/graph/partition.h"
#include "pipelink/monitor/fleet.h"

namespace pipelink {

struct ModuleInput {
  int src = 0;
  int64_t bytes = 0;
};

// Module-level dataflow of a partitioned graph.
struct ModuleDag {
  std::vector<int64_t> flops;
  std::vector<int64_t> mem;
  // inputs[j] lists the producers of module j in ascending order. Module 0
  // additionally consumes the token input.
  std::vector<std::vector<ModuleInput>> inputs;
  // Logits returned from the last device to the Leader after every pass.
  int64_t return_bytes = 0;

  size_t size() const { return flops.size(); }
};

// One producer/consumer pair per distinct (producer subgraph, consumer
// subgraph) in the sequential and residual dependency maps; bytes come from
// the sub-module profiles.
absl::StatusOr<ModuleDag> BuildModuleDag(
    const PartitionPlan& partition,
    const std::vector<SubModuleProfile>& profiles, int64_t return_bytes);

absl::Status ValidateModuleDag(const ModuleDag& dag);

enum class ResidualMode { kPiggyback, kDirect };

// "piggyback" or "residual".
std::string_view ResidualModeName(ResidualMode mode);
absl::StatusOr<ResidualMode> ParseResidualMode(std::string_view name);

struct SegmentRoute {
  int src_module = 0;
  int dst_module = 0;
  DeviceId from = 0;
  DeviceId to = 0;
  int64_t bytes = 0;

  bool sequential() const { return dst_module == src_module + 1; }
  bool operator==(const SegmentRoute&) const = default;
};

struct DeviceTransmission {
  DeviceId device = 0;
  int position = -1;  // ring position, -1 when the device hosts nothing
  ModuleRange modules;
  // Next ring device; absent on the last one.
  std::optional<DeviceId> sequential_target;
  // Sequential outputs carried by the outgoing ACTIVATION frame.
  std::vector<SegmentRoute> activation;
  // Piggyback mode: residual segments riding the outgoing ACTIVATION frame,
  // produced here or relayed from an earlier device.
  std::vector<SegmentRoute> piggyback;
  // Direct mode: residual segments produced here, one RESIDUAL frame per
  // target device carrying all of that pair's segments.
  std::vector<SegmentRoute> residual_routes;
  // Distinct residual targets, ascending latency from this device.
  std::vector<DeviceId> send_order;
  // Last device only: the Leader.
  std::optional<DeviceId> return_target;
  // Dependencies whose producer and consumer both live here.
  std::vector<SegmentRoute> local;
  // Segments consumed here and produced on another device.
  std::vector<SegmentRoute> inputs;
  // Devices that send this device a RESIDUAL frame each pass.
  std::vector<DeviceId> residual_sources;
};

struct TransmissionMap {
  ResidualMode mode = ResidualMode::kDirect;
  std::vector<DeviceId> ring;       // devices hosting modules, Leader first
  std::vector<DeviceId> device_of;  // active device per module
  std::vector<DeviceTransmission> devices;  // indexed by device id

  DeviceId leader() const { return ring.front(); }
  DeviceId last() const { return ring.back(); }
};

// `device_order` is the plan's ring order (devices without modules are
// skipped); `active` maps every module to its executing device and must give
// each device a contiguous range, ranges following ring order.
absl::StatusOr<TransmissionMap> BuildTransmissionMaps(
    const ModuleDag& dag, const std::vector<DeviceId>& device_order,
    const std::vector<DeviceId>& active, const FleetProfile& fleet,
    ResidualMode mode);

}  // namespace pipelink

#endif  // PIPELINK_RUNTIME_TRANSMISSION_MAP_H_
