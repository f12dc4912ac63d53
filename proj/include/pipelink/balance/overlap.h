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

#ifndef PIPELINK_BALANCE_OVERLAP_H_
#define PIPELINK_BALANCE_OVERLAP_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/assign/assignment.h"
#include "pipelink/assign/cost_model.h"

namespace pipelink {

// Base placement plus the sub-modules each device may additionally host from
// its ring neighbours. x_l(i, j) marks module j immediately left of device i's
// base range (owned by the preceding non-empty device); x_r(i, j) marks module
// j immediately right of it.
struct OverlapPlan {
  Assignment x;
  Assignment x_l;
  Assignment x_r;
  std::vector<DeviceId> device_order;  // ring order, empty devices included
  std::vector<ModuleRange> base;       // indexed by device id
  std::vector<int> left_extension;     // indexed by device id
  std::vector<int> right_extension;    // indexed by device id
  std::vector<DeviceId> active;        // indexed by module
  std::vector<int> movable;            // ascending module indices

  size_t num_devices() const { return x.rows(); }
  size_t num_modules() const { return x.cols(); }
  // x | x_l | x_r.
  Assignment Hosted() const;
  // Devices hosting `module` (one or two).
  std::vector<DeviceId> Hosts(int module) const;
  bool IsMovable(int module) const;
  // Non-empty devices in ring order.
  std::vector<DeviceId> RingDevices() const;
};

// The plan's own placement with no extensions; every module is unmovable.
OverlapPlan BaseOverlap(const AssignmentPlan& plan);

// Chooses contiguous left/right extensions for every non-empty device that
// maximize the memory they cover, subject to each device's hosted set fitting
// beta * mem_avail and every module being hosted by at most two adjacent
// devices. Solved exactly by dynamic programming over ring positions.
OverlapPlan SolveOverlap(const AssignmentPlan& plan, const CostModel& model);

// Sum over devices and modules of mem * ((x_l | x) + (x_r | x)).
int64_t OverlapObjective(const OverlapPlan& overlap,
                         const std::vector<int64_t>& module_mem);

// Memory covered by the extensions alone.
int64_t OverlapBytes(const OverlapPlan& overlap,
                     const std::vector<int64_t>& module_mem);

// Checks matrix shapes, extension adjacency, the hosted-memory budget, the
// two-host limit and that `active` selects a host for every module with
// contiguous ranges in ring order.
absl::Status ValidateOverlap(const OverlapPlan& overlap, const CostModel& model);

// Active map -> placement matrix.
Assignment ActiveAssignment(const OverlapPlan& overlap,
                            const std::vector<DeviceId>& active);

// Text format:
//   overlap v1 <m> <n> <objective_bytes>
//   device <id> base <first> <last> left <k> right <k>   (or "base none")
//   movable <j> ...
std::string SerializeOverlap(const OverlapPlan& overlap,
                             const std::vector<int64_t>& module_mem);

}  // namespace pipelink

#endif  // PIPELINK_BALANCE_OVERLAP_H_
