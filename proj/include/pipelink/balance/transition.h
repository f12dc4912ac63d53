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

#ifndef PIPELINK_BALANCE_TRANSITION_H_
#define PIPELINK_BALANCE_TRANSITION_H_

#include <cstdint>
#include <map>
#include <vector>

#include "absl/status/status.h"
#include "pipelink/balance/rebalance.h"

namespace pipelink {

// Devices adopt the new active map for every pass whose sequence number is at
// least their switch point. Passes are numbered by the Leader in issue order.
struct TransitionSchedule {
  uint32_t epoch = 0;                       // epoch adopted at the switch
  std::vector<DeviceId> order;              // ring order, Leader first
  std::map<DeviceId, int64_t> switch_points;
  std::vector<DeviceId> new_active;
  std::vector<ModuleMove> moves;

  bool empty() const { return moves.empty(); }
};

// The Leader switches after the pass `current_seq` it has in flight; every
// later device switches at the same pass, reached in ring order, so no pass
// runs under a mixture of maps. An empty decision yields an empty schedule.
TransitionSchedule ScheduleTransition(const RebalanceDecision& decision,
                                      const std::vector<DeviceId>& ring,
                                      int64_t current_seq, uint32_t epoch);

// Switch points exist for exactly the ring devices and never decrease along
// ring order.
absl::Status ValidateSchedule(const TransitionSchedule& schedule);

// Work a device performs when it adopts a schedule.
struct TransitionCharge {
  std::vector<int> release;  // modules that stop being active here
  std::vector<int> load;     // modules that become active here
  double release_sec = 0;
  double reload_sec = 0;
};

TransitionCharge ChargeFor(const TransitionSchedule& schedule, DeviceId device,
                           const std::vector<int64_t>& module_mem,
                           const OverheadConfig& overheads);

}  // namespace pipelink

#endif  // PIPELINK_BALANCE_TRANSITION_H_
