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

#include "pipelink/balance/transition.h"

#include "absl/strings/str_cat.h"

namespace pipelink {

TransitionSchedule ScheduleTransition(const RebalanceDecision& decision,
                                      const std::vector<DeviceId>& ring,
                                      int64_t current_seq, uint32_t epoch) {
  TransitionSchedule schedule;
  schedule.epoch = epoch;
  schedule.order = ring;
  if (decision.moves.empty()) return schedule;
  schedule.new_active = decision.new_active;
  schedule.moves = decision.moves;
  for (DeviceId d : ring) schedule.switch_points[d] = current_seq + 1;
  return schedule;
}

absl::Status ValidateSchedule(const TransitionSchedule& schedule) {
  if (schedule.empty()) {
    if (!schedule.switch_points.empty()) {
      return absl::FailedPreconditionError(
          "schedule without moves has switch points");
    }
    return absl::OkStatus();
  }
  if (schedule.switch_points.size() != schedule.order.size()) {
    return absl::FailedPreconditionError(
        "switch points do not cover the ring");
  }
  int64_t prev = -1;
  for (DeviceId d : schedule.order) {
    auto it = schedule.switch_points.find(d);
    if (it == schedule.switch_points.end()) {
      return absl::FailedPreconditionError(
          absl::StrCat("device ", d, " has no switch point"));
    }
    if (it->second < prev) {
      return absl::FailedPreconditionError(absl::StrCat(
          "switch point of device ", d, " precedes its ring predecessor"));
    }
    prev = it->second;
  }
  return absl::OkStatus();
}

TransitionCharge ChargeFor(const TransitionSchedule& schedule, DeviceId device,
                           const std::vector<int64_t>& module_mem,
                           const OverheadConfig& overheads) {
  TransitionCharge charge;
  for (const ModuleMove& mv : schedule.moves) {
    if (mv.from == device) {
      charge.release.push_back(mv.module);
      charge.release_sec += overheads.release_sec_per_module;
    }
    if (mv.to == device) {
      charge.load.push_back(mv.module);
      charge.reload_sec += static_cast<double>(module_mem[mv.module]) /
                           overheads.reload_bytes_per_sec;
    }
  }
  return charge;
}

}  // namespace pipelink
