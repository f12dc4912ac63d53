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

#include "pipelink/monitor/snapshot.h"

#include <algorithm>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace pipelink {

std::optional<DeviceReading> ResidentSetAgent::Poll(double /*timeout_sec*/) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!responsive_) return std::nullopt;
  int64_t used = 0;
  for (const auto& [module, bytes] : resident_) used += bytes;
  return DeviceReading{id_, idle_avail_bytes_ - used, std::nullopt};
}

void ResidentSetAgent::Load(int module, int64_t bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  resident_.emplace(module, bytes);
}

void ResidentSetAgent::Release(int module) {
  std::lock_guard<std::mutex> lock(mu_);
  resident_.erase(module);
}

int64_t ResidentSetAgent::resident_bytes() const {
  std::lock_guard<std::mutex> lock(mu_);
  int64_t used = 0;
  for (const auto& [module, bytes] : resident_) used += bytes;
  return used;
}

bool ResidentSetAgent::resident(int module) const {
  std::lock_guard<std::mutex> lock(mu_);
  return resident_.count(module) > 0;
}

void ResidentSetAgent::SetResponsive(bool responsive) {
  std::lock_guard<std::mutex> lock(mu_);
  responsive_ = responsive;
}

absl::StatusOr<FleetProfile> SnapshotRuntime(
    const FleetProfile& static_fleet, std::span<DeviceAgent* const> agents,
    double timeout_sec) {
  FleetProfile snapshot = static_fleet;
  std::vector<bool> answered(static_fleet.size(), false);
  for (DeviceAgent* agent : agents) {
    const DeviceId id = agent->id();
    if (id < 0 || static_cast<size_t>(id) >= static_fleet.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("agent reports unknown device ", id));
    }
    std::optional<DeviceReading> reading = agent->Poll(timeout_sec);
    if (!reading) continue;
    answered[id] = true;
    DeviceProfile& d = snapshot.devices[id];
    d.mem_avail_bytes =
        std::clamp<int64_t>(reading->mem_avail_bytes, 0, d.mem_total_bytes);
    if (reading->flops_per_sec && *reading->flops_per_sec > 0) {
      d.flops_per_sec = *reading->flops_per_sec;
    }
  }
  std::vector<DeviceId> missing;
  for (size_t i = 0; i < answered.size(); ++i) {
    if (!answered[i]) missing.push_back(static_cast<DeviceId>(i));
  }
  if (!missing.empty()) {
    return absl::UnavailableError(absl::StrCat(
        "partial snapshot: no reading from devices [",
        absl::StrJoin(missing, ","), "]"));
  }
  return snapshot;
}

}  // namespace pipelink
