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

#ifndef PIPELINK_ASSIGN_ASSIGNMENT_H_
#define PIPELINK_ASSIGN_ASSIGNMENT_H_

#include <optional>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/assign/cost_model.h"

namespace pipelink {

// Inclusive module range; empty when first > last.
struct ModuleRange {
  int first = 0;
  int last = -1;

  bool empty() const { return first > last; }
  int size() const { return empty() ? 0 : last - first + 1; }
  bool contains(int j) const { return j >= first && j <= last; }
  bool operator==(const ModuleRange&) const = default;
};

// A placement of sub-modules onto devices. For contiguous plans the ring
// position p (device device_order[p]) owns modules [split[p], split[p+1]).
struct AssignmentPlan {
  Assignment x;
  std::vector<DeviceId> device_order;
  std::vector<int> split;  // m + 1 entries; empty for non-contiguous plans
  CostBreakdown cost;

  size_t num_devices() const { return x.rows(); }
  size_t num_modules() const { return x.cols(); }
  bool contiguous() const { return !split.empty(); }
  ModuleRange range(DeviceId device) const;
  DeviceId device_of(int module) const;
};

// Builds X from an order and split vector and evaluates its cost.
absl::StatusOr<AssignmentPlan> MakeContiguousPlan(
    const CostModel& model, std::vector<DeviceId> device_order,
    std::vector<int> split);

// Checks column sums, memory, contiguity in ring order and that the stored
// objective matches a fresh evaluation.
absl::Status ValidatePlan(const AssignmentPlan& plan, const CostModel& model);

// Exact minimum over every device ordering and every contiguous split
// (devices may receive an empty range). Ties go to the lexicographically
// smallest (device_order, split).
absl::StatusOr<AssignmentPlan> SolveAssignment(const CostModel& model);

// Devices in id order receive floor/ceil(n/m) consecutive modules, the
// remainder going to the earliest devices. Requires n >= m.
absl::StatusOr<AssignmentPlan> BaselineAssignment(const CostModel& model);

struct BruteForceLimits {
  int max_devices = 3;
  int max_modules = 10;
  // When false, every column-sum-one matrix is enumerated instead.
  bool contiguous = true;
  int max_modules_unrestricted = 6;
};

// Exhaustive enumeration, used as an oracle.
absl::StatusOr<AssignmentPlan> BruteForceAssignment(
    const CostModel& model, const BruteForceLimits& limits = {});

}  // namespace pipelink

#endif  // PIPELINK_ASSIGN_ASSIGNMENT_H_
