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

#ifndef PIPELINK_ASSIGN_PLAN_IO_H_
#define PIPELINK_ASSIGN_PLAN_IO_H_

#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "pipelink/assign/assignment.h"

namespace pipelink {

// Text format:
//   plan v1 <m> <n> <objective>
//   order <i0> <i1> ...
//   assign <device> <first_module> <last_module>    (or "assign <device> none")
std::string SerializePlan(const AssignmentPlan& plan);

// Rebuilds a contiguous plan and re-evaluates it under `model`.
absl::StatusOr<AssignmentPlan> ParsePlan(std::string_view text,
                                         const CostModel& model);

}  // namespace pipelink

#endif  // PIPELINK_ASSIGN_PLAN_IO_H_
