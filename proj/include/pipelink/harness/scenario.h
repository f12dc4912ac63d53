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

#ifndef PIPELINK_HARNESS_SCENARIO_H_
#define PIPELINK_HARNESS_SCENARIO_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "pipelink/harness/experiment.h"

namespace pipelink {

// Names of the bundled experiments, sorted.
std::vector<std::string> ScenarioNames();

// Returns the named experiment. Unknown names fail with NotFound listing
// every available name.
absl::StatusOr<ExperimentSpec> GetScenario(std::string_view name);

// Individual scenarios.
//
// hetero-3dev: decoder graph on two fast devices and one slow one (3:3:1).
// Variants: baseline, optimized.
ExperimentSpec HeteroScenario();
// lb-midslow: 12 equal sub-modules split 4/4/4 with the slow device in the
// middle; its neighbours have room for two extra sub-modules each.
// Variants: balancer-off, balancer-on.
ExperimentSpec MidSlowScenario();
// resvspiggy-3dev: 1.5 MB activations and a 15 KB skip connection over
// 6.6 MB/s links. Variants: piggyback, residual.
ExperimentSpec ResidualScenario();
// threads-sweep: three 0.1 s stages joined by 0.05 s hops.
// Variants: threads-1 .. threads-5.
ExperimentSpec ThreadsScenario();

}  // namespace pipelink

#endif  // PIPELINK_HARNESS_SCENARIO_H_
