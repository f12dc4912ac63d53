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

#ifndef PIPELINK_HARNESS_EXPERIMENT_H_
#define PIPELINK_HARNESS_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/assign/assignment.h"
#include "pipelink/assign/cost_model.h"
#include "pipelink/balance/overlap.h"
#include "pipelink/balance/rebalance.h"
#include "pipelink/graph/graph.h"
#include "pipelink/graph/partition.h"
#include "pipelink/monitor/fleet.h"
#include "pipelink/runtime/executor.h"
#include "pipelink/runtime/pipeline.h"
#include "pipelink/runtime/transmission_map.h"

namespace pipelink {

// Equal contiguous split in device-id order, or the optimizer's placement.
enum class PlanKind { kBaseline, kOptimized };

std::string_view PlanKindName(PlanKind kind);
absl::StatusOr<PlanKind> ParsePlanKind(std::string_view name);

// Everything derived from (graph, fleet, beta) before placement.
struct ModelSetup {
  PartitionPlan partition;
  std::vector<SubModuleProfile> profiles;
  ModuleDag dag;
  CostModel model;
};

// Partitions `graph` at every candidate node and builds the cost model. The
// logits returned each token are the sink's output.
absl::StatusOr<ModelSetup> SetupModel(const ComputationGraph& graph,
                                      const FleetProfile& fleet, double beta);

struct Placement {
  AssignmentPlan plan;
  OverlapPlan overlap;
};

absl::StatusOr<Placement> Place(const CostModel& model, PlanKind kind);

struct Variant {
  std::string name;
  PlanKind plan = PlanKind::kOptimized;
  int threads = 1;
  ResidualMode mode = ResidualMode::kDirect;
  bool balancer = false;
};

// A comparison matrix. Every variant runs the same graph, fleet, workload,
// seed and time scale.
struct ExperimentSpec {
  std::string name;
  std::string description;
  std::optional<ComputationGraph> graph;
  FleetProfile fleet;
  double beta = kDefaultBeta;
  Workload workload;
  std::vector<Variant> variants;
  // Seeds the graph generator when the graph is generated.
  uint64_t seed = 1;
  double time_scale = 1.0;
  int balance_after_samples = 2;
  TriggerOptions trigger;
  OverheadConfig overheads;
};

absl::Status ValidateExperiment(const ExperimentSpec& spec);

struct VariantResult {
  Variant variant;
  AssignmentPlan plan;
  RunReport report;
};

struct ExperimentResult {
  std::string name;
  Workload workload;
  uint64_t seed = 0;
  double time_scale = 1.0;
  double beta = kDefaultBeta;
  std::vector<VariantResult> variants;
};

// Runs the variants in order, appending each finished one to `result`. On
// failure `result` keeps the variants that completed and the error names the
// variant that failed.
absl::Status RunExperiment(const ExperimentSpec& spec, ExperimentResult* result);

}  // namespace pipelink

#endif  // PIPELINK_HARNESS_EXPERIMENT_H_
