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

#include "pipelink/harness/experiment.h"

#include <map>
#include <set>

#include "absl/strings/str_cat.h"
#include "pipelink/common/status_macros.h"

namespace pipelink {

std::string_view PlanKindName(PlanKind kind) {
  return kind == PlanKind::kBaseline ? "baseline" : "optimized";
}

absl::StatusOr<PlanKind> ParsePlanKind(std::string_view name) {
  if (name == "baseline") return PlanKind::kBaseline;
  if (name == "optimized") return PlanKind::kOptimized;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown plan kind '", std::string(name),
      "' (expected baseline or optimized)"));
}

absl::StatusOr<ModelSetup> SetupModel(const ComputationGraph& graph,
                                      const FleetProfile& fleet, double beta) {
  RETURN_IF_ERROR(ValidateFleet(fleet));
  ModelSetup setup;
  ASSIGN_OR_RETURN(setup.partition, Partition(graph, FindCandidates(graph)));
  setup.profiles = ProfileSubmodules(graph, setup.partition);
  const int64_t return_bytes = graph.node(graph.sink()).out_bytes;
  ASSIGN_OR_RETURN(setup.dag, BuildModuleDag(setup.partition, setup.profiles,
                                             return_bytes));
  ASSIGN_OR_RETURN(setup.model,
                   BuildCostModel(setup.profiles, return_bytes, fleet, beta));
  return setup;
}

absl::StatusOr<Placement> Place(const CostModel& model, PlanKind kind) {
  Placement out;
  if (kind == PlanKind::kBaseline) {
    ASSIGN_OR_RETURN(out.plan, BaselineAssignment(model));
  } else {
    ASSIGN_OR_RETURN(out.plan, SolveAssignment(model));
  }
  out.overlap = SolveOverlap(out.plan, model);
  return out;
}

absl::Status ValidateExperiment(const ExperimentSpec& spec) {
  if (!spec.graph.has_value()) {
    return absl::InvalidArgumentError(
        absl::StrCat("experiment '", spec.name, "' has no graph"));
  }
  if (spec.variants.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("experiment '", spec.name, "' has no variants"));
  }
  if (spec.workload.samples < 1 || spec.workload.tokens < 1) {
    return absl::InvalidArgumentError(
        "workload needs at least one sample and one token");
  }
  if (!(spec.time_scale > 0)) {
    return absl::InvalidArgumentError("time scale must be positive");
  }
  std::set<std::string> names;
  for (const Variant& v : spec.variants) {
    if (v.name.empty() || !names.insert(v.name).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("variant names must be unique and non-empty: '",
                       v.name, "'"));
    }
    if (v.threads < 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("variant '", v.name, "' needs threads >= 1"));
    }
  }
  return absl::OkStatus();
}

absl::Status RunExperiment(const ExperimentSpec& spec,
                           ExperimentResult* result) {
  RETURN_IF_ERROR(ValidateExperiment(spec));
  result->name = spec.name;
  result->workload = spec.workload;
  result->seed = spec.seed;
  result->time_scale = spec.time_scale;
  result->beta = spec.beta;
  result->variants.clear();

  ASSIGN_OR_RETURN(const ModelSetup setup,
                   SetupModel(*spec.graph, spec.fleet, spec.beta));
  std::map<PlanKind, Placement> placements;
  for (const Variant& v : spec.variants) {
    auto it = placements.find(v.plan);
    if (it == placements.end()) {
      auto placed = Place(setup.model, v.plan);
      if (!placed.ok()) {
        return absl::Status(placed.status().code(),
                            absl::StrCat("variant ", v.name, ": ",
                                         placed.status().message()));
      }
      it = placements.emplace(v.plan, *std::move(placed)).first;
    }
    PipelineOptions options;
    options.threads = v.threads;
    options.mode = v.mode;
    options.balancer = v.balancer;
    options.balance_after_samples = spec.balance_after_samples;
    options.trigger = spec.trigger;
    options.overheads = spec.overheads;
    options.time_scale = spec.time_scale;
    auto report = RunPipeline(setup.dag, it->second.overlap, setup.model,
                              spec.fleet, spec.workload, options);
    if (!report.ok()) {
      return absl::Status(report.status().code(),
                          absl::StrCat("variant ", v.name, ": ",
                                       report.status().message()));
    }
    result->variants.push_back({v, it->second.plan, *std::move(report)});
  }
  return absl::OkStatus();
}

}  // namespace pipelink
