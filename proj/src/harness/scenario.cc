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

#include "pipelink/harness/scenario.h"

#include <cassert>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "pipelink/graph/decoder_graph.h"
#include "pipelink/harness/chain_graph.h"

namespace pipelink {
namespace {

FleetProfile MakeFleet(const std::vector<double>& speeds,
                       const std::vector<int64_t>& mem, double bandwidth,
                       double latency) {
  std::vector<DeviceProfile> devices;
  for (size_t i = 0; i < speeds.size(); ++i) {
    devices.push_back({static_cast<DeviceId>(i), speeds[i], mem[i], mem[i]});
  }
  return UniformFleet(std::move(devices), bandwidth, latency);
}

ComputationGraph Chain(const ChainSpec& spec) {
  auto graph = BuildChainGraph(spec);
  assert(graph.ok());
  return *std::move(graph);
}

}  // namespace

ExperimentSpec HeteroScenario() {
  ExperimentSpec spec;
  spec.name = "hetero-3dev";
  spec.description =
      "8-block decoder on two fast devices and one slow one (3:3:1); "
      "baseline equal split vs optimized placement";
  spec.seed = 7;
  spec.graph = GenerateDecoderGraph(8, 64, spec.seed);
  // About 1.7 MB of weights; each device budgets 0.96 MB at beta 0.8.
  spec.fleet = MakeFleet({3e6, 3e6, 1e6}, {1200000, 1200000, 1200000}, 2.5e7,
                         0.005);
  spec.beta = 0.8;
  spec.time_scale = 0.05;
  spec.variants = {{"baseline", PlanKind::kBaseline},
                   {"optimized", PlanKind::kOptimized}};
  return spec;
}

ExperimentSpec MidSlowScenario() {
  constexpr int kModules = 12;
  constexpr int64_t kModuleMem = 50'000'000;
  ChainSpec chain;
  chain.flops.assign(kModules, 75'000'000);  // 0.075 s on the slow device
  chain.mem.assign(kModules, kModuleMem);
  chain.activation_bytes = 10'000;
  chain.return_bytes = 10'000;

  ExperimentSpec spec;
  spec.name = "lb-midslow";
  spec.description =
      "12 sub-modules split 4/4/4 with a 3x slower middle device; "
      "balancer off vs on (enabled after 2 samples)";
  spec.graph = Chain(chain);
  spec.beta = 0.8;
  // Budgets: 6.2 modules on the outer devices, 4.5 on the middle one.
  const int64_t outer = static_cast<int64_t>(6.2 * kModuleMem / 0.8);
  const int64_t middle = static_cast<int64_t>(4.5 * kModuleMem / 0.8);
  spec.fleet = MakeFleet({3e9, 1e9, 3e9}, {outer, middle, outer}, 1e8, 0.005);
  spec.time_scale = 0.05;
  spec.balance_after_samples = 2;
  spec.trigger.window = 10;
  spec.trigger.theta = 1.5;
  spec.trigger.beta = spec.beta;
  spec.overheads.reload_bytes_per_sec = CalibratedReloadRate(8 * kModuleMem);
  spec.variants = {{"balancer-off", PlanKind::kBaseline, 1,
                    ResidualMode::kDirect, false},
                   {"balancer-on", PlanKind::kBaseline, 1,
                    ResidualMode::kDirect, true}};
  return spec;
}

ExperimentSpec ResidualScenario() {
  ChainSpec chain;
  chain.flops.assign(3, 10'000'000);  // 0.01 s per stage
  chain.mem.assign(3, 1'000'000);
  chain.activation_bytes = 1'500'000;
  chain.residuals = {{0, 2, 15'000}};
  chain.return_bytes = 460'000;

  ExperimentSpec spec;
  spec.name = "resvspiggy-3dev";
  spec.description =
      "3-stage chain with 1.5 MB activations and a 15 KB skip connection; "
      "piggybacked vs direct residual delivery";
  spec.graph = Chain(chain);
  spec.beta = 0.8;
  // One stage per device.
  spec.fleet = MakeFleet({1e9, 1e9, 1e9}, {1'250'000, 1'250'000, 1'250'000},
                         6.6e6, 0.008);
  spec.workload.samples = 3;
  spec.workload.tokens = 8;
  spec.time_scale = 1.0;
  spec.variants = {{"piggyback", PlanKind::kBaseline, 1,
                    ResidualMode::kPiggyback, false},
                   {"residual", PlanKind::kBaseline, 1, ResidualMode::kDirect,
                    false}};
  return spec;
}

ExperimentSpec ThreadsScenario() {
  ChainSpec chain;
  chain.flops.assign(3, 100'000'000);  // 0.1 s per stage
  chain.mem.assign(3, 1'000'000);
  chain.activation_bytes = 100'000;  // 0.04 s + 0.01 s per hop
  chain.return_bytes = 100'000;

  ExperimentSpec spec;
  spec.name = "threads-sweep";
  spec.description =
      "3 stages of 0.1 s joined by 0.05 s hops; 1 to 5 samples in flight";
  spec.graph = Chain(chain);
  spec.beta = 0.8;
  spec.fleet = MakeFleet({1e9, 1e9, 1e9}, {1'250'000, 1'250'000, 1'250'000},
                         1e7, 0.04);
  spec.workload.samples = 30;
  spec.workload.tokens = 2;
  spec.time_scale = 0.2;
  for (int k = 1; k <= 5; ++k) {
    spec.variants.push_back({absl::StrCat("threads-", k), PlanKind::kOptimized,
                             k, ResidualMode::kDirect, false});
  }
  return spec;
}

std::vector<std::string> ScenarioNames() {
  return {"hetero-3dev", "lb-midslow", "resvspiggy-3dev", "threads-sweep"};
}

absl::StatusOr<ExperimentSpec> GetScenario(std::string_view name) {
  if (name == "hetero-3dev") return HeteroScenario();
  if (name == "lb-midslow") return MidSlowScenario();
  if (name == "resvspiggy-3dev") return ResidualScenario();
  if (name == "threads-sweep") return ThreadsScenario();
  return absl::NotFoundError(
      absl::StrCat("unknown scenario '", std::string(name), "'; available: ",
                   absl::StrJoin(ScenarioNames(), ", ")));
}

}  // namespace pipelink
