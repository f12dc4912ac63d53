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

// pipelink: plan, simulate and compare pipelined inference on a device ring.
//
//   pipelink profile  --fleet F [--time-scale S] [--out DIR]
//   pipelink plan     (--graph G | --gen-blocks N --hidden H) --fleet F
//   pipelink simulate (--scenario NAME | graph + --fleet F) [variant flags]
//   pipelink compare  (--scenario NAME | graph + --fleet F) [--out DIR]
//   pipelink report   --in DIR [--out DIR]

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "pipelink/assign/plan_io.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/common/text_format.h"
#include "pipelink/graph/decoder_graph.h"
#include "pipelink/graph/graph_io.h"
#include "pipelink/harness/experiment.h"
#include "pipelink/harness/report.h"
#include "pipelink/harness/scenario.h"
#include "pipelink/monitor/measure.h"

namespace pipelink {
namespace {

struct Flags {
  std::string scenario;
  std::string graph;
  int gen_blocks = 8;
  int64_t hidden = 64;
  std::string fleet;
  double beta = kDefaultBeta;
  std::string plan = "optimized";
  int threads = 1;
  std::string mode = "residual";
  std::string balance = "off";
  int samples = 10;
  int context = 10;
  int tokens = 10;
  uint64_t seed = 1;
  double time_scale = 1.0;
  std::string out = ".";
  std::string in;
};

// Which flags the user set explicitly; these override scenario values.
struct Given {
  CLI::Option* graph = nullptr;
  CLI::Option* gen_blocks = nullptr;
  CLI::Option* fleet = nullptr;
  CLI::Option* beta = nullptr;
  CLI::Option* samples = nullptr;
  CLI::Option* context = nullptr;
  CLI::Option* tokens = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* time_scale = nullptr;

  static bool Set(const CLI::Option* o) { return o != nullptr && o->count() > 0; }
};

absl::StatusOr<ComputationGraph> LoadGraphFromFlags(const Flags& f) {
  if (!f.graph.empty()) return LoadGraph(f.graph);
  if (f.gen_blocks < 1 || f.hidden < 1) {
    return absl::InvalidArgumentError("--gen-blocks and --hidden must be >= 1");
  }
  return GenerateDecoderGraph(f.gen_blocks, f.hidden, f.seed);
}

// Scenario (when named) with explicitly given flags applied on top, or an
// experiment assembled from flags alone.
absl::StatusOr<ExperimentSpec> BaseSpec(const Flags& f, const Given& g) {
  ExperimentSpec spec;
  if (!f.scenario.empty()) {
    ASSIGN_OR_RETURN(spec, GetScenario(f.scenario));
    if (Given::Set(g.seed)) spec.seed = f.seed;
    if (Given::Set(g.graph) || Given::Set(g.gen_blocks)) {
      ASSIGN_OR_RETURN(spec.graph, LoadGraphFromFlags(f));
    }
    if (Given::Set(g.fleet)) {
      ASSIGN_OR_RETURN(spec.fleet, LoadFleet(f.fleet));
    }
    if (Given::Set(g.beta)) spec.beta = f.beta;
    if (Given::Set(g.samples)) spec.workload.samples = f.samples;
    if (Given::Set(g.context)) spec.workload.context_len = f.context;
    if (Given::Set(g.tokens)) spec.workload.tokens = f.tokens;
    if (Given::Set(g.time_scale)) spec.time_scale = f.time_scale;
  } else {
    if (f.fleet.empty()) {
      return absl::InvalidArgumentError("--fleet is required without --scenario");
    }
    spec.name = "custom";
    spec.seed = f.seed;
    ASSIGN_OR_RETURN(spec.graph, LoadGraphFromFlags(f));
    ASSIGN_OR_RETURN(spec.fleet, LoadFleet(f.fleet));
    spec.beta = f.beta;
    spec.workload.samples = f.samples;
    spec.workload.context_len = f.context;
    spec.workload.tokens = f.tokens;
    spec.time_scale = f.time_scale;
  }
  spec.trigger.beta = spec.beta;
  return spec;
}

absl::StatusOr<Variant> VariantFromFlags(const Flags& f) {
  Variant v;
  ASSIGN_OR_RETURN(v.plan, ParsePlanKind(f.plan));
  ASSIGN_OR_RETURN(v.mode, ParseResidualMode(f.mode));
  v.threads = f.threads;
  v.balancer = f.balance == "on";
  v.name = absl::StrCat(std::string(PlanKindName(v.plan)), "-t", v.threads,
                        "-", std::string(ResidualModeName(v.mode)),
                        v.balancer ? "-lb" : "");
  return v;
}

absl::Status EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  return absl::OkStatus();
}

absl::Status RunProfile(const Flags& f) {
  if (f.fleet.empty()) return absl::InvalidArgumentError("--fleet is required");
  ASSIGN_OR_RETURN(FleetProfile fleet, LoadFleet(f.fleet));
  FleetProfile measured = fleet;
  const ComputationGraph probe = GenerateDecoderGraph(2, f.hidden, f.seed);
  std::printf("%-6s %14s %14s\n", "device", "flops/s(cfg)", "flops/s(meas)");
  for (DeviceProfile& d : measured.devices) {
    SimulatedDevice device(d.flops_per_sec, f.time_scale);
    ASSIGN_OR_RETURN(d.flops_per_sec, MeasureFlops(device, probe));
    std::printf("%-6d %14.4g %14.4g\n", d.id, fleet.devices[d.id].flops_per_sec,
                d.flops_per_sec);
  }
  BandwidthProbeOptions options;
  options.chunk_bytes = 256 * 1024;
  options.warmup_rounds = 1;
  options.measured_rounds = 3;
  options.time_scale = f.time_scale;
  std::printf("%-6s %-6s %14s %14s\n", "from", "to", "B/s(cfg)", "B/s(meas)");
  for (size_t a = 0; a < fleet.size(); ++a) {
    for (size_t b = 0; b < fleet.size(); ++b) {
      if (a == b) continue;
      const LinkShape shape = fleet.link(static_cast<DeviceId>(a),
                                         static_cast<DeviceId>(b));
      ASSIGN_OR_RETURN(const BandwidthEstimate est,
                       EstimateBandwidth(static_cast<DeviceId>(a),
                                         static_cast<DeviceId>(b), shape,
                                         options));
      // The probe time includes the link latency, which the fleet file
      // already carries separately.
      const double bytes = static_cast<double>(options.chunk_bytes);
      const double transfer = bytes / est.median_bps - shape.latency_sec;
      measured.bandwidth(a, b) = transfer > 0 ? bytes / transfer : est.median_bps;
      std::printf("%-6zu %-6zu %14.4g %14.4g\n", a, b, fleet.bandwidth(a, b),
                  measured.bandwidth(a, b));
    }
  }
  RETURN_IF_ERROR(EnsureDir(f.out));
  const std::string path = f.out + "/fleet.txt";
  RETURN_IF_ERROR(SaveFleet(measured, path));
  std::printf("wrote %s\n", path.c_str());
  return absl::OkStatus();
}

absl::Status RunPlan(const Flags& f, const Given& g) {
  ASSIGN_OR_RETURN(const ExperimentSpec spec, BaseSpec(f, g));
  ASSIGN_OR_RETURN(const ModelSetup setup,
                   SetupModel(*spec.graph, spec.fleet, spec.beta));
  ASSIGN_OR_RETURN(const PlanKind kind, ParsePlanKind(f.plan));
  ASSIGN_OR_RETURN(const Placement placed, Place(setup.model, kind));
  RETURN_IF_ERROR(EnsureDir(f.out));
  const std::string plan_path = f.out + "/plan.txt";
  const std::string overlap_path = f.out + "/overlap.txt";
  RETURN_IF_ERROR(WriteStringToFile(plan_path, SerializePlan(placed.plan)));
  RETURN_IF_ERROR(WriteStringToFile(
      overlap_path, SerializeOverlap(placed.overlap, setup.model.module_mem)));
  std::printf("graph: %zu nodes, %zu edges -> %zu sub-modules\n",
              spec.graph->num_nodes(), spec.graph->num_edges(),
              setup.partition.size());
  std::printf("%s plan: objective %.6f s (compute %.6f, data %.6f)\n",
              std::string(PlanKindName(kind)).c_str(),
              placed.plan.cost.objective, placed.plan.cost.t_compute,
              placed.plan.cost.t_data);
  for (DeviceId d : placed.plan.device_order) {
    const ModuleRange r = placed.plan.range(d);
    if (r.empty()) {
      std::printf("  device %d: none\n", d);
    } else {
      std::printf("  device %d: sub-modules %d..%d\n", d, r.first, r.last);
    }
  }
  std::printf("movable sub-modules: %s\n",
              absl::StrJoin(placed.overlap.movable, ",").c_str());
  std::printf("wrote %s and %s\n", plan_path.c_str(), overlap_path.c_str());
  return absl::OkStatus();
}

absl::Status Finish(const ExperimentResult& result, const absl::Status& run,
                    const std::string& out) {
  // Completed variants are written even when a later one failed.
  if (!result.variants.empty()) {
    RETURN_IF_ERROR(WriteExperimentOutputs(result, out));
    const nlohmann::json summary = SummaryJson(result);
    ASSIGN_OR_RETURN(const std::string table, RenderSummary(summary));
    std::fputs(table.c_str(), stdout);
    std::printf("wrote %s/{run_raw.csv,summary.json,compare_long.csv}\n",
                out.c_str());
  }
  return run;
}

absl::Status RunSimulate(const Flags& f, const Given& g) {
  ASSIGN_OR_RETURN(ExperimentSpec spec, BaseSpec(f, g));
  ASSIGN_OR_RETURN(const Variant v, VariantFromFlags(f));
  spec.variants = {v};
  ExperimentResult result;
  const absl::Status run = RunExperiment(spec, &result);
  return Finish(result, run, f.out);
}

absl::Status RunCompare(const Flags& f, const Given& g) {
  ASSIGN_OR_RETURN(ExperimentSpec spec, BaseSpec(f, g));
  if (f.scenario.empty()) {
    ASSIGN_OR_RETURN(Variant v, VariantFromFlags(f));
    Variant baseline = v;
    baseline.plan = PlanKind::kBaseline;
    baseline.name = "baseline";
    v.plan = PlanKind::kOptimized;
    v.name = "optimized";
    spec.variants = {baseline, v};
  }
  ExperimentResult result;
  const absl::Status run = RunExperiment(spec, &result);
  return Finish(result, run, f.out);
}

absl::Status RunReport(const Flags& f, bool out_given) {
  if (f.in.empty()) return absl::InvalidArgumentError("--in is required");
  ASSIGN_OR_RETURN(const nlohmann::json summary,
                   LoadSummary(f.in + "/summary.json"));
  ASSIGN_OR_RETURN(const std::string table, RenderSummary(summary));
  ASSIGN_OR_RETURN(const std::string csv, CompareLongCsv(summary));
  std::fputs(table.c_str(), stdout);
  const std::string dir = out_given ? f.out : f.in;
  RETURN_IF_ERROR(EnsureDir(dir));
  const std::string path = dir + "/compare_long.csv";
  RETURN_IF_ERROR(WriteStringToFile(path, csv));
  std::printf("wrote %s\n", path.c_str());
  return absl::OkStatus();
}

int Main(int argc, char** argv) {
  CLI::App app{"Pipelined inference planner and ring simulator"};
  app.require_subcommand(1);
  Flags f;
  Given g_plan;
  Given g_simulate;
  Given g_compare;

  const std::string scenarios = absl::StrJoin(ScenarioNames(), ", ");
  auto add_graph = [&](CLI::App* cmd, Given& g) {
    g.graph = cmd->add_option("--graph", f.graph, "Graph file (graph v1 format)");
    g.gen_blocks = cmd->add_option("--gen-blocks", f.gen_blocks,
                                   "Generate a decoder graph with N blocks");
    cmd->add_option("--hidden", f.hidden, "Hidden size of the generated graph");
    g.fleet = cmd->add_option("--fleet", f.fleet, "Fleet file (fleet v1 format)");
    g.beta = cmd->add_option("--beta", f.beta, "Memory budget fraction");
    g.seed = cmd->add_option("--seed", f.seed, "Graph generator seed");
    cmd->add_option("--scenario", f.scenario,
                    absl::StrCat("Bundled experiment: ", scenarios));
    cmd->add_option("--out", f.out, "Output directory");
  };
  auto add_run = [&](CLI::App* cmd, Given& g) {
    cmd->add_option("--threads", f.threads, "Compute threads per device")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mode", f.mode, "Residual delivery")
        ->check(CLI::IsMember({"piggyback", "residual"}));
    cmd->add_option("--balance", f.balance, "Runtime load balancer")
        ->check(CLI::IsMember({"on", "off"}));
    g.samples = cmd->add_option("--samples", f.samples, "Samples");
    g.context = cmd->add_option("--context", f.context, "Context length");
    g.tokens = cmd->add_option("--tokens", f.tokens, "Tokens per sample");
    g.time_scale = cmd->add_option("--time-scale", f.time_scale,
                                   "Wall seconds per simulated second")
                       ->check(CLI::PositiveNumber);
  };

  CLI::App* profile = app.add_subcommand(
      "profile", "Measure device speeds and link bandwidths of a fleet");
  profile->add_option("--fleet", f.fleet, "Fleet file")->required();
  profile->add_option("--hidden", f.hidden, "Hidden size of the probe model");
  profile->add_option("--time-scale", f.time_scale, "Time scale")
      ->check(CLI::PositiveNumber);
  profile->add_option("--out", f.out, "Output directory");

  CLI::App* plan = app.add_subcommand("plan", "Partition, place and write plan files");
  add_graph(plan, g_plan);
  plan->add_option("--plan", f.plan, "baseline or optimized")
      ->check(CLI::IsMember({"baseline", "optimized"}));

  CLI::App* simulate = app.add_subcommand("simulate", "Run one pipeline variant");
  add_graph(simulate, g_simulate);
  add_run(simulate, g_simulate);
  simulate->add_option("--plan", f.plan, "baseline or optimized")
      ->check(CLI::IsMember({"baseline", "optimized"}));

  CLI::App* compare = app.add_subcommand(
      "compare", "Run an experiment matrix (a scenario, or baseline vs optimized)");
  add_graph(compare, g_compare);
  add_run(compare, g_compare);

  CLI::App* report = app.add_subcommand(
      "report", "Render a summary.json and write compare_long.csv");
  report->add_option("--in", f.in, "Directory holding summary.json")->required();
  CLI::Option* report_out = report->add_option("--out", f.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  absl::Status status;
  if (*profile) {
    status = RunProfile(f);
  } else if (*plan) {
    status = RunPlan(f, g_plan);
  } else if (*simulate) {
    status = RunSimulate(f, g_simulate);
  } else if (*compare) {
    status = RunCompare(f, g_compare);
  } else if (*report) {
    status = RunReport(f, report_out->count() > 0);
  }
  if (!status.ok()) {
    std::fprintf(stderr, "error: %s: %s\n",
                 absl::StatusCodeToString(status.code()).c_str(),
                 std::string(status.message()).c_str());
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace pipelink

int main(int argc, char** argv) { return pipelink::Main(argc, argv); }
