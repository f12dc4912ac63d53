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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "pipelink/assign/plan_io.h"
#include "pipelink/common/text_format.h"
#include "pipelink/graph/partition.h"
#include "pipelink/harness/chain_graph.h"
#include "pipelink/harness/experiment.h"
#include "pipelink/harness/report.h"
#include "pipelink/harness/scenario.h"

namespace pipelink {
namespace {

using ::testing::HasSubstr;

FleetProfile Identical(int m, double speed, int64_t mem, double bw,
                       double lat) {
  std::vector<DeviceProfile> devices;
  for (int i = 0; i < m; ++i) devices.push_back({i, speed, mem, mem});
  return UniformFleet(std::move(devices), bw, lat);
}

// Three 0.05 s stages on fast links, small enough for unit tests.
ExperimentSpec TinySpec() {
  ChainSpec chain;
  chain.flops = {50'000'000, 50'000'000, 50'000'000};
  chain.mem = {1'000'000, 1'000'000, 1'000'000};
  chain.activation_bytes = 1000;
  chain.residuals = {{0, 2, 500}};
  chain.return_bytes = 2000;
  ExperimentSpec spec;
  spec.name = "tiny";
  spec.graph = *BuildChainGraph(chain);
  spec.fleet = Identical(3, 1e9, 1'250'000, 1e7, 0.002);
  spec.beta = 0.8;
  spec.workload.samples = 2;
  spec.workload.tokens = 2;
  spec.time_scale = 0.05;
  spec.variants = {{"baseline", PlanKind::kBaseline},
                   {"piggyback", PlanKind::kOptimized, 2,
                    ResidualMode::kPiggyback, false}};
  return spec;
}

std::vector<std::vector<std::string>> ReadCsv(const std::string& path) {
  auto text = ReadFileToString(path);
  EXPECT_TRUE(text.ok()) << text.status();
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(*text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string TempDir(const std::string& name) {
  const std::string dir =
      (std::filesystem::temp_directory_path() /
       ("pipelink_harness_" + name + "_" + std::to_string(::getpid())))
          .string();
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(ChainGraphTest, PartitionYieldsTheDeclaredModules) {
  ChainSpec chain;
  chain.flops = {10, 20, 30, 40};
  chain.mem = {1, 2, 3, 4};
  chain.activation_bytes = 7;
  chain.residuals = {{0, 2, 5}, {0, 3, 6}, {1, 3, 9}};
  chain.return_bytes = 11;
  auto graph = BuildChainGraph(chain);
  ASSERT_TRUE(graph.ok()) << graph.status();
  auto partition = Partition(*graph, FindCandidates(*graph));
  ASSERT_TRUE(partition.ok()) << partition.status();
  ASSERT_EQ(partition->size(), 4u);
  const auto profiles = ProfileSubmodules(*graph, *partition);
  // Expected traffic out of each module, written out by hand.
  const std::vector<std::map<int, int64_t>> out_to = {
      {{1, 7}, {2, 5}, {3, 6}}, {{2, 7}, {3, 9}}, {{3, 7}}, {}};
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(profiles[j].flops, chain.flops[j]) << j;
    EXPECT_EQ(profiles[j].mem_bytes, chain.mem[j]) << j;
    EXPECT_EQ(profiles[j].out_to, out_to[j]) << j;
  }
  EXPECT_EQ(graph->node(graph->sink()).out_bytes, 11);
}

TEST(ChainGraphTest, RejectsAdjacentOrBackwardResiduals) {
  ChainSpec chain;
  chain.flops = {1, 1, 1};
  chain.mem = {1, 1, 1};
  chain.residuals = {{0, 1, 5}};
  EXPECT_FALSE(BuildChainGraph(chain).ok());
  chain.residuals = {{2, 0, 5}};
  EXPECT_FALSE(BuildChainGraph(chain).ok());
  chain.residuals.clear();
  chain.mem.pop_back();
  EXPECT_FALSE(BuildChainGraph(chain).ok());
}

TEST(PlanTest, SymmetricSixModulesOnThreeDevicesSplitEvenly) {
  ChainSpec chain;
  chain.flops.assign(6, 1'000'000);
  chain.mem.assign(6, 100);
  chain.activation_bytes = 1000;
  chain.return_bytes = 1000;
  auto graph = BuildChainGraph(chain);
  ASSERT_TRUE(graph.ok());
  // Budget 0.8 * 250 = 200 bytes: exactly two sub-modules per device.
  const FleetProfile fleet = Identical(3, 1e8, 250, 1e6, 0.01);
  auto setup = SetupModel(*graph, fleet, 0.8);
  ASSERT_TRUE(setup.ok()) << setup.status();
  auto placed = Place(setup->model, PlanKind::kOptimized);
  ASSERT_TRUE(placed.ok()) << placed.status();
  for (DeviceId d = 0; d < 3; ++d) {
    EXPECT_EQ(placed->plan.range(d).size(), 2) << d;
  }
  const std::string text = SerializePlan(placed->plan);
  EXPECT_THAT(text, HasSubstr("plan v1 3 6"));
  int assign_lines = 0;
  for (const TextLine& line : TokenizeLines(text)) {
    if (line.tokens[0] != "assign") continue;
    ++assign_lines;
    ASSERT_EQ(line.tokens.size(), 4u);
    EXPECT_EQ(std::stoi(line.tokens[3]) - std::stoi(line.tokens[2]), 1);
  }
  EXPECT_EQ(assign_lines, 3);
}

TEST(PlanTest, InfeasibleBaselineIsReported) {
  ChainSpec chain;
  chain.flops = {1, 1, 1, 1};
  chain.mem = {300, 10, 10, 10};
  chain.activation_bytes = 1;
  auto graph = BuildChainGraph(chain);
  ASSERT_TRUE(graph.ok());
  // Baseline puts modules 0-1 (310 bytes) on device 0, whose budget is 80.
  FleetProfile fleet = Identical(3, 1e8, 100, 1e6, 0.01);
  fleet.devices[1].mem_total_bytes = fleet.devices[1].mem_avail_bytes = 1000;
  auto setup = SetupModel(*graph, fleet, 0.8);
  ASSERT_TRUE(setup.ok());
  auto baseline = Place(setup->model, PlanKind::kBaseline);
  ASSERT_FALSE(baseline.ok());
  EXPECT_THAT(baseline.status().message(), HasSubstr("baseline"));
  EXPECT_TRUE(Place(setup->model, PlanKind::kOptimized).ok());
}

TEST(ScenarioTest, UnknownNameListsAvailableScenarios) {
  auto spec = GetScenario("does-not-exist");
  ASSERT_FALSE(spec.ok());
  EXPECT_EQ(spec.status().code(), absl::StatusCode::kNotFound);
  for (const std::string& name : ScenarioNames()) {
    EXPECT_THAT(spec.status().message(), HasSubstr(name));
  }
}

TEST(ScenarioTest, LibraryShipsTheFourScenarios) {
  EXPECT_THAT(ScenarioNames(),
              ::testing::ElementsAre("hetero-3dev", "lb-midslow",
                                     "resvspiggy-3dev", "threads-sweep"));
  for (const std::string& name : ScenarioNames()) {
    auto spec = GetScenario(name);
    ASSERT_TRUE(spec.ok()) << name;
    EXPECT_EQ(spec->name, name);
    EXPECT_TRUE(ValidateExperiment(*spec).ok()) << name;
    EXPECT_EQ(spec->fleet.size(), 3u) << name;
    auto setup = SetupModel(*spec->graph, spec->fleet, spec->beta);
    ASSERT_TRUE(setup.ok()) << name << ": " << setup.status();
    for (const Variant& v : spec->variants) {
      EXPECT_TRUE(Place(setup->model, v.plan).ok()) << name << " " << v.name;
    }
  }
}

TEST(ScenarioTest, HeteroFleetIsThreeThreeOne) {
  const ExperimentSpec spec = HeteroScenario();
  EXPECT_DOUBLE_EQ(spec.fleet.devices[0].flops_per_sec,
                   3 * spec.fleet.devices[2].flops_per_sec);
  EXPECT_DOUBLE_EQ(spec.fleet.devices[1].flops_per_sec,
                   3 * spec.fleet.devices[2].flops_per_sec);
}

TEST(ScenarioTest, MidSlowOverlapMakesTheMiddleModulesMovable) {
  const ExperimentSpec spec = MidSlowScenario();
  auto setup = SetupModel(*spec.graph, spec.fleet, spec.beta);
  ASSERT_TRUE(setup.ok());
  auto placed = Place(setup->model, PlanKind::kBaseline);
  ASSERT_TRUE(placed.ok());
  EXPECT_EQ(placed->plan.split, (std::vector<int>{0, 4, 8, 12}));
  EXPECT_EQ(placed->overlap.movable, (std::vector<int>{4, 5, 6, 7}));
  // Reloading 8 sub-modules takes 2.449 s.
  EXPECT_NEAR(8 * 50e6 / spec.overheads.reload_bytes_per_sec, 2.449, 1e-9);
}

TEST(ExperimentTest, ValidationRejectsDuplicateVariantNames) {
  ExperimentSpec spec = TinySpec();
  spec.variants.push_back(spec.variants.front());
  EXPECT_FALSE(ValidateExperiment(spec).ok());
  spec = TinySpec();
  spec.variants.front().threads = 0;
  EXPECT_FALSE(ValidateExperiment(spec).ok());
  spec = TinySpec();
  spec.graph.reset();
  EXPECT_FALSE(ValidateExperiment(spec).ok());
}

TEST(ExperimentTest, FailedVariantKeepsEarlierResults) {
  ExperimentSpec spec = TinySpec();
  spec.fleet.devices[0].mem_total_bytes = spec.fleet.devices[0].mem_avail_bytes =
      100;
  spec.fleet.devices[1].mem_total_bytes = spec.fleet.devices[1].mem_avail_bytes =
      5'000'000;
  spec.variants = {{"optimized", PlanKind::kOptimized},
                   {"baseline", PlanKind::kBaseline}};
  ExperimentResult result;
  const absl::Status st = RunExperiment(spec, &result);
  ASSERT_FALSE(st.ok());
  EXPECT_THAT(st.message(), HasSubstr("variant baseline"));
  ASSERT_EQ(result.variants.size(), 1u);
  EXPECT_EQ(result.variants[0].variant.name, "optimized");
  EXPECT_TRUE(result.variants[0].report.digests_match());
}

TEST(ExperimentTest, RepeatedRunsGiveIdenticalDigestsAndOrderings) {
  const ExperimentSpec spec = TinySpec();
  ExperimentResult a;
  ExperimentResult b;
  ASSERT_TRUE(RunExperiment(spec, &a).ok());
  ASSERT_TRUE(RunExperiment(spec, &b).ok());
  ASSERT_EQ(a.variants.size(), b.variants.size());
  for (size_t v = 0; v < a.variants.size(); ++v) {
    const RunReport& ra = a.variants[v].report;
    const RunReport& rb = b.variants[v].report;
    EXPECT_TRUE(ra.digests_match());
    EXPECT_EQ(ra.sample_digests, rb.sample_digests);
    // Per-device execution order of passes.
    auto order = [](const RunReport& r) {
      std::map<DeviceId, std::vector<std::pair<double, uint32_t>>> per;
      for (const ExecRecord& e : r.execs) per[e.device].push_back({e.start, e.seq});
      std::map<DeviceId, std::vector<uint32_t>> out;
      for (auto& [d, list] : per) {
        std::sort(list.begin(), list.end());
        for (const auto& [start, seq] : list) out[d].push_back(seq);
      }
      return out;
    };
    if (a.variants[v].variant.threads == 1) {
      EXPECT_EQ(order(ra), order(rb));
    }
    EXPECT_EQ(ra.hops.size(), rb.hops.size());
  }
}

TEST(PercentileTest, NearestRank) {
  std::vector<double> v = {10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  EXPECT_EQ(Percentile(v, 50), 5);
  EXPECT_EQ(Percentile(v, 90), 9);
  EXPECT_EQ(Percentile(v, 100), 10);
  EXPECT_EQ(Percentile(v, 1), 1);
  EXPECT_EQ(Percentile({}, 50), 0);
}

// Recomputes every summary metric from run_raw.csv with its own parsing and
// arithmetic, and checks compare_long.csv's speedup column against the
// recomputed throughput ratio.
TEST(ReportTest, SummaryAndSpeedupRecomputeFromRawRows) {
  const ExperimentSpec spec = TinySpec();
  ExperimentResult result;
  ASSERT_TRUE(RunExperiment(spec, &result).ok());
  const std::string dir = TempDir("recompute");
  ASSERT_TRUE(WriteExperimentOutputs(result, dir).ok());

  const auto raw = ReadCsv(dir + "/run_raw.csv");
  ASSERT_GT(raw.size(), 1u);
  const std::vector<std::string>& header = raw[0];
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    EXPECT_NE(it, header.end()) << name;
    return static_cast<size_t>(it - header.begin());
  };
  const size_t c_variant = col("variant");
  const size_t c_issued = col("issued_sec");
  const size_t c_completed = col("completed_sec");
  const size_t c_latency = col("latency_sec");
  const size_t c_busy0 = col("device_busy_0");

  struct Acc {
    int rows = 0;
    double first = 1e300;
    double last = -1e300;
    double latency = 0;
    std::vector<double> busy = std::vector<double>(3, 0);
    std::vector<double> latencies;
  };
  std::map<std::string, Acc> acc;
  for (size_t r = 1; r < raw.size(); ++r) {
    ASSERT_EQ(raw[r].size(), header.size()) << "row " << r;
    Acc& a = acc[raw[r][c_variant]];
    ++a.rows;
    const double issued = std::stod(raw[r][c_issued]);
    const double completed = std::stod(raw[r][c_completed]);
    a.first = std::min(a.first, issued);
    a.last = std::max(a.last, completed);
    a.latency += std::stod(raw[r][c_latency]);
    a.latencies.push_back(std::stod(raw[r][c_latency]));
    for (int i = 0; i < 3; ++i) a.busy[i] += std::stod(raw[r][c_busy0 + i]);
  }

  auto summary = LoadSummary(dir + "/summary.json");
  ASSERT_TRUE(summary.ok());
  const auto& variants = (*summary)["variants"];
  ASSERT_EQ(variants.size(), spec.variants.size());
  std::map<std::string, double> tps;
  for (const auto& v : variants) {
    const std::string name = v["name"].get<std::string>();
    const Acc& a = acc.at(name);
    EXPECT_EQ(a.rows, spec.workload.samples * spec.workload.tokens);
    EXPECT_EQ(v["tokens"].get<int>(), a.rows);
    const double makespan = a.last - a.first;
    tps[name] = a.rows / makespan;
    EXPECT_NEAR(v["makespan_sec"].get<double>(), makespan, 1e-12);
    EXPECT_NEAR(v["tokens_per_sec"].get<double>(), tps[name], 1e-9 * tps[name]);
    EXPECT_NEAR(v["latency_sec"]["mean"].get<double>(), a.latency / a.rows, 1e-12);
    std::vector<double> sorted = a.latencies;
    std::sort(sorted.begin(), sorted.end());
    const size_t rank = static_cast<size_t>(std::ceil(0.9 * sorted.size()));
    EXPECT_DOUBLE_EQ(v["latency_sec"]["p90"].get<double>(), sorted[rank - 1]);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(v["device_busy_fraction"][i].get<double>(),
                  a.busy[i] / makespan, 1e-9);
    }
  }

  const auto compare = ReadCsv(dir + "/compare_long.csv");
  ASSERT_EQ(compare.size(), 1 + spec.variants.size());
  const size_t c_name = std::find(compare[0].begin(), compare[0].end(), "variant") -
                        compare[0].begin();
  const size_t c_speedup =
      std::find(compare[0].begin(), compare[0].end(), "speedup") -
      compare[0].begin();
  ASSERT_LT(c_speedup, compare[0].size());
  const double reference = tps.at(spec.variants.front().name);
  for (size_t r = 1; r < compare.size(); ++r) {
    const double expected = tps.at(compare[r][c_name]) / reference;
    EXPECT_NEAR(std::stod(compare[r][c_speedup]), expected, 1e-9 * expected);
  }
  std::filesystem::remove_all(dir);
}

TEST(ReportTest, RawCsvHasOneRowPerTokenInSeqOrder) {
  const ExperimentSpec spec = TinySpec();
  ExperimentResult result;
  ASSERT_TRUE(RunExperiment(spec, &result).ok());
  const std::string csv = RunRawCsv(result);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("variant,seq,sample,token,epoch,issued_sec", 0), 0u);
  const size_t columns = std::count(line.begin(), line.end(), ',') + 1;
  std::map<std::string, std::vector<int>> seqs;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ',') + 1,
              static_cast<long>(columns));
    const std::string variant = line.substr(0, line.find(','));
    const size_t a = line.find(',') + 1;
    seqs[variant].push_back(std::stoi(line.substr(a, line.find(',', a) - a)));
  }
  ASSERT_EQ(seqs.size(), 2u);
  for (const auto& [variant, list] : seqs) {
    ASSERT_EQ(list.size(), 4u) << variant;
    for (size_t i = 0; i < list.size(); ++i) EXPECT_EQ(list[i], static_cast<int>(i));
  }
}

TEST(ReportTest, CompareCsvRejectsMalformedSummary) {
  EXPECT_FALSE(CompareLongCsv(nlohmann::json::object()).ok());
  EXPECT_FALSE(RenderSummary(nlohmann::json{{"scenario", "x"}}).ok());
}

}  // namespace
}  // namespace pipelink
