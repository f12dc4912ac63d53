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

// Acceptance suite: one PASS/FAIL line per criterion 1-7.
//
//   acceptance [--only N ...]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "pipelink/assign/assignment.h"
#include "pipelink/assign/cost_model.h"
#include "pipelink/balance/overlap.h"
#include "pipelink/balance/rebalance.h"
#include "pipelink/balance/transition.h"
#include "pipelink/graph/decoder_graph.h"
#include "pipelink/graph/graph.h"
#include "pipelink/graph/partition.h"
#include "pipelink/harness/chain_graph.h"
#include "pipelink/harness/experiment.h"
#include "pipelink/harness/scenario.h"
#include "pipelink/runtime/pipeline.h"

namespace pipelink {
namespace {

// Criterion 1.
constexpr int kExactnessInstances = 500;
constexpr int kExactnessMaxDevices = 3;
constexpr int kExactnessMaxModules = 8;
constexpr double kExactnessTimeLimitSec = 30;
// Criterion 2.
constexpr double kHeteroMinSpeedup = 1.2;
constexpr int kRandomFeasibleInstances = 12;
constexpr double kRandomMinSpeedup = 1.0;
constexpr double kRandomJitterAllowance = 0.02;
constexpr double kHeteroTimeLimitSec = 120;
// Criterion 3.
constexpr double kThreadsMinSpeedup2 = 1.5;
constexpr int kThreadsMinSamples = 6;
constexpr double kThreadsTimeLimitSec = 180;
// Criterion 4.
constexpr double kBalanceMinImprovement = 0.20;
constexpr double kBalanceTimeLimitSec = 120;
// Criterion 5.
constexpr double kResidualMinOrderedFraction = 0.95;
constexpr double kResidualTimeLimitSec = 60;
// Criterion 7.
constexpr int kInvariantCases = 200;

using Clock = std::chrono::steady_clock;
using Rng = std::mt19937_64;

double Since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int UniformInt(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Digest checks gathered from criteria 2-5 for criterion 6.
struct DigestLedger {
  int variants = 0;
  std::vector<std::string> mismatches;

  void Add(const std::string& label, const RunReport& report) {
    ++variants;
    if (!report.digests_match()) mismatches.push_back(label);
  }
};

FleetProfile RandomFleet(Rng& rng, const std::vector<double>& speeds,
                         const std::vector<int64_t>& mem, double bw_lo,
                         double bw_hi, double lat_lo, double lat_hi) {
  const size_t m = speeds.size();
  std::vector<DeviceProfile> devices;
  for (size_t i = 0; i < m; ++i) {
    devices.push_back({static_cast<DeviceId>(i), speeds[i], mem[i], mem[i]});
  }
  FleetProfile fleet = UniformFleet(std::move(devices), 1, 1);
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      fleet.bandwidth(a, b) = Uniform(rng, bw_lo, bw_hi);
      fleet.latency(a, b) = Uniform(rng, lat_lo, lat_hi);
    }
  }
  return fleet;
}

std::vector<SubModuleProfile> RandomProfiles(Rng& rng, int n) {
  std::vector<SubModuleProfile> profiles(n);
  for (int j = 0; j < n; ++j) {
    profiles[j].index = j;
    profiles[j].flops = static_cast<int64_t>(Uniform(rng, 1e6, 1e8));
    profiles[j].mem_bytes = UniformInt(rng, 1, 100) * 1'000'000LL;
    if (j + 1 < n) profiles[j].out_to[j + 1] = UniformInt(rng, 1'000, 1'000'000);
    for (int k = j + 2; k < n; ++k) {
      if (Uniform(rng, 0, 1) < 0.25) profiles[j].out_to[k] = UniformInt(rng, 1'000, 100'000);
    }
  }
  return profiles;
}

// ---------------------------------------------------------------------------
// Criterion 1: exact optimizer against brute force.

Outcome OptimizerExactness() {
  const auto start = Clock::now();
  Rng rng(20240101);
  int feasible = 0;
  int infeasible_agree = 0;
  int attempts = 0;
  std::vector<std::string> failures;
  while (feasible < kExactnessInstances && attempts < 20 * kExactnessInstances) {
    ++attempts;
    const int m = UniformInt(rng, 1, kExactnessMaxDevices);
    const int n = UniformInt(rng, 1, kExactnessMaxModules);
    const auto profiles = RandomProfiles(rng, n);
    int64_t total_mem = 0;
    for (const auto& p : profiles) total_mem += p.mem_bytes;
    std::vector<double> speeds;
    std::vector<int64_t> mem;
    for (int i = 0; i < m; ++i) {
      speeds.push_back(Uniform(rng, 1e8, 1e9));
      mem.push_back(static_cast<int64_t>(Uniform(rng, 0.3, 1.3) * total_mem /
                                         (0.8 * m) * 1.5));
    }
    const FleetProfile fleet = RandomFleet(rng, speeds, mem, 1e6, 1e8, 0.001, 0.05);
    auto model = BuildCostModel(profiles, UniformInt(rng, 0, 100'000), fleet, 0.8);
    if (!model.ok()) {
      failures.push_back(std::string(model.status().message()));
      continue;
    }
    auto solved = SolveAssignment(*model);
    auto brute = BruteForceAssignment(*model);
    if (solved.ok() != brute.ok()) {
      failures.push_back(absl::StrCat("instance ", attempts, ": solver ",
                                      solved.ok() ? "ok" : "infeasible",
                                      ", brute force ",
                                      brute.ok() ? "ok" : "infeasible"));
      continue;
    }
    if (!solved.ok()) {
      ++infeasible_agree;
      continue;
    }
    ++feasible;
    if (solved->cost.objective != brute->cost.objective) {
      failures.push_back(absl::StrFormat("instance %d: solver %.17g vs brute %.17g",
                                         attempts, solved->cost.objective,
                                         brute->cost.objective));
    }
  }
  const double elapsed = Since(start);
  Outcome out;
  out.pass = failures.empty() && feasible >= kExactnessInstances &&
             elapsed < kExactnessTimeLimitSec;
  out.detail = absl::StrFormat(
      "optimizer exactness: %d feasible instances (m<=%d, n<=%d) with equal "
      "objectives, %d infeasible in both, %d disagreements; %.2f s (limit %.0f s)",
      feasible - static_cast<int>(failures.size()), kExactnessMaxDevices,
      kExactnessMaxModules, infeasible_agree, static_cast<int>(failures.size()),
      elapsed, kExactnessTimeLimitSec);
  if (!failures.empty()) absl::StrAppend(&out.detail, "; first: ", failures[0]);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: optimized placement is never slower than the equal split.

const VariantResult* Find(const ExperimentResult& r, const std::string& name) {
  for (const VariantResult& v : r.variants) {
    if (v.variant.name == name) return &v;
  }
  return nullptr;
}

Outcome OptimizedVsBaseline(DigestLedger& digests) {
  const auto start = Clock::now();
  Outcome out;
  ExperimentResult hetero;
  if (absl::Status st = RunExperiment(HeteroScenario(), &hetero); !st.ok()) {
    out.detail = absl::StrCat("hetero-3dev failed: ", st.message());
    return out;
  }
  for (const VariantResult& v : hetero.variants) {
    digests.Add("hetero-3dev/" + v.variant.name, v.report);
  }
  const double speedup = Find(hetero, "optimized")->report.tokens_per_sec() /
                         Find(hetero, "baseline")->report.tokens_per_sec();

  // Random feasible instances: decoder graphs on random 3-device fleets.
  Rng rng(777);
  int instances = 0;
  int attempts = 0;
  double worst = 1e300;
  std::string worst_label;
  std::vector<std::string> errors;
  while (instances < kRandomFeasibleInstances && attempts < 200) {
    ++attempts;
    ExperimentSpec spec;
    spec.name = absl::StrCat("random-", attempts);
    const int blocks = UniformInt(rng, 3, 7);
    const int64_t hidden = 8 * UniformInt(rng, 4, 8);
    spec.seed = rng();
    spec.graph = GenerateDecoderGraph(blocks, hidden, spec.seed);
    const double block_flops = 24.0 * hidden * hidden;
    std::vector<double> speeds;
    std::vector<int64_t> mem;
    const int64_t total = spec.graph->total_mem_bytes();
    for (int i = 0; i < 3; ++i) {
      speeds.push_back(block_flops / Uniform(rng, 0.02, 0.1));
      mem.push_back(static_cast<int64_t>(Uniform(rng, 0.45, 1.2) * total / 0.8));
    }
    spec.fleet = RandomFleet(rng, speeds, mem, 5e6, 5e7, 0.002, 0.01);
    spec.beta = 0.8;
    spec.workload.samples = 2;
    spec.workload.tokens = 3;
    spec.time_scale = 0.05;
    spec.variants = {{"baseline", PlanKind::kBaseline},
                     {"optimized", PlanKind::kOptimized}};
    auto setup = SetupModel(*spec.graph, spec.fleet, spec.beta);
    if (!setup.ok() || !Place(setup->model, PlanKind::kBaseline).ok()) continue;
    ExperimentResult r;
    if (absl::Status st = RunExperiment(spec, &r); !st.ok()) {
      errors.push_back(absl::StrCat(spec.name, ": ", st.message()));
      continue;
    }
    ++instances;
    for (const VariantResult& v : r.variants) digests.Add(spec.name + "/" + v.variant.name, v.report);
    const double ratio = Find(r, "optimized")->report.tokens_per_sec() /
                         Find(r, "baseline")->report.tokens_per_sec();
    if (ratio < worst) {
      worst = ratio;
      worst_label = spec.name;
    }
  }
  const double elapsed = Since(start);
  out.pass = speedup >= kHeteroMinSpeedup && errors.empty() &&
             instances >= kRandomFeasibleInstances &&
             worst >= kRandomMinSpeedup - kRandomJitterAllowance &&
             elapsed < kHeteroTimeLimitSec;
  out.detail = absl::StrFormat(
      "optimized vs baseline: hetero-3dev speedup %.3fx (need >= %.2fx); "
      "%d random feasible instances, worst %.3fx on %s (need >= %.2fx with "
      "%.0f%% jitter allowance); %.1f s (limit %.0f s)",
      speedup, kHeteroMinSpeedup, instances, worst, worst_label,
      kRandomMinSpeedup, 100 * kRandomJitterAllowance, elapsed,
      kHeteroTimeLimitSec);
  if (!errors.empty()) absl::StrAppend(&out.detail, "; error: ", errors[0]);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: threads sweep.

Outcome ThreadsSweep(DigestLedger& digests) {
  const auto start = Clock::now();
  Outcome out;
  const ExperimentSpec spec = ThreadsScenario();
  ExperimentResult r;
  if (absl::Status st = RunExperiment(spec, &r); !st.ok()) {
    out.detail = absl::StrCat("threads-sweep failed: ", st.message());
    return out;
  }
  std::vector<double> tps(6, 0);
  for (const VariantResult& v : r.variants) {
    tps[v.variant.threads] = v.report.tokens_per_sec();
    digests.Add("threads-sweep/" + v.variant.name, v.report);
  }
  const double s2 = tps[2] / tps[1];
  const double s5_over_4 = tps[5] / tps[4];
  const double inc12 = tps[2] - tps[1];
  const double inc45 = tps[5] - tps[4];
  const double elapsed = Since(start);
  out.pass = spec.workload.samples >= kThreadsMinSamples &&
             s2 >= kThreadsMinSpeedup2 && tps[5] > tps[2] && s2 > s5_over_4 &&
             inc45 < inc12 && elapsed < kThreadsTimeLimitSec;
  out.detail = absl::StrFormat(
      "threads sweep: tok/s %.3f %.3f %.3f %.3f %.3f for threads 1-5; "
      "T2/T1 %.3f (need >= %.2f), T5 > T2 %s, T2/T1 > T5/T4 (%.3f) %s, "
      "increment 4->5 %.3f < 1->2 %.3f; %d samples; %.1f s (limit %.0f s)",
      tps[1], tps[2], tps[3], tps[4], tps[5], s2, kThreadsMinSpeedup2,
      tps[5] > tps[2] ? "yes" : "no", s5_over_4, s2 > s5_over_4 ? "yes" : "no",
      inc45, inc12, spec.workload.samples, elapsed, kThreadsTimeLimitSec);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: runtime load balancing.

Outcome LoadBalancing(DigestLedger& digests) {
  const auto start = Clock::now();
  Outcome out;
  const ExperimentSpec spec = MidSlowScenario();
  ExperimentResult r;
  if (absl::Status st = RunExperiment(spec, &r); !st.ok()) {
    out.detail = absl::StrCat("lb-midslow failed: ", st.message());
    return out;
  }
  for (const VariantResult& v : r.variants) digests.Add("lb-midslow/" + v.variant.name, v.report);
  const RunReport& off = Find(r, "balancer-off")->report;
  const RunReport& on = Find(r, "balancer-on")->report;
  std::optional<uint32_t> switch_seq;
  std::string log;
  for (const RebalanceEvent& e : on.rebalances) {
    if (e.switch_seq.has_value()) {
      switch_seq = e.switch_seq;
      log = e.log_line;
      break;
    }
  }
  if (!switch_seq.has_value()) {
    out.detail = "load balancing: the balancer never switched maps";
    return out;
  }
  // Seqs are issued in the same order in both runs.
  double on_sum = 0;
  double off_sum = 0;
  int count = 0;
  for (size_t i = 0; i < on.tokens.size() && i < off.tokens.size(); ++i) {
    if (on.tokens[i].seq < *switch_seq) continue;
    on_sum += on.tokens[i].latency();
    off_sum += off.tokens[i].latency();
    ++count;
  }
  double charged = 0;
  double expected_reload = 0;
  for (const TransitionRecord& t : on.transitions) {
    charged += t.charge.release_sec + t.charge.reload_sec;
    expected_reload += t.charge.load.size() * 50e6 / spec.overheads.reload_bytes_per_sec;
  }
  double actual_reload = 0;
  for (const TransitionRecord& t : on.transitions) actual_reload += t.charge.reload_sec;
  const double on_mean = on_sum / count;
  const double off_mean = off_sum / count;
  const double improvement = 1.0 - on_mean / off_mean;
  const uint32_t min_decision_seq =
      static_cast<uint32_t>(spec.balance_after_samples * spec.workload.tokens - 1);
  const bool after_sample_2 = on.rebalances.front().decided_after_seq >= min_decision_seq;
  const double elapsed = Since(start);
  out.pass = improvement >= kBalanceMinImprovement && after_sample_2 &&
             std::abs(actual_reload - expected_reload) < 1e-9 &&
             elapsed < kBalanceTimeLimitSec;
  out.detail = absl::StrFormat(
      "load balancing: post-switch (seq >= %d, %d tokens) mean latency %.4f s "
      "on vs %.4f s off, improvement %.1f%% (need >= %.0f%%); charged "
      "release+reload %.3f s; \"%s\"; first decision after seq %d (need >= "
      "%d); %.1f s (limit %.0f s)",
      *switch_seq, count, on_mean, off_mean, 100 * improvement,
      100 * kBalanceMinImprovement, charged, log,
      on.rebalances.front().decided_after_seq, min_decision_seq, elapsed,
      kBalanceTimeLimitSec);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: direct residual delivery vs piggybacking.

Outcome ResidualVsPiggyback(DigestLedger& digests) {
  const auto start = Clock::now();
  Outcome out;
  ExperimentResult r;
  if (absl::Status st = RunExperiment(ResidualScenario(), &r); !st.ok()) {
    out.detail = absl::StrCat("resvspiggy-3dev failed: ", st.message());
    return out;
  }
  for (const VariantResult& v : r.variants) digests.Add("resvspiggy-3dev/" + v.variant.name, v.report);
  const RunReport& seq = Find(r, "piggyback")->report;
  const RunReport& res = Find(r, "residual")->report;
  const size_t n = std::min(seq.tokens.size(), res.tokens.size());
  int e2e_ok = 0;
  int arrival_ok = 0;
  double seq_total = 0;
  double res_total = 0;
  double res_hop = 0;
  for (size_t i = 0; i < n; ++i) {
    const TokenRecord& a = seq.tokens[i];
    const TokenRecord& b = res.tokens[i];
    if (b.latency() <= a.latency()) ++e2e_ok;
    if (b.residual_arrival > 0 && b.residual_arrival < a.residual_arrival) ++arrival_ok;
    seq_total += a.latency();
    res_total += b.latency();
    res_hop += b.residual_hop;
  }
  const double e2e_frac = static_cast<double>(e2e_ok) / n;
  const double arrival_frac = static_cast<double>(arrival_ok) / n;
  const double elapsed = Since(start);
  out.pass = n > 0 && e2e_frac >= kResidualMinOrderedFraction &&
             arrival_frac >= kResidualMinOrderedFraction &&
             elapsed < kResidualTimeLimitSec;
  out.detail = absl::StrFormat(
      "residual vs piggyback: direct e2e <= piggyback on %d/%zu tokens, "
      "direct residual arrives first on %d/%zu (need >= %.0f%% each); mean "
      "e2e piggyback %.4f s, direct %.4f s, residual hop %.4f s (reference "
      "0.5839 / 0.5589 / 0.0111 s); %.1f s (limit %.0f s)",
      e2e_ok, n, arrival_ok, n, 100 * kResidualMinOrderedFraction,
      seq_total / n, res_total / n, res_hop / n, elapsed, kResidualTimeLimitSec);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 7: invariant suites.

absl::StatusOr<ComputationGraph> RandomDag(Rng& rng, int nodes) {
  std::vector<NodeProfile> profiles;
  for (int i = 0; i < nodes; ++i) {
    profiles.push_back({i, "op", UniformInt(rng, 0, 1000), UniformInt(rng, 0, 1000),
                        UniformInt(rng, 1, 1000)});
  }
  std::set<std::pair<int, int>> edges;
  for (int i = 1; i < nodes; ++i) edges.insert({UniformInt(rng, 0, i - 1), i});
  const double p = Uniform(rng, 0.0, 0.3);
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (Uniform(rng, 0, 1) < p) edges.insert({i, j});
    }
  }
  std::vector<int> out_degree(nodes, 0);
  for (const auto& [a, b] : edges) ++out_degree[a];
  for (int i = 0; i + 1 < nodes; ++i) {
    if (out_degree[i] == 0) edges.insert({i, UniformInt(rng, i + 1, nodes - 1)});
  }
  std::vector<Edge> list;
  for (const auto& [a, b] : edges) list.push_back({a, b});
  return ComputationGraph::Create(std::move(profiles), std::move(list));
}

// Cuts before each chosen candidate; every edge is intra-subgraph or listed
// exactly once in the sequential (adjacent) or residual (non-adjacent) map.
std::string CheckEdgePartition(Rng& rng) {
  auto graph = RandomDag(rng, UniformInt(rng, 2, 30));
  if (!graph.ok()) return absl::StrCat("generator: ", graph.status().message());
  std::vector<NodeId> chosen;
  for (NodeId c : FindCandidates(*graph)) {
    if (Uniform(rng, 0, 1) < 0.6) chosen.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end(), [&](NodeId a, NodeId b) {
    return graph->topo_index(a) < graph->topo_index(b);
  });
  auto plan = Partition(*graph, chosen);
  if (!plan.ok()) return absl::StrCat("partition: ", plan.status().message());

  std::vector<int> cuts;
  for (NodeId c : chosen) cuts.push_back(graph->topo_index(c));
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> expected(graph->num_nodes());
  for (size_t v = 0; v < graph->num_nodes(); ++v) {
    const int t = graph->topo_index(static_cast<NodeId>(v));
    expected[v] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), t) -
                                   cuts.begin());
  }
  if (plan->subgraph_of != expected) return "subgraph assignment differs from cut oracle";
  if (plan->size() != cuts.size() + 1) return "wrong subgraph count";
  size_t covered = 0;
  for (size_t s = 0; s < plan->size(); ++s) {
    for (NodeId v : plan->subgraphs[s]) {
      if (expected[v] != static_cast<int>(s)) return "node listed in the wrong subgraph";
      ++covered;
    }
  }
  if (covered != graph->num_nodes()) return "subgraphs do not cover every node once";

  std::multiset<std::pair<NodeId, NodeId>> sdm;
  std::multiset<std::pair<NodeId, NodeId>> rdm;
  for (const SequentialDep& d : plan->sdm) sdm.insert({d.producer.node, d.consumer.node});
  for (const ResidualDep& d : plan->rdm) rdm.insert({d.producer.node, d.consumer.node});
  size_t intra = 0;
  for (const Edge& e : graph->edges()) {
    const int gap = expected[e.dst] - expected[e.src];
    const auto key = std::make_pair(e.src, e.dst);
    if (gap < 0) return "edge runs backwards across subgraphs";
    if (gap == 0) {
      ++intra;
      if (sdm.count(key) || rdm.count(key)) return "intra edge listed in a map";
    } else if (gap == 1) {
      if (sdm.count(key) != 1 || rdm.count(key) != 0) return "adjacent edge not in SDM once";
    } else if (rdm.count(key) != 1 || sdm.count(key) != 0) {
      return "non-adjacent edge not in RDM once";
    }
  }
  if (intra + sdm.size() + rdm.size() != graph->num_edges()) return "edge count mismatch";
  return "";
}

std::string CheckTrafficConservation(Rng& rng) {
  const int m = UniformInt(rng, 1, 5);
  const int n = UniformInt(rng, 1, 10);
  Assignment x(m, n, 0);
  for (int j = 0; j < n; ++j) x(UniformInt(rng, 0, m - 1), j) = 1;
  Matrix<int64_t> o(n, n, 0);
  int64_t total = 0;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      if (Uniform(rng, 0, 1) < 0.5) {
        o(j, k) = UniformInt(rng, 0, 1'000'000);
        total += o(j, k);
      }
    }
  }
  const Matrix<int64_t> d = DeviceTraffic(x, o);
  int64_t sum = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      int64_t expected = 0;
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          if (x(a, j) && x(b, k)) expected += o(j, k);
        }
      }
      if (d(a, b) != expected) return absl::StrCat("O_d2d(", a, ",", b, ") differs");
      sum += d(a, b);
    }
  }
  if (sum != total) return "device traffic does not sum to module traffic";
  return "";
}

// Returns "" on success, "skip" when the instance produced no rebalance.
std::string CheckMemorySafety(Rng& rng) {
  const int m = UniformInt(rng, 2, 4);
  const int n = UniformInt(rng, m, 10);
  const auto profiles = RandomProfiles(rng, n);
  int64_t total_mem = 0;
  for (const auto& p : profiles) total_mem += p.mem_bytes;
  std::vector<double> speeds;
  std::vector<int64_t> mem;
  for (int i = 0; i < m; ++i) {
    speeds.push_back(Uniform(rng, 1e8, 1e9));
    mem.push_back(static_cast<int64_t>(Uniform(rng, 1.0, 2.2) * total_mem / m / 0.8));
  }
  const FleetProfile fleet = RandomFleet(rng, speeds, mem, 1e6, 1e8, 0.001, 0.02);
  auto model = BuildCostModel(profiles, 1000, fleet, 0.8);
  if (!model.ok()) return "skip";
  auto plan = Uniform(rng, 0, 1) < 0.5 ? BaselineAssignment(*model) : SolveAssignment(*model);
  if (!plan.ok()) return "skip";
  const OverlapPlan overlap = SolveOverlap(*plan, *model);
  if (absl::Status st = ValidateOverlap(overlap, *model); !st.ok()) {
    return absl::StrCat("overlap: ", st.message());
  }
  const Assignment hosted = overlap.Hosted();
  for (int d = 0; d < m; ++d) {
    int64_t bytes = 0;
    for (int j = 0; j < n; ++j) bytes += hosted(d, j) ? model->module_mem[j] : 0;
    if (bytes > model->MemoryBudget(d)) return "hosted set exceeds the memory budget";
  }

  std::vector<DeviceId> active = overlap.active;
  const std::vector<DeviceId> ring = overlap.RingDevices();
  bool rebalanced = false;
  for (int step = 0; step < 3; ++step) {
    FleetProfile snapshot = fleet;
    for (DeviceProfile& dev : snapshot.devices) dev.flops_per_sec *= Uniform(rng, 0.2, 3.0);
    std::optional<DeviceId> bottleneck;
    if (Uniform(rng, 0, 1) < 0.7) bottleneck = ring[UniformInt(rng, 0, ring.size() - 1)];
    auto decision = PlanRebalance(overlap, active, snapshot, *model, bottleneck);
    if (!decision.ok()) return absl::StrCat("rebalance: ", decision.status().message());
    if (decision->outcome != RebalanceDecision::Outcome::kRebalance) continue;
    rebalanced = true;
    for (const ModuleMove& mv : decision->moves) {
      if (!overlap.IsMovable(mv.module)) return "moved an unmovable sub-module";
      if (active[mv.module] != mv.from) return "move does not start at the active host";
      const auto hosts = overlap.Hosts(mv.module);
      if (std::find(hosts.begin(), hosts.end(), mv.to) == hosts.end()) {
        return "moved a sub-module to a device that does not host it";
      }
    }
    const TransitionSchedule schedule = ScheduleTransition(*decision, ring, 10 * step, step + 1);
    for (int d = 0; d < m; ++d) {
      std::set<int> resident;
      for (int j = 0; j < n; ++j) {
        if (active[j] == d) resident.insert(j);
      }
      const TransitionCharge charge = ChargeFor(schedule, d, model->module_mem, {});
      for (int j : charge.release) resident.erase(j);
      for (int j : charge.load) resident.insert(j);
      int64_t bytes = 0;
      std::set<int> expected;
      for (int j = 0; j < n; ++j) {
        if (decision->new_active[j] == d) expected.insert(j);
      }
      if (resident != expected) return "transition charges do not yield the new map";
      for (int j : resident) bytes += model->module_mem[j];
      if (bytes > model->MemoryBudget(d)) {
        return absl::StrCat("device ", d, " holds ", bytes, " bytes over budget ",
                            model->MemoryBudget(d));
      }
    }
    active = decision->new_active;
  }
  return rebalanced ? "" : "skip";
}

// Independent ring-order and input-arrival checks on a pipeline run.
std::string CheckRunInvariants(const RunReport& report) {
  const std::vector<DeviceId>& ring = report.ring;
  std::map<uint32_t, std::vector<const HopRecord*>> acts;
  std::map<uint32_t, int> logits;
  for (const HopRecord& h : report.hops) {
    if (h.type == MsgType::kActivation) acts[h.seq].push_back(&h);
    if (h.type == MsgType::kLogits) {
      if (h.from != ring.back() || h.to != ring.front()) return "LOGITS off the return route";
      ++logits[h.seq];
    }
  }
  for (const TokenRecord& t : report.tokens) {
    auto list = acts[t.seq];
    if (list.size() != ring.size() - 1) return absl::StrCat("pass ", t.seq, ": wrong ACTIVATION count");
    std::sort(list.begin(), list.end(),
              [](const HopRecord* a, const HopRecord* b) { return a->sent < b->sent; });
    for (size_t q = 0; q + 1 < ring.size(); ++q) {
      if (list[q]->from != ring[q] || list[q]->to != ring[q + 1]) {
        return absl::StrCat("pass ", t.seq, ": ACTIVATION out of ring order");
      }
    }
    if (ring.size() > 1 && logits[t.seq] != 1) {
      return absl::StrCat("pass ", t.seq, ": ", logits[t.seq], " LOGITS frames");
    }
  }
  for (const ExecRecord& e : report.execs) {
    for (const HopRecord& h : report.hops) {
      if (h.seq != e.seq || h.to != e.device) continue;
      if (h.type != MsgType::kActivation && h.type != MsgType::kResidual) continue;
      if (h.received > e.start) {
        return absl::StrCat("device ", e.device, " ran pass ", e.seq,
                            " before a ", MsgTypeName(h.type), " input arrived");
      }
    }
  }
  return "";
}

std::string CheckRandomRun(Rng& rng, DigestLedger& runs) {
  const int n = UniformInt(rng, 2, 6);
  const int m = UniformInt(rng, 2, 4);
  ChainSpec chain;
  for (int j = 0; j < n; ++j) {
    chain.flops.push_back(UniformInt(rng, 2, 10) * 1'000'000LL);
    chain.mem.push_back(UniformInt(rng, 1, 10) * 1000LL);
    for (int k = j + 2; k < n; ++k) {
      if (Uniform(rng, 0, 1) < 0.35) chain.residuals.push_back({j, k, UniformInt(rng, 100, 20'000)});
    }
  }
  chain.activation_bytes = UniformInt(rng, 100, 50'000);
  chain.return_bytes = UniformInt(rng, 100, 50'000);
  auto graph = BuildChainGraph(chain);
  if (!graph.ok()) return absl::StrCat("chain: ", graph.status().message());
  std::vector<double> speeds;
  std::vector<int64_t> mem;
  for (int i = 0; i < m; ++i) {
    speeds.push_back(1e9);
    mem.push_back(1'000'000);
  }
  const FleetProfile fleet = RandomFleet(rng, speeds, mem, 1e7, 1e8, 0.001, 0.005);
  auto setup = SetupModel(*graph, fleet, 0.8);
  if (!setup.ok()) return absl::StrCat("setup: ", setup.status().message());
  std::vector<DeviceId> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> split = {0};
  for (int i = 1; i < m; ++i) split.push_back(UniformInt(rng, 0, n));
  split.push_back(n);
  std::sort(split.begin(), split.end());
  auto plan = MakeContiguousPlan(setup->model, order, split);
  if (!plan.ok()) return absl::StrCat("plan: ", plan.status().message());

  Workload workload;
  workload.samples = UniformInt(rng, 1, 3);
  workload.tokens = UniformInt(rng, 1, 3);
  PipelineOptions options;
  options.threads = UniformInt(rng, 1, 3);
  options.mode = Uniform(rng, 0, 1) < 0.5 ? ResidualMode::kDirect : ResidualMode::kPiggyback;
  options.time_scale = 0.02;
  auto report = RunPipeline(setup->dag, BaseOverlap(*plan), setup->model, fleet,
                            workload, options);
  if (!report.ok()) return absl::StrCat("run: ", report.status().message());
  runs.Add("random-run", *report);
  if (!report->digests_match()) return "digests differ from the reference";
  if (absl::Status st = CheckRingDiscipline(*report); !st.ok()) return std::string(st.message());
  if (absl::Status st = CheckResidualCompleteness(*report); !st.ok()) return std::string(st.message());
  return CheckRunInvariants(*report);
}

Outcome InvariantSuites() {
  const auto start = Clock::now();
  Rng rng(4242);
  struct Suite {
    std::string name;
    int passed = 0;
    int cases = 0;
    std::string first_failure;
  };
  Suite partition{"edge-partition", 0, 0, ""};
  Suite traffic{"O_d2d conservation", 0, 0, ""};
  Suite memory{"memory safety under rebalancing", 0, 0, ""};
  Suite runs{"ring discipline + residual completeness", 0, 0, ""};
  auto record = [](Suite& s, const std::string& result) {
    ++s.cases;
    if (result.empty()) {
      ++s.passed;
    } else if (s.first_failure.empty()) {
      s.first_failure = result;
    }
  };
  for (int i = 0; i < kInvariantCases; ++i) record(partition, CheckEdgePartition(rng));
  for (int i = 0; i < kInvariantCases; ++i) record(traffic, CheckTrafficConservation(rng));
  for (int attempts = 0; memory.cases < kInvariantCases && attempts < 50 * kInvariantCases;
       ++attempts) {
    const std::string result = CheckMemorySafety(rng);
    if (result != "skip") record(memory, result);
  }
  DigestLedger run_digests;
  for (int i = 0; i < kInvariantCases; ++i) record(runs, CheckRandomRun(rng, run_digests));

  Outcome out;
  out.pass = true;
  out.detail = "invariant suites:";
  for (const Suite* s : {&partition, &traffic, &memory, &runs}) {
    const bool ok = s->passed == s->cases && s->cases >= kInvariantCases;
    out.pass = out.pass && ok;
    absl::StrAppend(&out.detail, " ", s->name, " ", s->passed, "/", s->cases,
                    ok ? "" : absl::StrCat(" (", s->first_failure, ")"), ";");
  }
  absl::StrAppend(&out.detail, absl::StrFormat(" need >= %d cases each; %.1f s",
                                               kInvariantCases, Since(start)));
  return out;
}

int Main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-7"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 7));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  auto selected = [&](int c) {
    return only.empty() || std::find(only.begin(), only.end(), c) != only.end();
  };

  DigestLedger digests;
  bool all = true;
  auto report = [&](int criterion, const Outcome& o) {
    all = all && o.pass;
    std::printf("criterion %d: %s  %s\n", criterion, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  };
  if (selected(1)) report(1, OptimizerExactness());
  if (selected(2)) report(2, OptimizedVsBaseline(digests));
  if (selected(3)) report(3, ThreadsSweep(digests));
  if (selected(4)) report(4, LoadBalancing(digests));
  if (selected(5)) report(5, ResidualVsPiggyback(digests));
  if (selected(6)) {
    Outcome o;
    o.pass = digests.mismatches.empty() && digests.variants > 0;
    o.detail = absl::StrFormat(
        "output digests: %d/%d variants from criteria 2-5 equal the "
        "single-device reference exactly",
        digests.variants - static_cast<int>(digests.mismatches.size()),
        digests.variants);
    if (digests.variants == 0) o.detail += " (criteria 2-5 not run)";
    if (!digests.mismatches.empty()) o.detail += "; first mismatch " + digests.mismatches[0];
    report(6, o);
  }
  if (selected(7)) report(7, InvariantSuites());
  return all ? 0 : 1;
}

}  // namespace
}  // namespace pipelink

int main(int argc, char** argv) { return pipelink::Main(argc, argv); }
