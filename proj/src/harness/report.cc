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

#include "pipelink/harness/report.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/common/text_format.h"

namespace pipelink {
namespace {

using nlohmann::json;

size_t MaxHops(const ExperimentResult& result) {
  size_t hops = 0;
  for (const VariantResult& v : result.variants) {
    if (!v.report.ring.empty()) hops = std::max(hops, v.report.ring.size() - 1);
  }
  return hops;
}

size_t MaxDevices(const ExperimentResult& result) {
  size_t m = 0;
  for (const VariantResult& v : result.variants) {
    m = std::max(m, v.report.num_devices);
  }
  return m;
}

std::string OutcomeName(RebalanceDecision::Outcome outcome) {
  switch (outcome) {
    case RebalanceDecision::Outcome::kRebalance:
      return "rebalance";
    case RebalanceDecision::Outcome::kNoImprovement:
      return "no-improvement";
    case RebalanceDecision::Outcome::kCannotRebalance:
      return "cannot-rebalance";
  }
  return "unknown";
}

json HopEntry(const std::string& name, const std::vector<double>& values) {
  double total = 0;
  double worst = 0;
  for (double v : values) {
    total += v;
    worst = std::max(worst, v);
  }
  return {{"hop", name},
          {"count", values.size()},
          {"mean_sec", values.empty() ? 0.0 : total / values.size()},
          {"max_sec", worst}};
}

json VariantJson(const VariantResult& v, double reference_tps) {
  const RunReport& r = v.report;
  std::vector<double> latencies;
  for (const TokenRecord& t : r.tokens) latencies.push_back(t.latency());
  json busy_fraction = json::array();
  for (double busy : r.device_busy_sec) {
    busy_fraction.push_back(r.makespan_sec > 0 ? busy / r.makespan_sec : 0.0);
  }

  json hops = json::array();
  const size_t ring_hops = r.ring.empty() ? 0 : r.ring.size() - 1;
  for (size_t q = 0; q < ring_hops; ++q) {
    std::vector<double> values;
    for (const TokenRecord& t : r.tokens) values.push_back(t.activation_hops[q]);
    hops.push_back(HopEntry(absl::StrCat("act_", q + 1), values));
  }
  std::vector<double> ret;
  std::vector<double> res;
  for (const TokenRecord& t : r.tokens) {
    if (r.ring.size() > 1) ret.push_back(t.return_hop);
    if (t.residual_hop > 0) res.push_back(t.residual_hop);
  }
  hops.push_back(HopEntry("return", ret));
  hops.push_back(HopEntry("residual", res));

  json rebalances = json::array();
  for (const RebalanceEvent& e : r.rebalances) {
    json entry = {{"decided_after_seq", e.decided_after_seq},
                  {"epoch", e.epoch},
                  {"outcome", OutcomeName(e.decision.outcome)},
                  {"current_cost_sec", e.decision.current_cost},
                  {"new_cost_sec", e.decision.new_cost},
                  {"est_overhead_sec", e.decision.est_overhead_sec()},
                  {"log", e.log_line}};
    entry["switch_seq"] =
        e.switch_seq.has_value() ? json(*e.switch_seq) : json(nullptr);
    rebalances.push_back(std::move(entry));
  }
  json transitions = json::array();
  for (const TransitionRecord& t : r.transitions) {
    transitions.push_back({{"device", t.device},
                           {"epoch", t.epoch},
                           {"seq", t.seq},
                           {"released", t.charge.release},
                           {"loaded", t.charge.load},
                           {"release_sec", t.charge.release_sec},
                           {"reload_sec", t.charge.reload_sec},
                           {"resident_bytes", t.resident_bytes}});
  }
  json digests = json::array();
  for (uint64_t d : r.sample_digests) digests.push_back(absl::StrFormat("%016x", d));

  const double tps = r.tokens_per_sec();
  return {
      {"name", v.variant.name},
      {"plan", std::string(PlanKindName(v.variant.plan))},
      {"threads", v.variant.threads},
      {"mode", std::string(ResidualModeName(v.variant.mode))},
      {"balancer", v.variant.balancer},
      {"device_order", v.plan.device_order},
      {"split", v.plan.split},
      {"plan_objective_sec", v.plan.cost.objective},
      {"ring", r.ring},
      {"tokens", r.tokens.size()},
      {"makespan_sec", r.makespan_sec},
      {"tokens_per_sec", tps},
      {"speedup", reference_tps > 0 ? tps / reference_tps : 0.0},
      {"latency_sec",
       {{"mean", r.mean_latency()},
        {"p50", Percentile(latencies, 50)},
        {"p90", Percentile(latencies, 90)},
        {"min", latencies.empty() ? 0.0 : *std::min_element(latencies.begin(), latencies.end())},
        {"max", latencies.empty() ? 0.0 : *std::max_element(latencies.begin(), latencies.end())}}},
      {"device_busy_sec", r.device_busy_sec},
      {"device_busy_fraction", busy_fraction},
      {"hop_table", hops},
      {"rebalances", rebalances},
      {"transitions", transitions},
      {"digests_match", r.digests_match()},
      {"sample_digests", digests},
  };
}

std::string Cell(double v) { return FormatDouble(v); }

}  // namespace

double Percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const size_t index = static_cast<size_t>(std::max(1.0, rank)) - 1;
  return values[std::min(index, values.size() - 1)];
}

std::string RunRawCsv(const ExperimentResult& result) {
  const size_t m = MaxDevices(result);
  const size_t hops = MaxHops(result);
  std::string out =
      "variant,seq,sample,token,epoch,issued_sec,completed_sec,latency_sec";
  for (size_t i = 0; i < m; ++i) absl::StrAppend(&out, ",device_busy_", i);
  for (size_t q = 0; q < hops; ++q) absl::StrAppend(&out, ",act_hop_", q + 1);
  absl::StrAppend(&out, ",return_hop_sec,residual_hop_sec,residual_arrival_sec\n");
  for (const VariantResult& v : result.variants) {
    for (const TokenRecord& t : v.report.tokens) {
      absl::StrAppend(&out, v.variant.name, ",", t.seq, ",", t.sample, ",",
                      t.token, ",", t.epoch, ",", Cell(t.issued), ",",
                      Cell(t.completed), ",", Cell(t.latency()));
      for (size_t i = 0; i < m; ++i) {
        absl::StrAppend(&out, ",",
                        i < t.device_busy.size() ? Cell(t.device_busy[i]) : "");
      }
      for (size_t q = 0; q < hops; ++q) {
        absl::StrAppend(
            &out, ",",
            q < t.activation_hops.size() ? Cell(t.activation_hops[q]) : "");
      }
      absl::StrAppend(&out, ",", Cell(t.return_hop), ",", Cell(t.residual_hop),
                      ",", Cell(t.residual_arrival), "\n");
    }
  }
  return out;
}

json SummaryJson(const ExperimentResult& result) {
  json variants = json::array();
  const double reference_tps = result.variants.empty()
                                   ? 0.0
                                   : result.variants.front().report.tokens_per_sec();
  for (const VariantResult& v : result.variants) {
    variants.push_back(VariantJson(v, reference_tps));
  }
  return {{"scenario", result.name},
          {"seed", result.seed},
          {"time_scale", result.time_scale},
          {"beta", result.beta},
          {"workload",
           {{"samples", result.workload.samples},
            {"context_len", result.workload.context_len},
            {"tokens", result.workload.tokens},
            {"flops_growth_per_token", result.workload.flops_growth_per_token}}},
          {"reference_variant",
           result.variants.empty() ? "" : result.variants.front().variant.name},
          {"variants", variants}};
}

absl::StatusOr<std::string> CompareLongCsv(const json& summary) {
  try {
    const json& variants = summary.at("variants");
    const double reference =
        variants.empty() ? 0.0 : variants.at(0).at("tokens_per_sec").get<double>();
    std::string out =
        "scenario,variant,plan,threads,mode,balancer,tokens,makespan_sec,"
        "tokens_per_sec,mean_latency_sec,p90_latency_sec,speedup\n";
    const std::string scenario = summary.at("scenario").get<std::string>();
    for (const json& v : variants) {
      const double tps = v.at("tokens_per_sec").get<double>();
      absl::StrAppend(
          &out, scenario, ",", v.at("name").get<std::string>(), ",",
          v.at("plan").get<std::string>(), ",", v.at("threads").get<int>(), ",",
          v.at("mode").get<std::string>(), ",",
          v.at("balancer").get<bool>() ? "on" : "off", ",",
          v.at("tokens").get<int64_t>(), ",",
          Cell(v.at("makespan_sec").get<double>()), ",", Cell(tps), ",",
          Cell(v.at("latency_sec").at("mean").get<double>()), ",",
          Cell(v.at("latency_sec").at("p90").get<double>()), ",",
          Cell(reference > 0 ? tps / reference : 0.0), "\n");
    }
    return out;
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed summary: ", e.what()));
  }
}

absl::StatusOr<std::string> RenderSummary(const json& summary) {
  try {
    std::string out = absl::StrFormat(
        "scenario %s  seed %d  time-scale %g  workload %d samples x %d tokens\n",
        summary.at("scenario").get<std::string>(),
        summary.at("seed").get<uint64_t>(),
        summary.at("time_scale").get<double>(),
        summary.at("workload").at("samples").get<int>(),
        summary.at("workload").at("tokens").get<int>());
    absl::StrAppend(
        &out, absl::StrFormat("%-14s %-9s %3s %-9s %-3s %9s %8s %10s %10s %5s %7s\n",
                              "variant", "plan", "thr", "mode", "lb",
                              "tok/s", "speedup", "mean_lat_s", "p90_lat_s",
                              "rebal", "digests"));
    for (const json& v : summary.at("variants")) {
      int applied = 0;
      for (const json& e : v.at("rebalances")) {
        if (!e.at("switch_seq").is_null()) ++applied;
      }
      absl::StrAppend(
          &out,
          absl::StrFormat("%-14s %-9s %3d %-9s %-3s %9.4f %8.3f %10.4f %10.4f %5d %7s\n",
                          v.at("name").get<std::string>(),
                          v.at("plan").get<std::string>(),
                          v.at("threads").get<int>(),
                          v.at("mode").get<std::string>(),
                          v.at("balancer").get<bool>() ? "on" : "off",
                          v.at("tokens_per_sec").get<double>(),
                          v.at("speedup").get<double>(),
                          v.at("latency_sec").at("mean").get<double>(),
                          v.at("latency_sec").at("p90").get<double>(), applied,
                          v.at("digests_match").get<bool>() ? "match" : "DIFFER"));
    }
    for (const json& v : summary.at("variants")) {
      std::string hops;
      for (const json& h : v.at("hop_table")) {
        if (h.at("count").get<int64_t>() == 0) continue;
        absl::StrAppend(&hops, absl::StrFormat(" %s=%.4f",
                                               h.at("hop").get<std::string>(),
                                               h.at("mean_sec").get<double>()));
      }
      absl::StrAppend(&out, "hops ", v.at("name").get<std::string>(), ":", hops,
                      "\n");
      for (const json& e : v.at("rebalances")) {
        absl::StrAppend(&out, "  ", e.at("log").get<std::string>(), "\n");
      }
    }
    return out;
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed summary: ", e.what()));
  }
}

absl::Status WriteExperimentOutputs(const ExperimentResult& result,
                                    const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  const json summary = SummaryJson(result);
  RETURN_IF_ERROR(WriteStringToFile(dir + "/run_raw.csv", RunRawCsv(result)));
  RETURN_IF_ERROR(
      WriteStringToFile(dir + "/summary.json", summary.dump(2) + "\n"));
  ASSIGN_OR_RETURN(const std::string compare, CompareLongCsv(summary));
  return WriteStringToFile(dir + "/compare_long.csv", compare);
}

absl::StatusOr<json> LoadSummary(const std::string& path) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": invalid JSON"));
  }
  return parsed;
}

}  // namespace pipelink
