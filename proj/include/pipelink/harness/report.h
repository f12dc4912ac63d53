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

#ifndef PIPELINK_HARNESS_REPORT_H_
#define PIPELINK_HARNESS_REPORT_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "pipelink/harness/experiment.h"

namespace pipelink {

// One row per token and variant:
//   variant,seq,sample,token,epoch,issued_sec,completed_sec,latency_sec,
//   device_busy_<i>...,act_hop_<q>...,return_hop_sec,residual_hop_sec,
//   residual_arrival_sec
// Activation hop q runs from ring position q-1 to q; cells past a variant's
// ring are empty.
std::string RunRawCsv(const ExperimentResult& result);

// Per-variant metrics, all recomputable from the raw rows:
//   tokens_per_sec = tokens / (max completed - min issued)
//   device_busy_fraction[i] = sum of device_busy_i / makespan
//   latency percentiles use the nearest-rank rule.
// speedup is tokens_per_sec relative to the first variant.
nlohmann::json SummaryJson(const ExperimentResult& result);

// Plot-ready rows, one per variant:
//   scenario,variant,plan,threads,mode,balancer,tokens,makespan_sec,
//   tokens_per_sec,mean_latency_sec,p90_latency_sec,speedup
absl::StatusOr<std::string> CompareLongCsv(const nlohmann::json& summary);

// Human-readable table of a summary.
absl::StatusOr<std::string> RenderSummary(const nlohmann::json& summary);

// Nearest-rank percentile (0 < p <= 100) of unsorted values; 0 when empty.
double Percentile(std::vector<double> values, double p);

// Writes run_raw.csv, summary.json and compare_long.csv into `dir`,
// creating it when missing.
absl::Status WriteExperimentOutputs(const ExperimentResult& result,
                                    const std::string& dir);

absl::StatusOr<nlohmann::json> LoadSummary(const std::string& path);

}  // namespace pipelink

#endif  // PIPELINK_HARNESS_REPORT_H_
