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

#ifndef PIPELINK_RUNTIME_PIPELINE_H_
#define PIPELINK_RUNTIME_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "pipelink/assign/cost_model.h"
#include "pipelink/balance/overlap.h"
#include "pipelink/balance/rebalance.h"
#include "pipelink/balance/transition.h"
#include "pipelink/monitor/fleet.h"
#include "pipelink/runtime/executor.h"
#include "pipelink/runtime/transmission_map.h"
#include "pipelink/runtime/wire.h"

namespace pipelink {

struct FaultInjection {
  DeviceId device = 0;
  uint32_t seq = 0;  // the device fails when it receives this pass
};

struct PipelineOptions {
  // Compute threads per device and samples the Leader keeps in flight.
  int threads = 1;
  ResidualMode mode = ResidualMode::kDirect;
  bool balancer = false;
  // The balancer starts watching once this many samples have completed.
  int balance_after_samples = 0;
  TriggerOptions trigger;
  OverheadConfig overheads;
  double time_scale = 1.0;
  // Data sockets listen on base_port + id and control/residual sockets on
  // base_port + 1000 + id. 0 picks a free range.
  uint16_t base_port = 0;
  double connect_timeout_sec = 5.0;
  std::optional<FaultInjection> fault;
  // Bytes held by other applications, indexed by device id. They reduce both
  // the live memory reading and the budget checked when modules load.
  std::vector<int64_t> memory_pressure;
};

// All times are simulated seconds since the run started.
struct HopRecord {
  uint32_t seq = 0;
  MsgType type = MsgType::kActivation;
  DeviceId from = 0;
  DeviceId to = 0;
  int64_t bytes = 0;  // simulated payload bytes
  double sent = 0;
  double received = 0;
  double ideal_sec = 0;  // latency + bytes / bandwidth
  // The frame delivers a residual segment consumed by the receiver.
  bool residual_delivery = false;

  double hop_sec() const { return received - sent; }
};

struct ExecRecord {
  uint32_t seq = 0;
  uint32_t epoch = 0;
  DeviceId device = 0;
  ModuleRange modules;
  double start = 0;
  double end = 0;
  double busy_sec = 0;
};

struct TokenRecord {
  uint32_t seq = 0;
  uint32_t sample = 0;
  uint32_t token = 0;
  uint32_t epoch = 0;
  double issued = 0;
  double completed = 0;
  std::vector<double> device_busy;  // indexed by device id
  std::vector<double> activation_hops;  // ring hop q -> q + 1
  double return_hop = 0;
  double residual_hop = 0;      // slowest RESIDUAL frame, 0 if none
  double residual_arrival = 0;  // last residual delivery since issue, 0 if none

  double latency() const { return completed - issued; }
};

struct RebalanceEvent {
  uint32_t decided_after_seq = 0;
  std::optional<uint32_t> switch_seq;  // set when a transition was scheduled
  uint32_t epoch = 0;                  // epoch adopted at the switch
  RebalanceDecision decision;
  std::string log_line;
};

struct TransitionRecord {
  DeviceId device = 0;
  uint32_t epoch = 0;
  uint32_t seq = 0;  // first pass run under the new epoch
  TransitionCharge charge;
  int64_t resident_bytes = 0;
};

struct RunReport {
  ResidualMode mode = ResidualMode::kDirect;
  int threads = 1;
  bool balancer = false;
  double time_scale = 1.0;
  size_t num_devices = 0;
  std::vector<DeviceId> ring;
  std::vector<TokenRecord> tokens;  // ascending seq
  std::vector<HopRecord> hops;
  std::vector<ExecRecord> execs;
  std::vector<RebalanceEvent> rebalances;
  std::vector<TransitionRecord> transitions;
  std::vector<uint64_t> sample_digests;
  std::vector<uint64_t> reference_digests;
  std::vector<double> device_busy_sec;
  double makespan_sec = 0;

  bool digests_match() const { return sample_digests == reference_digests; }
  double tokens_per_sec() const;
  double mean_latency() const;
};

// Runs the workload on a ring of in-process workers connected by shaped
// loopback sockets. `overlap` supplies the base placement (and, with the
// balancer on, the migration candidates); `model` is the planning cost model
// the balancer re-evaluates under live speeds.
absl::StatusOr<RunReport> RunPipeline(const ModuleDag& dag,
                                      const OverlapPlan& overlap,
                                      const CostModel& model,
                                      const FleetProfile& fleet,
                                      const Workload& workload,
                                      const PipelineOptions& options);

// Checks that every pass sent exactly one ACTIVATION per ring hop in ring
// order and returned exactly one LOGITS frame to the Leader.
absl::Status CheckRingDiscipline(const RunReport& report);

// Checks that no device began a pass before every frame it consumes for that
// pass had arrived.
absl::Status CheckResidualCompleteness(const RunReport& report);

// Checks measured hop time >= ideal shaped time on every logged hop, allowing
// `slack_sec` of clock rounding.
absl::Status CheckShapedLowerBound(const RunReport& report,
                                   double slack_sec = 1e-6);

}  // namespace pipelink

#endif  // PIPELINK_RUNTIME_PIPELINE_H_
