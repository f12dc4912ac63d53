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

#ifndef PIPELINK_BALANCE_REBALANCE_H_
#define PIPELINK_BALANCE_REBALANCE_H_

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "pipelink/assign/cost_model.h"
#include "pipelink/balance/overlap.h"
#include "pipelink/monitor/fleet.h"

namespace pipelink {

struct TriggerOptions {
  int window = 10;     // tokens
  double theta = 1.5;  // max / median busy time
  double beta = kDefaultBeta;
};

// Per-device busy seconds of the most recent tokens.
class BusyWindow {
 public:
  BusyWindow(size_t num_devices, int window)
      : num_devices_(num_devices), window_(window) {}

  void Record(std::vector<double> busy_per_device);
  void Clear() { tokens_.clear(); }
  bool full() const { return static_cast<int>(tokens_.size()) >= window_; }
  size_t num_devices() const { return num_devices_; }
  // Mean busy seconds per token for every device.
  std::vector<double> MeanBusy() const;

 private:
  size_t num_devices_;
  int window_;
  std::deque<std::vector<double>> tokens_;
};

struct TriggerResult {
  enum class Kind { kInsufficientWindow, kBalanced, kTriggered };
  Kind kind = Kind::kInsufficientWindow;
  std::optional<DeviceId> bottleneck;
  std::vector<double> mean_busy;
  std::string reason;

  bool triggered() const { return kind == Kind::kTriggered; }
};

// Fires when the busiest device's mean busy time reaches theta times the
// median, or when a device's available memory falls below (1 - beta) of its
// total. The bottleneck is the busiest device, lowest id on ties. Devices
// that host nothing (zero busy time) are excluded from the median.
TriggerResult ShouldRebalance(const FleetProfile& snapshot,
                              const BusyWindow& stats,
                              const TriggerOptions& options = {});

// Release and reload overheads charged per move. The defaults are calibrated
// so that releasing 8 sub-modules costs 0.03 s.
struct OverheadConfig {
  double release_sec_per_module = 0.03 / 8;
  double reload_bytes_per_sec = 400e6;
};

// Reload rate at which `bytes` of sub-modules take `seconds` to load.
double CalibratedReloadRate(int64_t bytes, double seconds = 2.449);

struct ModuleMove {
  int module = 0;
  DeviceId from = 0;
  DeviceId to = 0;
  bool operator==(const ModuleMove&) const = default;
};

struct RebalanceDecision {
  enum class Outcome { kRebalance, kNoImprovement, kCannotRebalance };
  Outcome outcome = Outcome::kNoImprovement;
  bool trigger = false;
  std::optional<DeviceId> bottleneck;
  std::vector<DeviceId> new_active;
  std::vector<ModuleMove> moves;  // ascending module index
  double current_cost = 0;        // objective of the current active map
  double new_cost = 0;
  double est_release_sec = 0;
  double est_reload_sec = 0;
  std::string reason;

  double est_overhead_sec() const { return est_release_sec + est_reload_sec; }
};

// Searches every active map reachable by moving movable sub-modules between
// their two hosts, keeping active ranges contiguous in ring order and every
// non-empty base device non-empty, and returns the one minimizing the
// placement objective under `snapshot` speeds and links. The current map is
// kept unless another is strictly better.
absl::StatusOr<RebalanceDecision> PlanRebalance(
    const OverlapPlan& overlap, const std::vector<DeviceId>& current_active,
    const FleetProfile& snapshot, const CostModel& model,
    std::optional<DeviceId> bottleneck, const OverheadConfig& overheads = {});

// rebalance <token_seq> <bottleneck> moves=<j:from->to,...> est_overhead=<sec>
std::string FormatRebalanceLog(int64_t token_seq,
                               const RebalanceDecision& decision);

}  // namespace pipelink

#endif  // PIPELINK_BALANCE_REBALANCE_H_
