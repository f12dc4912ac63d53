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

#include "pipelink/balance/rebalance.h"

#include <algorithm>
#include <limits>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/common/text_format.h"

namespace pipelink {
namespace {

// Full enumeration of boundary positions up to this many combinations;
// coordinate descent beyond it.
constexpr double kMaxEnumerated = 2e5;

}  // namespace

void BusyWindow::Record(std::vector<double> busy_per_device) {
  tokens_.push_back(std::move(busy_per_device));
  while (static_cast<int>(tokens_.size()) > window_) tokens_.pop_front();
}

std::vector<double> BusyWindow::MeanBusy() const {
  std::vector<double> mean(num_devices_, 0);
  if (tokens_.empty()) return mean;
  for (const auto& token : tokens_) {
    for (size_t i = 0; i < num_devices_; ++i) mean[i] += token[i];
  }
  for (double& v : mean) v /= static_cast<double>(tokens_.size());
  return mean;
}

TriggerResult ShouldRebalance(const FleetProfile& snapshot,
                              const BusyWindow& stats,
                              const TriggerOptions& options) {
  TriggerResult result;
  if (!stats.full()) {
    result.reason = "insufficient window";
    return result;
  }
  result.mean_busy = stats.MeanBusy();
  const std::vector<double>& busy = result.mean_busy;
  DeviceId argmax = 0;
  for (size_t i = 1; i < busy.size(); ++i) {
    if (busy[i] > busy[argmax]) argmax = static_cast<DeviceId>(i);
  }
  std::vector<double> working;
  for (double b : busy) {
    if (b > 0) working.push_back(b);
  }
  result.kind = TriggerResult::Kind::kBalanced;
  if (!working.empty()) {
    std::sort(working.begin(), working.end());
    const size_t h = working.size() / 2;
    const double median = working.size() % 2 ? working[h]
                                              : (working[h - 1] + working[h]) / 2;
    if (busy[argmax] >= options.theta * median && working.size() > 1) {
      result.kind = TriggerResult::Kind::kTriggered;
      result.reason = absl::StrCat("device ", argmax, " busy ",
                                   FormatDouble(busy[argmax]), " s/token >= ",
                                   FormatDouble(options.theta), " x median ",
                                   FormatDouble(median));
    }
  }
  for (const DeviceProfile& d : snapshot.devices) {
    if (static_cast<double>(d.mem_avail_bytes) <
        (1 - options.beta) * static_cast<double>(d.mem_total_bytes)) {
      result.kind = TriggerResult::Kind::kTriggered;
      result.reason = absl::StrCat("device ", d.id, " memory below floor");
      break;
    }
  }
  if (result.triggered()) result.bottleneck = argmax;
  return result;
}

double CalibratedReloadRate(int64_t bytes, double seconds) {
  return static_cast<double>(bytes) / seconds;
}

absl::StatusOr<RebalanceDecision> PlanRebalance(
    const OverlapPlan& overlap, const std::vector<DeviceId>& current_active,
    const FleetProfile& snapshot, const CostModel& model,
    std::optional<DeviceId> bottleneck, const OverheadConfig& overheads) {
  const size_t n = overlap.num_modules();
  if (current_active.size() != n) {
    return absl::InvalidArgumentError("active map has the wrong size");
  }
  RebalanceDecision decision;
  decision.trigger = true;
  decision.bottleneck = bottleneck;
  decision.new_active = current_active;

  CostModel live = WithFleet(model, snapshot);
  // Hosted sets were reserved at planning time; live memory readings already
  // include them.
  live.mem_avail = model.mem_avail;
  ASSIGN_OR_RETURN(const CostBreakdown current,
                   EvaluateCost(ActiveAssignment(overlap, current_active), live));
  decision.current_cost = decision.new_cost = current.objective;

  if (overlap.movable.empty()) {
    decision.outcome = RebalanceDecision::Outcome::kCannotRebalance;
    decision.reason = "no movable sub-modules";
    return decision;
  }
  if (bottleneck) {
    bool adjacent = false;
    for (int j : overlap.movable) {
      const auto hosts = overlap.Hosts(j);
      adjacent |= std::find(hosts.begin(), hosts.end(), *bottleneck) != hosts.end();
    }
    if (!adjacent) {
      decision.outcome = RebalanceDecision::Outcome::kCannotRebalance;
      decision.reason = absl::StrCat("no movable sub-module on device ",
                                     *bottleneck);
      return decision;
    }
  }

  // Boundary q separates ring positions q and q + 1; its value is the first
  // module active at position q + 1 or later.
  const std::vector<DeviceId> ring = overlap.RingDevices();
  const int k = static_cast<int>(ring.size());
  std::vector<int> position(overlap.num_devices(), -1);
  for (int q = 0; q < k; ++q) position[ring[q]] = q;
  std::vector<int> lo(k - 1), hi(k - 1), boundary(k - 1, 0);
  for (int q = 0; q + 1 < k; ++q) {
    const int base = overlap.base[ring[q + 1]].first;
    lo[q] = base - overlap.left_extension[ring[q + 1]];
    hi[q] = base + overlap.right_extension[ring[q]];
  }
  for (size_t j = 0; j < n; ++j) {
    const DeviceId d = current_active[j];
    if (d < 0 || d >= static_cast<DeviceId>(position.size()) || position[d] < 0) {
      return absl::FailedPreconditionError(absl::StrCat(
          "module ", j, " is active on device ", current_active[j],
          " outside the ring"));
    }
  }
  for (int q = 0; q + 1 < k; ++q) {
    // boundary[q] counts modules active at positions <= q.
    int count = 0;
    for (size_t j = 0; j < n; ++j) count += position[current_active[j]] <= q;
    boundary[q] = count;
    if (boundary[q] < lo[q] || boundary[q] > hi[q]) {
      return absl::FailedPreconditionError(absl::StrCat(
          "current active map places boundary ", q, " outside its overlap"));
    }
  }

  auto active_for = [&](const std::vector<int>& b) {
    std::vector<DeviceId> active(n);
    int q = 0;
    for (size_t j = 0; j < n; ++j) {
      while (q + 1 < k && static_cast<int>(j) >= b[q]) ++q;
      active[j] = ring[q];
    }
    return active;
  };
  auto valid = [&](const std::vector<int>& b) {
    int prev = 0;
    for (int q = 0; q + 1 < k; ++q) {
      if (b[q] <= prev) return false;
      prev = b[q];
    }
    return prev < static_cast<int>(n);
  };
  auto cost_of = [&](const std::vector<int>& b) -> double {
    auto cost = EvaluateCost(ActiveAssignment(overlap, active_for(b)), live);
    return cost.ok() ? cost->objective : std::numeric_limits<double>::infinity();
  };

  std::vector<int> best = boundary;
  double best_cost = current.objective;
  double combinations = 1;
  for (int q = 0; q + 1 < k; ++q) combinations *= hi[q] - lo[q] + 1;
  if (combinations <= kMaxEnumerated) {
    std::vector<int> b = lo;
    while (true) {
      if (valid(b)) {
        const double c = cost_of(b);
        if (c < best_cost) {
          best_cost = c;
          best = b;
        }
      }
      int q = k - 2;
      while (q >= 0 && b[q] == hi[q]) b[q] = lo[q], --q;
      if (q < 0) break;
      ++b[q];
    }
  } else {
    for (bool improved = true; improved;) {
      improved = false;
      for (int q = 0; q + 1 < k; ++q) {
        std::vector<int> b = best;
        for (int v = lo[q]; v <= hi[q]; ++v) {
          b[q] = v;
          if (!valid(b)) continue;
          const double c = cost_of(b);
          if (c < best_cost) {
            best_cost = c;
            best = b;
            improved = true;
          }
        }
      }
    }
  }

  decision.new_active = active_for(best);
  decision.new_cost = best_cost;
  for (size_t j = 0; j < n; ++j) {
    if (decision.new_active[j] != current_active[j]) {
      decision.moves.push_back(
          {static_cast<int>(j), current_active[j], decision.new_active[j]});
      decision.est_reload_sec +=
          static_cast<double>(model.module_mem[j]) / overheads.reload_bytes_per_sec;
    }
  }
  decision.est_release_sec =
      overheads.release_sec_per_module * static_cast<double>(decision.moves.size());
  if (decision.moves.empty()) {
    decision.outcome = RebalanceDecision::Outcome::kNoImprovement;
    decision.reason = "current active map is already optimal";
  } else {
    decision.outcome = RebalanceDecision::Outcome::kRebalance;
    decision.reason = absl::StrCat("objective ", FormatDouble(current.objective),
                                   " -> ", FormatDouble(best_cost));
  }
  return decision;
}

std::string FormatRebalanceLog(int64_t token_seq,
                               const RebalanceDecision& decision) {
  std::vector<std::string> moves;
  for (const ModuleMove& mv : decision.moves) {
    moves.push_back(absl::StrCat(mv.module, ":", mv.from, "->", mv.to));
  }
  return absl::StrCat(
      "rebalance ", token_seq, " ",
      decision.bottleneck ? absl::StrCat(*decision.bottleneck) : "-", " moves=",
      absl::StrJoin(moves, ","), " est_overhead=",
      FormatDouble(decision.est_overhead_sec()));
}

}  // namespace pipelink
