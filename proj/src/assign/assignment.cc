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

#include "pipelink/assign/assignment.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "pipelink/common/status_macros.h"

namespace pipelink {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bounds are summed in a different order than EvaluateCost, so pruning keeps
// a relative margin to stay exact on near-ties.
bool CannotImprove(double bound, double best) {
  return bound > best * (1 + 1e-12);
}

absl::Status NoFeasiblePlanError() {
  return absl::ResourceExhaustedError(
      "no memory-feasible contiguous placement exists");
}

// Coarse infeasibility diagnosis shared by the solver and the oracle.
absl::Status CheckAggregateFeasibility(const CostModel& model) {
  double budget = 0;
  double largest_budget = 0;
  for (size_t i = 0; i < model.num_devices(); ++i) {
    budget += model.MemoryBudget(i);
    largest_budget = std::max(largest_budget, model.MemoryBudget(i));
  }
  int64_t total = 0;
  size_t largest = 0;
  for (size_t j = 0; j < model.num_modules(); ++j) {
    total += model.module_mem[j];
    if (model.module_mem[j] > model.module_mem[largest]) largest = j;
  }
  const double deficit = static_cast<double>(total) - budget;
  const bool too_big =
      static_cast<double>(model.module_mem[largest]) > largest_budget;
  if (deficit > 0 || too_big) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "infeasible placement: total deficit ", std::max(0.0, deficit),
        " bytes (need ", total, ", fleet budget ", budget,
        "); largest sub-module ", largest, " needs ",
        model.module_mem[largest], " bytes vs largest device budget ",
        largest_budget));
  }
  return absl::OkStatus();
}

Assignment BuildX(size_t m, size_t n, const std::vector<DeviceId>& order,
                  const std::vector<int>& split) {
  Assignment x(m, n, 0);
  for (size_t p = 0; p < order.size(); ++p) {
    for (int j = split[p]; j < split[p + 1]; ++j) x(order[p], j) = 1;
  }
  return x;
}

// Exact branch and bound over ring orderings and contiguous splits. Each
// level fixes the device at the next ring position and the end of its range.
//
// The remaining cost is bounded by a dynamic program over (set of unplaced
// devices, first unplaced module) that relaxes the ring order of the unplaced
// devices: it counts compute time exactly and charges the bytes leaving each
// range at the best bandwidth and the smallest latency towards any device
// placed after it. Traffic entering from already placed ranges and the return
// hop are ignored, so the bound never exceeds the true remaining cost.
class ContiguousSearch {
 public:
  explicit ContiguousSearch(const CostModel& model)
      : model_(model),
        m_(model.num_devices()),
        n_(model.num_modules()),
        ecum_(m_, std::vector<double>(n_ + 1, 0)),
        mcum_(n_ + 1, 0),
        ocum_((n_ + 1) * (n_ + 1), 0) {
    for (size_t i = 0; i < m_; ++i) {
      for (size_t j = 0; j < n_; ++j) {
        ecum_[i][j + 1] = ecum_[i][j] + model.exec_time(i, j);
      }
    }
    for (size_t j = 0; j < n_; ++j) {
      mcum_[j + 1] = mcum_[j] + model.module_mem[j];
    }
    for (size_t j = 0; j < n_; ++j) {
      for (size_t l = 0; l < n_; ++l) {
        ocum_[(j + 1) * (n_ + 1) + l + 1] = model.o_m2m(j, l) +
                                            ocum_[j * (n_ + 1) + l + 1] +
                                            ocum_[(j + 1) * (n_ + 1) + l] -
                                            ocum_[j * (n_ + 1) + l];
      }
    }
    ComputeSuffixBounds();
  }

  absl::StatusOr<AssignmentPlan> Run() {
    const uint32_t all = (1u << m_) - 1;
    if (lb_[all][0] == kInf) return NoFeasiblePlanError();
    order_.assign(m_, 0);
    split_.assign(m_ + 1, 0);
    Search(0, 0, all, 0.0);
    if (best_order_.empty()) return NoFeasiblePlanError();
    return MakeContiguousPlan(model_, best_order_, best_split_);
  }

 private:
  int64_t Bytes(int a, int b, int c, int e) const {
    const size_t w = n_ + 1;
    return ocum_[b * w + e] - ocum_[a * w + e] - ocum_[b * w + c] +
           ocum_[a * w + c];
  }
  bool Fits(DeviceId d, int a, int b) const {
    return static_cast<double>(mcum_[b] - mcum_[a]) <= model_.MemoryBudget(d);
  }

  void ComputeSuffixBounds() {
    const int n = static_cast<int>(n_);
    const uint32_t subsets = 1u << m_;
    lb_.assign(subsets, std::vector<double>(n_ + 1, kInf));
    lb_[0][n] = 0;
    for (uint32_t set = 1; set < subsets; ++set) {
      for (DeviceId d = 0; d < static_cast<DeviceId>(m_); ++d) {
        if (!(set & (1u << d))) continue;
        const uint32_t rest = set & ~(1u << d);
        double min_latency = kInf;
        double max_bandwidth = 0;
        for (DeviceId q = 0; q < static_cast<DeviceId>(m_); ++q) {
          if (!(rest & (1u << q))) continue;
          min_latency = std::min(min_latency, model_.latency(d, q));
          max_bandwidth = std::max(max_bandwidth, model_.bandwidth(d, q));
        }
        for (int a = 0; a <= n; ++a) {
          double best = lb_[rest][a];  // empty range
          for (int b = a + 1; b <= n; ++b) {
            if (!Fits(d, a, b)) break;
            if (lb_[rest][b] == kInf) continue;
            double cost = ecum_[d][b] - ecum_[d][a];
            const int64_t out = Bytes(a, b, b, n);
            if (out > 0) {
              if (max_bandwidth == 0) continue;
              cost += min_latency + static_cast<double>(out) / max_bandwidth;
            }
            best = std::min(best, cost + lb_[rest][b]);
          }
          lb_[set][a] = std::min(lb_[set][a], best);
        }
      }
    }
  }

  bool LexicographicallyBefore() const {
    if (order_ != best_order_) return order_ < best_order_;
    return split_ < best_split_;
  }

  void Search(size_t p, int a, uint32_t unplaced, double partial) {
    if (p == m_) {
      if (a != static_cast<int>(n_)) return;
      auto cost = EvaluateCost(BuildX(m_, n_, order_, split_), model_);
      if (!cost.ok()) return;
      if (cost->objective < best_objective_ ||
          (cost->objective == best_objective_ && LexicographicallyBefore())) {
        best_objective_ = cost->objective;
        best_order_ = order_;
        best_split_ = split_;
      }
      return;
    }
    const int first_end = p + 1 == m_ ? static_cast<int>(n_) : a;
    for (DeviceId d = 0; d < static_cast<DeviceId>(m_); ++d) {
      if (!(unplaced & (1u << d))) continue;
      const uint32_t rest = unplaced & ~(1u << d);
      order_[p] = d;
      for (int b = first_end; b <= static_cast<int>(n_); ++b) {
        if (!Fits(d, a, b)) break;
        if (lb_[rest][b] == kInf) continue;
        // Swapping an empty range with its neighbour leaves X unchanged, so
        // only the ordering that is smaller at that swap is explored.
        if (p > 0 && (b == a || split_[p - 1] == split_[p]) &&
            order_[p - 1] > d) {
          continue;
        }
        double inc = 0;
        if (b > a) {
          inc = ecum_[d][b] - ecum_[d][a];
          for (size_t q = 0; q < p; ++q) {
            if (split_[q] == split_[q + 1]) continue;
            const int64_t bytes = Bytes(split_[q], split_[q + 1], a, b);
            if (bytes > 0) {
              inc += model_.latency(order_[q], d) +
                     static_cast<double>(bytes) /
                         model_.bandwidth(order_[q], d);
            }
          }
        }
        if (CannotImprove(partial + inc + lb_[rest][b], best_objective_)) {
          continue;
        }
        split_[p + 1] = b;
        Search(p + 1, b, rest, partial + inc);
      }
    }
  }

  const CostModel& model_;
  const size_t m_;
  const size_t n_;
  std::vector<std::vector<double>> ecum_;
  std::vector<int64_t> mcum_;
  std::vector<int64_t> ocum_;
  std::vector<std::vector<double>> lb_;  // [unplaced set][first module]

  std::vector<DeviceId> order_;
  std::vector<int> split_;

  double best_objective_ = kInf;
  std::vector<DeviceId> best_order_;
  std::vector<int> best_split_;
};

// Calls `visit` for every nondecreasing split vector 0 = s_0 <= ... <= s_m = n
// in lexicographic order.
template <typename Visit>
void ForEachSplit(size_t m, int n, std::vector<int>& split, size_t p,
                  Visit&& visit) {
  if (p == m) {
    visit(split);
    return;
  }
  for (int b = p + 1 == m ? n : split[p]; b <= n; ++b) {
    split[p + 1] = b;
    ForEachSplit(m, n, split, p + 1, visit);
  }
}

}  // namespace

ModuleRange AssignmentPlan::range(DeviceId device) const {
  if (contiguous()) {
    for (size_t p = 0; p < device_order.size(); ++p) {
      if (device_order[p] == device) return {split[p], split[p + 1] - 1};
    }
    return {};
  }
  ModuleRange r{static_cast<int>(x.cols()), -1};
  for (size_t j = 0; j < x.cols(); ++j) {
    if (x(device, j)) {
      r.first = std::min(r.first, static_cast<int>(j));
      r.last = std::max(r.last, static_cast<int>(j));
    }
  }
  return r;
}

DeviceId AssignmentPlan::device_of(int module) const {
  for (size_t i = 0; i < x.rows(); ++i) {
    if (x(i, module)) return static_cast<DeviceId>(i);
  }
  return -1;
}

absl::StatusOr<AssignmentPlan> MakeContiguousPlan(
    const CostModel& model, std::vector<DeviceId> device_order,
    std::vector<int> split) {
  const size_t m = model.num_devices();
  const int n = static_cast<int>(model.num_modules());
  if (device_order.size() != m || split.size() != m + 1) {
    return absl::InvalidArgumentError("order/split size mismatch");
  }
  std::vector<DeviceId> sorted = device_order;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < m; ++i) {
    if (sorted[i] != static_cast<DeviceId>(i)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "device order [", absl::StrJoin(device_order, ","),
          "] is not a permutation"));
    }
  }
  if (split.front() != 0 || split.back() != n ||
      !std::is_sorted(split.begin(), split.end())) {
    return absl::InvalidArgumentError(absl::StrCat(
        "split [", absl::StrJoin(split, ","), "] is not a cover of 0..", n));
  }
  AssignmentPlan plan;
  plan.x = BuildX(m, static_cast<size_t>(n), device_order, split);
  plan.device_order = std::move(device_order);
  plan.split = std::move(split);
  ASSIGN_OR_RETURN(plan.cost, EvaluateCost(plan.x, model));
  return plan;
}

absl::Status ValidatePlan(const AssignmentPlan& plan, const CostModel& model) {
  RETURN_IF_ERROR(CheckColumns(plan.x));
  RETURN_IF_ERROR(CheckMemory(plan.x, model));
  if (plan.contiguous()) {
    ASSIGN_OR_RETURN(AssignmentPlan rebuilt,
                     MakeContiguousPlan(model, plan.device_order, plan.split));
    if (!(rebuilt.x == plan.x)) {
      return absl::FailedPreconditionError(
          "placement matrix disagrees with the ring ranges");
    }
  } else {
    for (size_t i = 0; i < plan.num_devices(); ++i) {
      const ModuleRange r = plan.range(static_cast<DeviceId>(i));
      for (int j = r.first; j <= r.last; ++j) {
        if (!plan.x(i, j)) {
          return absl::FailedPreconditionError(absl::StrCat(
              "device ", i, " holds a non-contiguous set of sub-modules"));
        }
      }
    }
  }
  ASSIGN_OR_RETURN(const CostBreakdown fresh, EvaluateCost(plan.x, model));
  if (fresh.objective != plan.cost.objective) {
    return absl::FailedPreconditionError(absl::StrCat(
        "stored objective ", plan.cost.objective, " differs from recomputed ",
        fresh.objective));
  }
  return absl::OkStatus();
}

absl::StatusOr<AssignmentPlan> SolveAssignment(const CostModel& model) {
  if (model.num_devices() == 0 || model.num_modules() == 0) {
    return absl::InvalidArgumentError("empty cost model");
  }
  RETURN_IF_ERROR(CheckAggregateFeasibility(model));
  return ContiguousSearch(model).Run();
}

absl::StatusOr<AssignmentPlan> BaselineAssignment(const CostModel& model) {
  const size_t m = model.num_devices();
  const size_t n = model.num_modules();
  if (n < m) {
    return absl::InvalidArgumentError(absl::StrCat(
        "baseline needs at least one sub-module per device (n=", n, ", m=", m,
        ")"));
  }
  std::vector<DeviceId> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> split(m + 1, 0);
  for (size_t i = 0; i < m; ++i) {
    const size_t share = n / m + (i < n % m ? 1 : 0);
    split[i + 1] = split[i] + static_cast<int>(share);
  }
  auto plan = MakeContiguousPlan(model, std::move(order), std::move(split));
  if (!plan.ok()) {
    return absl::Status(
        plan.status().code(),
        absl::StrCat("baseline assignment is infeasible: ",
                     plan.status().message()));
  }
  return plan;
}

absl::StatusOr<AssignmentPlan> BruteForceAssignment(
    const CostModel& model, const BruteForceLimits& limits) {
  const size_t m = model.num_devices();
  const size_t n = model.num_modules();
  if (static_cast<int>(m) > limits.max_devices ||
      static_cast<int>(n) > limits.max_modules ||
      (!limits.contiguous &&
       static_cast<int>(n) > limits.max_modules_unrestricted)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "brute force refused: m=", m, ", n=", n, " exceeds limits (m<=",
        limits.max_devices, ", n<=",
        limits.contiguous ? limits.max_modules
                          : limits.max_modules_unrestricted,
        ")"));
  }
  if (m == 0 || n == 0) return absl::InvalidArgumentError("empty cost model");
  RETURN_IF_ERROR(CheckAggregateFeasibility(model));

  std::optional<AssignmentPlan> best;
  if (limits.contiguous) {
    std::vector<DeviceId> order(m);
    std::iota(order.begin(), order.end(), 0);
    do {
      std::vector<int> split(m + 1, 0);
      ForEachSplit(m, static_cast<int>(n), split, 0,
                   [&](const std::vector<int>& s) {
                     auto plan = MakeContiguousPlan(model, order, s);
                     if (!plan.ok()) return;
                     if (!best || plan->cost.objective < best->cost.objective) {
                       best = *std::move(plan);
                     }
                   });
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    std::vector<DeviceId> owner(n, 0);
    while (true) {
      Assignment x(m, n, 0);
      for (size_t j = 0; j < n; ++j) x(owner[j], j) = 1;
      auto cost = EvaluateCost(x, model);
      if (cost.ok() && (!best || cost->objective < best->cost.objective)) {
        AssignmentPlan plan;
        plan.x = std::move(x);
        plan.cost = *cost;
        for (DeviceId d : owner) {
          if (std::find(plan.device_order.begin(), plan.device_order.end(),
                        d) == plan.device_order.end()) {
            plan.device_order.push_back(d);
          }
        }
        for (size_t i = 0; i < m; ++i) {
          if (std::find(plan.device_order.begin(), plan.device_order.end(),
                        static_cast<DeviceId>(i)) == plan.device_order.end()) {
            plan.device_order.push_back(static_cast<DeviceId>(i));
          }
        }
        best = std::move(plan);
      }
      size_t k = n;
      while (k > 0 && owner[k - 1] == static_cast<DeviceId>(m - 1)) {
        owner[--k] = 0;
      }
      if (k == 0) break;
      ++owner[k - 1];
    }
  }
  if (!best) return NoFeasiblePlanError();
  return *std::move(best);
}

}  // namespace pipelink
