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

#ifndef PIPELINK_ASSIGN_COST_MODEL_H_
#define PIPELINK_ASSIGN_COST_MODEL_H_

#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "pipelink/common/matrix.h"
#include "pipelink/graph/partition.h"
#include "pipelink/monitor/fleet.h"

namespace pipelink {

inline constexpr double kDefaultBeta = 0.8;

// Boolean device x module placement matrix.
using Assignment = Matrix<uint8_t>;

// Coefficients of the placement objective for m devices and n sub-modules.
struct CostModel {
  Matrix<double> exec_time;           // m x n, seconds
  Matrix<int64_t> o_m2m;              // n x n, bytes, strictly upper triangular
  std::vector<int64_t> module_flops;  // n
  std::vector<int64_t> module_mem;    // n, bytes
  std::vector<int64_t> mem_avail;     // m, bytes
  Matrix<double> latency;             // m x m, seconds
  Matrix<double> bandwidth;           // m x m, bytes/sec
  // Bytes returned from the device holding the last sub-module to the device
  // holding the first one after every pass (the logits).
  int64_t return_bytes = 0;
  double beta = kDefaultBeta;

  size_t num_devices() const { return exec_time.rows(); }
  size_t num_modules() const { return exec_time.cols(); }
  double MemoryBudget(size_t device) const {
    return beta * static_cast<double>(mem_avail[device]);
  }
};

struct CostBreakdown {
  double t_compute = 0;
  double t_data = 0;
  double objective = 0;
};

// exec_time(i, j) = flops(module j) / flops_per_sec(device i).
absl::StatusOr<CostModel> BuildCostModel(
    const std::vector<SubModuleProfile>& modules, int64_t return_bytes,
    const FleetProfile& fleet, double beta = kDefaultBeta);

// Same modules, coefficients recomputed from `fleet` (speeds, memory, links).
CostModel WithFleet(const CostModel& model, const FleetProfile& fleet);

// X * O_m2m * X^T.
Matrix<int64_t> DeviceTraffic(const Assignment& x,
                              const Matrix<int64_t>& o_m2m);

// Column-sum check only.
absl::Status CheckColumns(const Assignment& x);
// Per-device memory check against beta * mem_avail; names the device.
absl::Status CheckMemory(const Assignment& x, const CostModel& model);

// T_compute = sum_ij E_ij x_ij. T_data charges L_ij + bytes_ij / B_ij once
// for every ordered device pair i != j whose aggregate traffic is positive,
// where traffic is X O Xᵀ plus the return of `return_bytes` from the device
// of the last module to the device of module 0.
absl::StatusOr<CostBreakdown> EvaluateCost(const Assignment& x,
                                           const CostModel& model);

}  // namespace pipelink

#endif  // PIPELINK_ASSIGN_COST_MODEL_H_
