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

#include "pipelink/assign/cost_model.h"

#include "absl/strings/str_cat.h"
#include "pipelink/common/status_macros.h"

namespace pipelink {

absl::StatusOr<CostModel> BuildCostModel(
    const std::vector<SubModuleProfile>& modules, int64_t return_bytes,
    const FleetProfile& fleet, double beta) {
  RETURN_IF_ERROR(ValidateFleet(fleet));
  if (modules.empty()) return absl::InvalidArgumentError("no sub-modules");
  if (!(beta > 0 && beta <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must be in (0, 1], got ", beta));
  }
  CostModel model;
  const size_t n = modules.size();
  for (size_t j = 0; j < n; ++j) {
    if (modules[j].index != static_cast<int>(j)) {
      return absl::InvalidArgumentError(
          absl::StrCat("sub-module profiles out of order at ", j));
    }
    model.module_flops.push_back(modules[j].flops);
    model.module_mem.push_back(modules[j].mem_bytes);
  }
  model.o_m2m = ModuleOutputMatrix(modules);
  model.return_bytes = return_bytes;
  model.beta = beta;
  return WithFleet(model, fleet);
}

CostModel WithFleet(const CostModel& model, const FleetProfile& fleet) {
  CostModel out = model;
  const size_t m = fleet.size();
  const size_t n = model.module_flops.size();
  out.exec_time = Matrix<double>(m, n, 0);
  out.mem_avail.assign(m, 0);
  for (size_t i = 0; i < m; ++i) {
    out.mem_avail[i] = fleet.devices[i].mem_avail_bytes;
    for (size_t j = 0; j < n; ++j) {
      out.exec_time(i, j) = static_cast<double>(model.module_flops[j]) /
                            fleet.devices[i].flops_per_sec;
    }
  }
  out.latency = fleet.latency;
  out.bandwidth = fleet.bandwidth;
  return out;
}

Matrix<int64_t> DeviceTraffic(const Assignment& x,
                              const Matrix<int64_t>& o_m2m) {
  const size_t m = x.rows();
  const size_t n = x.cols();
  // Y = X * O  (m x n), then Y * X^T.
  Matrix<int64_t> y(m, n, 0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t k = 0; k < n; ++k) {
      if (!x(i, k)) continue;
      for (size_t l = 0; l < n; ++l) y(i, l) += o_m2m(k, l);
    }
  }
  Matrix<int64_t> out(m, m, 0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) {
      int64_t sum = 0;
      for (size_t l = 0; l < n; ++l) {
        if (x(j, l)) sum += y(i, l);
      }
      out(i, j) = sum;
    }
  }
  return out;
}

absl::Status CheckColumns(const Assignment& x) {
  for (size_t j = 0; j < x.cols(); ++j) {
    int count = 0;
    for (size_t i = 0; i < x.rows(); ++i) count += x(i, j) ? 1 : 0;
    if (count != 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "sub-module ", j, " is placed on ", count, " devices, expected 1"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckMemory(const Assignment& x, const CostModel& model) {
  for (size_t i = 0; i < x.rows(); ++i) {
    int64_t used = 0;
    for (size_t j = 0; j < x.cols(); ++j) {
      if (x(i, j)) used += model.module_mem[j];
    }
    if (static_cast<double>(used) > model.MemoryBudget(i)) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "device ", i, " needs ", used, " bytes but its budget is ",
          model.MemoryBudget(i), " (beta ", model.beta, " x ",
          model.mem_avail[i], ")"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<CostBreakdown> EvaluateCost(const Assignment& x,
                                           const CostModel& model) {
  const size_t m = model.num_devices();
  const size_t n = model.num_modules();
  if (x.rows() != m || x.cols() != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "assignment is ", x.rows(), "x", x.cols(), ", model is ", m, "x", n));
  }
  RETURN_IF_ERROR(CheckColumns(x));
  RETURN_IF_ERROR(CheckMemory(x, model));

  CostBreakdown cost;
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (x(i, j)) cost.t_compute += model.exec_time(i, j);
    }
  }
  Matrix<int64_t> traffic = DeviceTraffic(x, model.o_m2m);
  size_t first_dev = 0;
  size_t last_dev = 0;
  for (size_t i = 0; i < m; ++i) {
    if (x(i, 0)) first_dev = i;
    if (x(i, n - 1)) last_dev = i;
  }
  if (last_dev != first_dev) traffic(last_dev, first_dev) += model.return_bytes;
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) {
      if (i == j || traffic(i, j) <= 0) continue;
      cost.t_data += model.latency(i, j) +
                     static_cast<double>(traffic(i, j)) / model.bandwidth(i, j);
    }
  }
  cost.objective = cost.t_compute + cost.t_data;
  return cost;
}

}  // namespace pipelink
