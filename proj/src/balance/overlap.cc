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

#include "pipelink/balance/overlap.h"

#include <algorithm>
#include <limits>

#include "absl/strings/str_cat.h"

namespace pipelink {
namespace {

constexpr int64_t kUnreachable = std::numeric_limits<int64_t>::min();

bool Fits(const CostModel& model, DeviceId d, int64_t bytes) {
  return static_cast<double>(bytes) <= model.MemoryBudget(d);
}

int64_t RangeBytes(const std::vector<int64_t>& mem, int first, int last) {
  int64_t total = 0;
  for (int j = first; j <= last; ++j) total += mem[j];
  return total;
}

}  // namespace

Assignment OverlapPlan::Hosted() const {
  Assignment h = x;
  for (size_t i = 0; i < h.rows(); ++i) {
    for (size_t j = 0; j < h.cols(); ++j) h(i, j) |= x_l(i, j) | x_r(i, j);
  }
  return h;
}

std::vector<DeviceId> OverlapPlan::Hosts(int module) const {
  std::vector<DeviceId> hosts;
  for (size_t i = 0; i < num_devices(); ++i) {
    if (x(i, module) || x_l(i, module) || x_r(i, module)) {
      hosts.push_back(static_cast<DeviceId>(i));
    }
  }
  return hosts;
}

bool OverlapPlan::IsMovable(int module) const {
  return std::binary_search(movable.begin(), movable.end(), module);
}

std::vector<DeviceId> OverlapPlan::RingDevices() const {
  std::vector<DeviceId> ring;
  for (DeviceId d : device_order) {
    if (!base[d].empty()) ring.push_back(d);
  }
  return ring;
}

OverlapPlan BaseOverlap(const AssignmentPlan& plan) {
  const size_t m = plan.num_devices();
  const size_t n = plan.num_modules();
  OverlapPlan out;
  out.x = plan.x;
  out.x_l = Assignment(m, n, 0);
  out.x_r = Assignment(m, n, 0);
  out.device_order = plan.device_order;
  out.left_extension.assign(m, 0);
  out.right_extension.assign(m, 0);
  for (size_t i = 0; i < m; ++i) {
    out.base.push_back(plan.range(static_cast<DeviceId>(i)));
  }
  out.active.resize(n);
  for (size_t j = 0; j < n; ++j) out.active[j] = plan.device_of(static_cast<int>(j));
  return out;
}

OverlapPlan SolveOverlap(const AssignmentPlan& plan, const CostModel& model) {
  OverlapPlan out = BaseOverlap(plan);
  const std::vector<DeviceId> ring = out.RingDevices();
  const int k = static_cast<int>(ring.size());
  if (k < 2) return out;

  const std::vector<int64_t>& mem = model.module_mem;
  std::vector<int> size(k);
  std::vector<int64_t> base_bytes(k);
  for (int q = 0; q < k; ++q) {
    const ModuleRange r = out.base[ring[q]];
    size[q] = r.size();
    base_bytes[q] = RangeBytes(mem, r.first, r.last);
  }
  // Bytes of the last `len` modules of ring position q, and of its first
  // `len` modules.
  auto tail_bytes = [&](int q, int len) {
    const ModuleRange r = out.base[ring[q]];
    return RangeBytes(mem, r.last - len + 1, r.last);
  };
  auto head_bytes = [&](int q, int len) {
    const ModuleRange r = out.base[ring[q]];
    return RangeBytes(mem, r.first, r.first + len - 1);
  };
  auto max_left = [&](int q) { return q == 0 ? 0 : size[q - 1]; };
  auto max_right = [&](int q) { return q == k - 1 ? 0 : size[q + 1]; };

  // value[q][a][b]: best extension bytes over positions 0..q with
  // r_{q-1} = a and r_q = b. parent stores (r_{q-2}, l_q).
  struct Cell {
    int64_t value = kUnreachable;
    int prev_right = 0;
    int left = 0;
  };
  std::vector<std::vector<std::vector<Cell>>> dp(k);
  for (int q = 0; q < k; ++q) {
    const int a_dim = (q == 0 ? 0 : max_right(q - 1)) + 1;
    dp[q].assign(a_dim, std::vector<Cell>(max_right(q) + 1));
  }
  const DeviceId d0 = ring[0];
  for (int r = 0; r <= max_right(0); ++r) {
    const int64_t ext = head_bytes(1, r);
    if (Fits(model, d0, base_bytes[0] + ext)) dp[0][0][r] = {ext, 0, 0};
  }
  for (int q = 1; q < k; ++q) {
    const DeviceId d = ring[q];
    for (int a = 0; a < static_cast<int>(dp[q - 1].size()); ++a) {
      for (int b = 0; b < static_cast<int>(dp[q - 1][a].size()); ++b) {
        const Cell& prev = dp[q - 1][a][b];
        if (prev.value == kUnreachable) continue;
        // r_{q-2} = a extends into position q-1 from the left neighbour;
        // together with l_q it may not exceed that range.
        const int left_cap = std::min(max_left(q), size[q - 1] - a);
        for (int l = 0; l <= left_cap; ++l) {
          const int64_t left_bytes = tail_bytes(q - 1, l);
          for (int r = 0; r <= max_right(q); ++r) {
            const int64_t right_bytes = q + 1 < k ? head_bytes(q + 1, r) : 0;
            if (!Fits(model, d, base_bytes[q] + left_bytes + right_bytes)) {
              break;
            }
            const int64_t value = prev.value + left_bytes + right_bytes;
            Cell& cell = dp[q][b][r];
            if (value > cell.value) cell = {value, a, l};
          }
        }
      }
    }
  }
  // Pick the best terminal state and walk the parents back.
  int best_a = 0;
  int64_t best = kUnreachable;
  for (int a = 0; a < static_cast<int>(dp[k - 1].size()); ++a) {
    if (dp[k - 1][a][0].value > best) {
      best = dp[k - 1][a][0].value;
      best_a = a;
    }
  }
  std::vector<int> left(k, 0), right(k, 0);
  int a = best_a, b = 0;
  for (int q = k - 1; q >= 0; --q) {
    const Cell& cell = dp[q][a][b];
    right[q] = b;
    left[q] = cell.left;
    b = a;
    a = cell.prev_right;
  }
  for (int q = 0; q < k; ++q) {
    const DeviceId d = ring[q];
    out.left_extension[d] = left[q];
    out.right_extension[d] = right[q];
    const ModuleRange r = out.base[d];
    for (int j = r.first - left[q]; j < r.first; ++j) out.x_l(d, j) = 1;
    for (int j = r.last + 1; j <= r.last + right[q]; ++j) out.x_r(d, j) = 1;
  }
  for (size_t j = 0; j < out.num_modules(); ++j) {
    if (out.Hosts(static_cast<int>(j)).size() == 2) {
      out.movable.push_back(static_cast<int>(j));
    }
  }
  return out;
}

int64_t OverlapObjective(const OverlapPlan& overlap,
                         const std::vector<int64_t>& module_mem) {
  int64_t total = 0;
  for (size_t i = 0; i < overlap.num_devices(); ++i) {
    for (size_t j = 0; j < overlap.num_modules(); ++j) {
      const int with_left = overlap.x_l(i, j) | overlap.x(i, j);
      const int with_right = overlap.x_r(i, j) | overlap.x(i, j);
      total += module_mem[j] * (with_left + with_right);
    }
  }
  return total;
}

int64_t OverlapBytes(const OverlapPlan& overlap,
                     const std::vector<int64_t>& module_mem) {
  int64_t total = 0;
  for (size_t i = 0; i < overlap.num_devices(); ++i) {
    for (size_t j = 0; j < overlap.num_modules(); ++j) {
      total += module_mem[j] * (overlap.x_l(i, j) + overlap.x_r(i, j));
    }
  }
  return total;
}

Assignment ActiveAssignment(const OverlapPlan& overlap,
                            const std::vector<DeviceId>& active) {
  Assignment x(overlap.num_devices(), overlap.num_modules(), 0);
  for (size_t j = 0; j < active.size(); ++j) x(active[j], j) = 1;
  return x;
}

absl::Status ValidateOverlap(const OverlapPlan& overlap,
                             const CostModel& model) {
  const size_t m = overlap.num_devices();
  const size_t n = overlap.num_modules();
  if (overlap.x_l.rows() != m || overlap.x_l.cols() != n ||
      overlap.x_r.rows() != m || overlap.x_r.cols() != n ||
      overlap.active.size() != n) {
    return absl::InvalidArgumentError("overlap matrices have the wrong shape");
  }
  const std::vector<DeviceId> ring = overlap.RingDevices();
  for (size_t q = 0; q < ring.size(); ++q) {
    const DeviceId d = ring[q];
    const ModuleRange r = overlap.base[d];
    for (size_t j = 0; j < n; ++j) {
      const int jj = static_cast<int>(j);
      const bool want_l = jj < r.first && jj >= r.first - overlap.left_extension[d];
      const bool want_r = jj > r.last && jj <= r.last + overlap.right_extension[d];
      if (overlap.x_l(d, j) != want_l || overlap.x_r(d, j) != want_r) {
        return absl::FailedPreconditionError(absl::StrCat(
            "device ", d, " overlap does not extend its range without gaps"));
      }
    }
    if ((q == 0 && overlap.left_extension[d] > 0) ||
        (q + 1 == ring.size() && overlap.right_extension[d] > 0)) {
      return absl::FailedPreconditionError(
          absl::StrCat("device ", d, " extends past the end of the ring"));
    }
    if (q > 0 && overlap.left_extension[d] > overlap.base[ring[q - 1]].size()) {
      return absl::FailedPreconditionError(absl::StrCat(
          "device ", d, " left overlap exceeds its neighbour's range"));
    }
    if (q + 1 < ring.size() &&
        overlap.right_extension[d] > overlap.base[ring[q + 1]].size()) {
      return absl::FailedPreconditionError(absl::StrCat(
          "device ", d, " right overlap exceeds its neighbour's range"));
    }
  }
  const Assignment hosted = overlap.Hosted();
  for (size_t i = 0; i < m; ++i) {
    int64_t bytes = 0;
    for (size_t j = 0; j < n; ++j) bytes += hosted(i, j) * model.module_mem[j];
    if (!Fits(model, static_cast<DeviceId>(i), bytes)) {
      return absl::ResourceExhaustedError(absl::StrCat(
          "device ", i, " hosts ", bytes, " bytes including overlaps, budget ",
          model.MemoryBudget(i)));
    }
  }
  for (size_t j = 0; j < n; ++j) {
    int hosts = 0;
    for (size_t i = 0; i < m; ++i) hosts += hosted(i, j);
    if (hosts < 1 || hosts > 2) {
      return absl::FailedPreconditionError(absl::StrCat(
          "module ", j, " is hosted by ", hosts, " devices"));
    }
    const DeviceId a = overlap.active[j];
    if (a < 0 || static_cast<size_t>(a) >= m || !hosted(a, j)) {
      return absl::FailedPreconditionError(absl::StrCat(
          "module ", j, " is active on device ", a, " which does not host it"));
    }
  }
  // Active ranges must follow ring order.
  std::vector<int> position(m, -1);
  for (size_t q = 0; q < ring.size(); ++q) position[ring[q]] = static_cast<int>(q);
  for (size_t j = 1; j < n; ++j) {
    if (position[overlap.active[j]] < position[overlap.active[j - 1]]) {
      return absl::FailedPreconditionError(absl::StrCat(
          "active ranges break ring order at module ", j));
    }
  }
  return absl::OkStatus();
}

std::string SerializeOverlap(const OverlapPlan& overlap,
                             const std::vector<int64_t>& module_mem) {
  std::string out = absl::StrCat("overlap v1 ", overlap.num_devices(), " ",
                                 overlap.num_modules(), " ",
                                 OverlapBytes(overlap, module_mem), "\n");
  for (DeviceId d : overlap.device_order) {
    const ModuleRange r = overlap.base[d];
    if (r.empty()) {
      absl::StrAppend(&out, "device ", d, " base none\n");
      continue;
    }
    absl::StrAppend(&out, "device ", d, " base ", r.first, " ", r.last,
                    " left ", overlap.left_extension[d], " right ",
                    overlap.right_extension[d], "\n");
  }
  absl::StrAppend(&out, "movable");
  for (int j : overlap.movable) absl::StrAppend(&out, " ", j);
  out += "\n";
  return out;
}

}  // namespace pipelink
