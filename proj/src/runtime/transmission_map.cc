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

#include "pipelink/runtime/transmission_map.h"

#include <algorithm>
#include <set>

#include "absl/strings/str_cat.h"

namespace pipelink {

absl::StatusOr<ModuleDag> BuildModuleDag(
    const PartitionPlan& partition,
    const std::vector<SubModuleProfile>& profiles, int64_t return_bytes) {
  const size_t n = partition.size();
  if (profiles.size() != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "partition has ", n, " subgraphs but ", profiles.size(),
        " profiles were given"));
  }
  std::set<std::pair<int, int>> pairs;
  for (const SequentialDep& d : partition.sdm) {
    pairs.emplace(d.producer.subgraph, d.consumer.subgraph);
  }
  for (const ResidualDep& d : partition.rdm) {
    pairs.emplace(d.producer.subgraph, d.consumer.subgraph);
  }
  ModuleDag dag;
  dag.return_bytes = return_bytes;
  dag.inputs.resize(n);
  for (const SubModuleProfile& p : profiles) {
    dag.flops.push_back(p.flops);
    dag.mem.push_back(p.mem_bytes);
  }
  for (const auto& [src, dst] : pairs) {
    const auto it = profiles[src].out_to.find(dst);
    const int64_t bytes = it == profiles[src].out_to.end() ? 0 : it->second;
    dag.inputs[dst].push_back({src, bytes});
  }
  if (absl::Status st = ValidateModuleDag(dag); !st.ok()) return st;
  return dag;
}

absl::Status ValidateModuleDag(const ModuleDag& dag) {
  const size_t n = dag.size();
  if (n == 0) return absl::InvalidArgumentError("module dag is empty");
  if (dag.mem.size() != n || dag.inputs.size() != n) {
    return absl::InvalidArgumentError("module dag vectors disagree in length");
  }
  if (n > 0xFFFF) {
    return absl::InvalidArgumentError(
        absl::StrCat(n, " modules exceed the wire format's 16-bit ids"));
  }
  for (size_t j = 0; j < n; ++j) {
    if (dag.flops[j] < 0 || dag.mem[j] < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("module ", j, " has a negative profile"));
    }
    int prev = -1;
    for (const ModuleInput& in : dag.inputs[j]) {
      if (in.src <= prev || in.src >= static_cast<int>(j) || in.bytes < 0 ||
          in.bytes > 0xFFFFFFFFLL) {
        return absl::InvalidArgumentError(absl::StrCat(
            "module ", j, " has an invalid input from module ", in.src));
      }
      prev = in.src;
    }
  }
  if (dag.return_bytes < 0 || dag.return_bytes > 0xFFFFFFFFLL) {
    return absl::InvalidArgumentError("return bytes out of range");
  }
  return absl::OkStatus();
}

std::string_view ResidualModeName(ResidualMode mode) {
  return mode == ResidualMode::kPiggyback ? "piggyback" : "residual";
}

absl::StatusOr<ResidualMode> ParseResidualMode(std::string_view name) {
  if (name == "piggyback") return ResidualMode::kPiggyback;
  if (name == "residual") return ResidualMode::kDirect;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown mode '", std::string(name), "' (expected piggyback or residual)"));
}

absl::StatusOr<TransmissionMap> BuildTransmissionMaps(
    const ModuleDag& dag, const std::vector<DeviceId>& device_order,
    const std::vector<DeviceId>& active, const FleetProfile& fleet,
    ResidualMode mode) {
  const size_t n = dag.size();
  const size_t m = fleet.size();
  if (active.size() != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "active map covers ", active.size(), " modules, dag has ", n));
  }
  TransmissionMap map;
  map.mode = mode;
  map.device_of = active;
  map.devices.resize(m);
  for (size_t i = 0; i < m; ++i) {
    map.devices[i].device = static_cast<DeviceId>(i);
    map.devices[i].modules = {0, -1};
  }
  for (size_t j = 0; j < n; ++j) {
    const DeviceId d = active[j];
    if (d < 0 || static_cast<size_t>(d) >= m) {
      return absl::InvalidArgumentError(
          absl::StrCat("module ", j, " is mapped to unknown device ", d));
    }
    ModuleRange& r = map.devices[d].modules;
    if (r.empty()) {
      r = {static_cast<int>(j), static_cast<int>(j)};
    } else if (r.last + 1 == static_cast<int>(j)) {
      r.last = static_cast<int>(j);
    } else {
      return absl::InvalidArgumentError(absl::StrCat(
          "device ", d, " executes a non-contiguous module set"));
    }
  }
  for (DeviceId d : device_order) {
    if (d < 0 || static_cast<size_t>(d) >= m) {
      return absl::InvalidArgumentError(
          absl::StrCat("ring order names unknown device ", d));
    }
    if (!map.devices[d].modules.empty()) map.ring.push_back(d);
  }
  for (size_t q = 0; q < map.ring.size(); ++q) {
    DeviceTransmission& t = map.devices[map.ring[q]];
    t.position = static_cast<int>(q);
    const int expected_first =
        q == 0 ? 0 : map.devices[map.ring[q - 1]].modules.last + 1;
    if (t.modules.first != expected_first) {
      return absl::InvalidArgumentError(absl::StrCat(
          "active ranges do not follow ring order at device ", t.device));
    }
    if (q + 1 < map.ring.size()) {
      t.sequential_target = map.ring[q + 1];
    } else {
      t.return_target = map.ring.front();
    }
  }
  if (map.ring.empty() ||
      map.devices[map.ring.back()].modules.last != static_cast<int>(n) - 1) {
    return absl::InvalidArgumentError("ring does not cover every module");
  }

  for (size_t k = 0; k < n; ++k) {
    for (const ModuleInput& in : dag.inputs[k]) {
      const SegmentRoute route{in.src, static_cast<int>(k), active[in.src],
                               active[k], in.bytes};
      if (route.from == route.to) {
        map.devices[route.from].local.push_back(route);
        continue;
      }
      map.devices[route.to].inputs.push_back(route);
      if (route.sequential()) {
        map.devices[route.from].activation.push_back(route);
      } else if (mode == ResidualMode::kDirect) {
        map.devices[route.from].residual_routes.push_back(route);
      } else {
        for (int q = map.devices[route.from].position;
             q < map.devices[route.to].position; ++q) {
          map.devices[map.ring[q]].piggyback.push_back(route);
        }
      }
    }
  }

  for (DeviceTransmission& t : map.devices) {
    std::vector<DeviceId> targets;
    for (const SegmentRoute& r : t.residual_routes) {
      if (std::find(targets.begin(), targets.end(), r.to) == targets.end()) {
        targets.push_back(r.to);
        map.devices[r.to].residual_sources.push_back(t.device);
      }
    }
    const DeviceId from = t.device;
    std::stable_sort(targets.begin(), targets.end(),
                     [&](DeviceId a, DeviceId b) {
                       const double la = fleet.latency(from, a);
                       const double lb = fleet.latency(from, b);
                       return la != lb ? la < lb : a < b;
                     });
    t.send_order = std::move(targets);
  }
  for (DeviceTransmission& t : map.devices) {
    std::sort(t.residual_sources.begin(), t.residual_sources.end());
  }
  return map;
}

}  // namespace pipelink
