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

#include "pipelink/monitor/fleet.h"

#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/common/text_format.h"

namespace pipelink {

absl::Status ValidateFleet(const FleetProfile& fleet) {
  const size_t m = fleet.size();
  if (m == 0) return absl::InvalidArgumentError("fleet has no devices");
  for (size_t i = 0; i < m; ++i) {
    const DeviceProfile& d = fleet.devices[i];
    if (d.id != static_cast<DeviceId>(i)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "device ids must be dense 0..", m - 1, "; slot ", i, " has id ",
          d.id));
    }
    if (!(d.flops_per_sec > 0) || !std::isfinite(d.flops_per_sec)) {
      return absl::InvalidArgumentError(
          absl::StrCat("device ", i, ": flops_per_sec must be > 0"));
    }
    if (d.mem_total_bytes < 0 || d.mem_avail_bytes < 0 ||
        d.mem_avail_bytes > d.mem_total_bytes) {
      return absl::InvalidArgumentError(absl::StrCat(
          "device ", i, ": requires 0 <= mem_avail <= mem_total"));
    }
  }
  if (fleet.bandwidth.rows() != m || fleet.bandwidth.cols() != m ||
      fleet.latency.rows() != m || fleet.latency.cols() != m) {
    return absl::InvalidArgumentError(
        absl::StrCat("link matrices must be ", m, "x", m));
  }
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) {
      const double bw = fleet.bandwidth(i, j);
      const double lat = fleet.latency(i, j);
      if (i == j) {
        if (bw != 0 || lat != 0) {
          return absl::InvalidArgumentError(
              absl::StrCat("link ", i, "->", i, ": diagonal must be zero"));
        }
        continue;
      }
      if (!(bw > 0) || !std::isfinite(bw)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "link ", i, "->", j, ": bandwidth must be a finite value > 0"));
      }
      if (!(lat >= 0) || !std::isfinite(lat)) {
        return absl::InvalidArgumentError(
            absl::StrCat("link ", i, "->", j, ": latency must be >= 0"));
      }
    }
  }
  return absl::OkStatus();
}

std::string SerializeFleet(const FleetProfile& fleet) {
  std::string out = absl::StrCat("fleet v1 ", fleet.size(), "\n");
  for (const DeviceProfile& d : fleet.devices) {
    absl::StrAppend(&out, "device ", d.id, " ", FormatDouble(d.flops_per_sec),
                    " ", d.mem_total_bytes, " ", d.mem_avail_bytes, "\n");
  }
  for (size_t i = 0; i < fleet.size(); ++i) {
    for (size_t j = 0; j < fleet.size(); ++j) {
      if (i == j) continue;
      absl::StrAppend(&out, "link ", i, " ", j, " ",
                      FormatDouble(fleet.bandwidth(i, j)), " ",
                      FormatDouble(fleet.latency(i, j)), "\n");
    }
  }
  return out;
}

absl::StatusOr<FleetProfile> ParseFleet(std::string_view text) {
  const std::vector<TextLine> lines = TokenizeLines(text);
  if (lines.empty() || lines[0].tokens[0] != "fleet") {
    return absl::InvalidArgumentError("line 1: expected header 'fleet v1 <m>'");
  }
  RETURN_IF_ERROR(ExpectTokens(lines[0], 3, "fleet"));
  if (lines[0].tokens[1] != "v1") {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", lines[0].number, ": unsupported fleet version '",
        lines[0].tokens[1], "'"));
  }
  ASSIGN_OR_RETURN(const int64_t m, ParseInt(lines[0], 2, "m"));
  if (m <= 0 || m > 4096) {
    return absl::InvalidArgumentError(
        absl::StrCat("line ", lines[0].number, ": field 'm' out of range"));
  }
  FleetProfile fleet;
  fleet.devices.resize(m);
  fleet.bandwidth = Matrix<double>(m, m, 0);
  fleet.latency = Matrix<double>(m, m, 0);
  std::vector<bool> seen_device(m, false);
  std::set<std::pair<int64_t, int64_t>> seen_link;

  for (size_t k = 1; k < lines.size(); ++k) {
    const TextLine& line = lines[k];
    const std::string& tag = line.tokens[0];
    if (tag == "device") {
      RETURN_IF_ERROR(ExpectTokens(line, 5, "device"));
      ASSIGN_OR_RETURN(const int64_t id, ParseInt(line, 1, "id"));
      if (id < 0 || id >= m) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": field 'id' out of range: ", id));
      }
      if (seen_device[id]) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": duplicate device ", id));
      }
      seen_device[id] = true;
      DeviceProfile& d = fleet.devices[id];
      d.id = static_cast<DeviceId>(id);
      ASSIGN_OR_RETURN(d.flops_per_sec, ParseDouble(line, 2, "flops_per_sec"));
      ASSIGN_OR_RETURN(d.mem_total_bytes, ParseInt(line, 3, "mem_total"));
      ASSIGN_OR_RETURN(d.mem_avail_bytes, ParseInt(line, 4, "mem_avail"));
      if (!(d.flops_per_sec > 0)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": field 'flops_per_sec' must be > 0"));
      }
      if (d.mem_total_bytes < 0 || d.mem_avail_bytes < 0 ||
          d.mem_avail_bytes > d.mem_total_bytes) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line.number,
                         ": fields 'mem_total'/'mem_avail' require "
                         "0 <= mem_avail <= mem_total"));
      }
    } else if (tag == "link") {
      RETURN_IF_ERROR(ExpectTokens(line, 5, "link"));
      ASSIGN_OR_RETURN(const int64_t i, ParseInt(line, 1, "i"));
      ASSIGN_OR_RETURN(const int64_t j, ParseInt(line, 2, "j"));
      if (i < 0 || i >= m || j < 0 || j >= m || i == j) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": link ", i, "->", j, " is not a pair of "
            "distinct devices"));
      }
      if (!seen_link.insert({i, j}).second) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": duplicate link ", i, "->", j));
      }
      ASSIGN_OR_RETURN(const double bw, ParseDouble(line, 3, "bandwidth_Bps"));
      ASSIGN_OR_RETURN(const double lat, ParseDouble(line, 4, "latency_sec"));
      if (!(bw > 0)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": field 'bandwidth_Bps' must be > 0"));
      }
      if (!(lat >= 0)) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", line.number, ": field 'latency_sec' must be >= 0"));
      }
      fleet.bandwidth(i, j) = bw;
      fleet.latency(i, j) = lat;
    } else {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line.number, ": unknown record '", tag, "'"));
    }
  }
  for (int64_t i = 0; i < m; ++i) {
    if (!seen_device[i]) {
      return absl::InvalidArgumentError(
          absl::StrCat("device ", i, " is not declared"));
    }
    for (int64_t j = 0; j < m; ++j) {
      if (i != j && !seen_link.count({i, j})) {
        return absl::InvalidArgumentError(
            absl::StrCat("link ", i, "->", j, " is not declared"));
      }
    }
  }
  RETURN_IF_ERROR(ValidateFleet(fleet));
  return fleet;
}

absl::StatusOr<FleetProfile> LoadFleet(const std::string& path) {
  ASSIGN_OR_RETURN(const std::string text, ReadFileToString(path));
  auto fleet = ParseFleet(text);
  if (!fleet.ok()) {
    return absl::Status(fleet.status().code(),
                        absl::StrCat(path, ": ", fleet.status().message()));
  }
  return fleet;
}

absl::Status SaveFleet(const FleetProfile& fleet, const std::string& path) {
  return WriteStringToFile(path, SerializeFleet(fleet));
}

FleetProfile UniformFleet(std::vector<DeviceProfile> devices,
                          double bandwidth_bps, double latency_sec) {
  FleetProfile fleet;
  const size_t m = devices.size();
  fleet.devices = std::move(devices);
  fleet.bandwidth = Matrix<double>(m, m, 0);
  fleet.latency = Matrix<double>(m, m, 0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      fleet.bandwidth(i, j) = bandwidth_bps;
      fleet.latency(i, j) = latency_sec;
    }
  }
  return fleet;
}

}  // namespace pipelink
