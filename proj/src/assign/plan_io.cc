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

#include "pipelink/assign/plan_io.h"

#include "absl/strings/str_cat.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/common/text_format.h"

namespace pipelink {

std::string SerializePlan(const AssignmentPlan& plan) {
  std::string out =
      absl::StrCat("plan v1 ", plan.num_devices(), " ", plan.num_modules(),
                   " ", FormatDouble(plan.cost.objective), "\norder");
  for (DeviceId d : plan.device_order) absl::StrAppend(&out, " ", d);
  out += "\n";
  for (DeviceId d : plan.device_order) {
    const ModuleRange r = plan.range(d);
    if (r.empty()) {
      absl::StrAppend(&out, "assign ", d, " none\n");
    } else {
      absl::StrAppend(&out, "assign ", d, " ", r.first, " ", r.last, "\n");
    }
  }
  return out;
}

absl::StatusOr<AssignmentPlan> ParsePlan(std::string_view text,
                                         const CostModel& model) {
  const std::vector<TextLine> lines = TokenizeLines(text);
  if (lines.empty()) return absl::InvalidArgumentError("empty plan");
  const TextLine& header = lines[0];
  if (header.tokens.size() != 5 || header.tokens[0] != "plan" ||
      header.tokens[1] != "v1") {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", header.number, ": expected 'plan v1 <m> <n> <objective>'"));
  }
  ASSIGN_OR_RETURN(const int64_t m, ParseInt(header, 2, "m"));
  ASSIGN_OR_RETURN(const int64_t n, ParseInt(header, 3, "n"));
  if (m != static_cast<int64_t>(model.num_devices()) ||
      n != static_cast<int64_t>(model.num_modules())) {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", header.number, ": plan is ", m, "x", n, " but model is ",
        model.num_devices(), "x", model.num_modules()));
  }
  if (lines.size() != static_cast<size_t>(m) + 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected 1 order line and ", m, " assign lines, got ",
        lines.size() - 1));
  }
  const TextLine& order_line = lines[1];
  if (order_line.tokens.size() != static_cast<size_t>(m) + 1 ||
      order_line.tokens[0] != "order") {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", order_line.number, ": expected 'order' with ", m, " ids"));
  }
  std::vector<DeviceId> order;
  for (size_t k = 1; k < order_line.tokens.size(); ++k) {
    ASSIGN_OR_RETURN(const int64_t d, ParseInt(order_line, k, "device"));
    order.push_back(static_cast<DeviceId>(d));
  }
  std::vector<int> split{0};
  for (size_t p = 0; p < static_cast<size_t>(m); ++p) {
    const TextLine& line = lines[p + 2];
    if (line.tokens.empty() || line.tokens[0] != "assign") {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line.number, ": expected 'assign'"));
    }
    ASSIGN_OR_RETURN(const int64_t d, ParseInt(line, 1, "device"));
    if (d != order[p]) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line.number, ": assign lines must follow ring order"));
    }
    if (line.tokens.size() == 3 && line.tokens[2] == "none") {
      split.push_back(split.back());
      continue;
    }
    RETURN_IF_ERROR(ExpectTokens(line, 4, "assign line"));
    ASSIGN_OR_RETURN(const int64_t first, ParseInt(line, 2, "first_module"));
    ASSIGN_OR_RETURN(const int64_t last, ParseInt(line, 3, "last_module"));
    if (first != split.back() || last < first) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line.number, ": range ", first, "..", last,
          " does not continue at module ", split.back()));
    }
    split.push_back(static_cast<int>(last) + 1);
  }
  return MakeContiguousPlan(model, std::move(order), std::move(split));
}

}  // namespace pipelink
