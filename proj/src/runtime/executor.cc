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

#include "pipelink/runtime/executor.h"

#include <algorithm>

#include "absl/strings/str_cat.h"
#include "pipelink/common/digest.h"

namespace pipelink {

uint64_t FirstTokenInput(uint32_t sample, int context_len) {
  return CombineDigest(Mix64(0x746f6b656eULL ^ sample),
                       static_cast<uint64_t>(context_len));
}

uint64_t NextTokenInput(uint64_t logits_digest) {
  return Mix64(logits_digest ^ 0x6e657874ULL);
}

uint64_t ModuleOutputDigest(int module, std::span<const uint64_t> inputs) {
  uint64_t acc = Mix64(0x6d6f64ULL + static_cast<uint64_t>(module));
  for (uint64_t in : inputs) acc = CombineDigest(acc, in);
  return acc;
}

uint64_t LogitsDigest(uint64_t last_module_output) {
  return Mix64(last_module_output ^ 0x6c6f67697473ULL);
}

uint64_t FoldSampleDigest(uint64_t acc, uint64_t logits_digest) {
  return CombineDigest(acc, logits_digest);
}

std::vector<uint64_t> ReferenceSampleDigests(const ModuleDag& dag,
                                             const Workload& workload) {
  const size_t n = dag.size();
  std::vector<uint64_t> out;
  std::vector<uint64_t> value(n);
  for (int s = 0; s < workload.samples; ++s) {
    uint64_t sample_digest = kSampleDigestSeed;
    uint64_t token_input = FirstTokenInput(static_cast<uint32_t>(s),
                                           workload.context_len);
    for (int t = 0; t < workload.tokens; ++t) {
      for (size_t j = 0; j < n; ++j) {
        std::vector<uint64_t> inputs;
        if (j == 0) inputs.push_back(token_input);
        for (const ModuleInput& in : dag.inputs[j]) inputs.push_back(value[in.src]);
        value[j] = ModuleOutputDigest(static_cast<int>(j), inputs);
      }
      const uint64_t logits = LogitsDigest(value[n - 1]);
      sample_digest = FoldSampleDigest(sample_digest, logits);
      token_input = NextTokenInput(logits);
    }
    out.push_back(sample_digest);
  }
  return out;
}

ComputeEngine::Slot ComputeEngine::Occupy(double sim_seconds) {
  Slot slot;
  {
    std::lock_guard<std::mutex> lock(mu_);
    slot.start = std::max(SteadyClock::now(), busy_until_);
    slot.end = slot.start + FromSeconds(sim_seconds * time_scale_);
    busy_until_ = slot.end;
  }
  SleepUntil(slot.end);
  // An oversleep extends the slot; later reservations already queue behind
  // busy_until_, which is at most this late.
  slot.end = std::max(slot.end, SteadyClock::now());
  return slot;
}

absl::StatusOr<ExecuteResult> SyntheticExecute(
    int module, int64_t flops, double multiplier,
    std::span<const uint64_t> inputs, ComputeEngine& engine,
    const ResidentSetAgent& residency) {
  if (!residency.resident(module)) {
    return absl::InternalError(absl::StrCat(
        "sub-module ", module, " is not resident on device ", residency.id()));
  }
  const double seconds =
      static_cast<double>(flops) * multiplier / engine.flops_per_sec();
  ExecuteResult result;
  result.slot = engine.Occupy(seconds);
  result.busy_sec =
      SecondsBetween(result.slot.start, result.slot.end) / engine.time_scale();
  result.output_digest = ModuleOutputDigest(module, inputs);
  return result;
}

}  // namespace pipelink
