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

#ifndef PIPELINK_RUNTIME_EXECUTOR_H_
#define PIPELINK_RUNTIME_EXECUTOR_H_

#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "pipelink/common/clock.h"
#include "pipelink/monitor/snapshot.h"
#include "pipelink/runtime/transmission_map.h"

namespace pipelink {

// Synthetic autoregressive workload.
struct Workload {
  int samples = 10;
  int context_len = 10;
  int tokens = 10;
  // Per-token compute multiplier is 1 + flops_growth_per_token * token.
  double flops_growth_per_token = 0;

  double FlopsMultiplier(int token) const {
    return 1.0 + flops_growth_per_token * token;
  }
  int64_t total_tokens() const {
    return static_cast<int64_t>(samples) * tokens;
  }
};

// Digest chain standing in for tensor values. A module's output digest
// depends on its index and on the digests of its inputs in producer order;
// module 0 consumes the token input first.
uint64_t FirstTokenInput(uint32_t sample, int context_len);
uint64_t NextTokenInput(uint64_t logits_digest);
uint64_t ModuleOutputDigest(int module, std::span<const uint64_t> inputs);
uint64_t LogitsDigest(uint64_t last_module_output);
uint64_t FoldSampleDigest(uint64_t acc, uint64_t logits_digest);
inline constexpr uint64_t kSampleDigestSeed = 0x706c6b5f73616d70ULL;

// Single-worker sequential execution of every sample; the correctness oracle
// for distributed runs.
std::vector<uint64_t> ReferenceSampleDigests(const ModuleDag& dag,
                                             const Workload& workload);

// A device's single simulated processor. Concurrent callers are serialized:
// each reservation starts when the previous one ends.
class ComputeEngine {
 public:
  ComputeEngine(double flops_per_sec, double time_scale)
      : flops_per_sec_(flops_per_sec), time_scale_(time_scale) {}

  struct Slot {
    TimePoint start;
    TimePoint end;
  };

  // Reserves `sim_seconds` of processor time and sleeps until it has passed.
  // Returns the slot actually occupied.
  Slot Occupy(double sim_seconds);

  double flops_per_sec() const { return flops_per_sec_; }
  double time_scale() const { return time_scale_; }

 private:
  const double flops_per_sec_;
  const double time_scale_;
  std::mutex mu_;
  TimePoint busy_until_{};
};

struct ExecuteResult {
  uint64_t output_digest = 0;
  double busy_sec = 0;  // simulated seconds, measured
  ComputeEngine::Slot slot;
};

// Runs `module` for flops * multiplier FLOPs on `engine`. Fails with Internal
// when the module is not resident on the executing device.
absl::StatusOr<ExecuteResult> SyntheticExecute(
    int module, int64_t flops, double multiplier,
    std::span<const uint64_t> inputs, ComputeEngine& engine,
    const ResidentSetAgent& residency);

}  // namespace pipelink

#endif  // PIPELINK_RUNTIME_EXECUTOR_H_
