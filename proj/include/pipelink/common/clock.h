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

#ifndef PIPELINK_COMMON_CLOCK_H_
#define PIPELINK_COMMON_CLOCK_H_

#include <chrono>

namespace pipelink {

using SteadyClock = std::chrono::steady_clock;
using TimePoint = SteadyClock::time_point;

inline double SecondsBetween(TimePoint from, TimePoint to) {
  return std::chrono::duration<double>(to - from).count();
}

inline SteadyClock::duration FromSeconds(double seconds) {
  return std::chrono::duration_cast<SteadyClock::duration>(
      std::chrono::duration<double>(seconds));
}

// Lowers the calling thread's timer slack so that timed sleeps wake close to
// their deadline. No-op where unsupported.
void TightenTimerSlack();

// Sleeps until `deadline` with tightened timer slack.
void SleepUntil(TimePoint deadline);

}  // namespace pipelink

#endif  // PIPELINK_COMMON_CLOCK_H_
