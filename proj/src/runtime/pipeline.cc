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

#include "pipelink/runtime/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "pipelink/common/status_macros.h"
#include "pipelink/monitor/snapshot.h"
#include "pipelink/net/link_shaper.h"
#include "pipelink/net/socket.h"

namespace pipelink {
namespace {

constexpr auto kPoll = std::chrono::milliseconds(20);
constexpr uint16_t kResidualPortOffset = 1000;

// First failure wins; every blocking loop polls aborted().
class AbortState {
 public:
  bool Trigger(DeviceId device, absl::Status status) {
    std::lock_guard<std::mutex> lock(mu_);
    if (aborted_) return false;
    device_ = device;
    status_ = std::move(status);
    aborted_ = true;
    return true;
  }
  bool aborted() const { return aborted_.load(); }
  DeviceId device() const {
    std::lock_guard<std::mutex> lock(mu_);
    return device_;
  }
  absl::Status status() const {
    std::lock_guard<std::mutex> lock(mu_);
    return status_;
  }

 private:
  mutable std::mutex mu_;
  std::atomic<bool> aborted_{false};
  DeviceId device_ = 0;
  absl::Status status_;
};

struct EpochInfo {
  uint32_t epoch = 0;
  std::vector<DeviceId> active;
  TransmissionMap map;
  TransitionSchedule schedule;
};

class EpochTable {
 public:
  void Add(std::shared_ptr<const EpochInfo> info) {
    std::lock_guard<std::mutex> lock(mu_);
    epochs_[info->epoch] = std::move(info);
  }
  std::shared_ptr<const EpochInfo> Get(uint32_t epoch) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = epochs_.find(epoch);
    return it == epochs_.end() ? nullptr : it->second;
  }

 private:
  mutable std::mutex mu_;
  std::map<uint32_t, std::shared_ptr<const EpochInfo>> epochs_;
};

using HopKey = std::tuple<uint32_t, MsgType, DeviceId, DeviceId>;

class Recorder {
 public:
  void Sent(const HopKey& key, int64_t bytes, double ideal_sec, double sent) {
    std::lock_guard<std::mutex> lock(mu_);
    HopRecord& h = hops_[key];
    std::tie(h.seq, h.type, h.from, h.to) = key;
    h.bytes = bytes;
    h.ideal_sec = ideal_sec;
    h.sent = sent;
  }
  void Received(const HopKey& key, double received, bool residual_delivery) {
    std::lock_guard<std::mutex> lock(mu_);
    HopRecord& h = hops_[key];
    h.received = received;
    h.residual_delivery = residual_delivery;
  }
  void Exec(ExecRecord record) {
    std::lock_guard<std::mutex> lock(mu_);
    execs_.push_back(std::move(record));
  }
  void Transition(TransitionRecord record) {
    std::lock_guard<std::mutex> lock(mu_);
    transitions_.push_back(std::move(record));
  }

  std::vector<HopRecord> hops() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<HopRecord> out;
    for (const auto& [key, h] : hops_) out.push_back(h);
    return out;
  }
  std::vector<ExecRecord> execs() const {
    std::lock_guard<std::mutex> lock(mu_);
    return execs_;
  }
  std::vector<TransitionRecord> transitions() const {
    std::lock_guard<std::mutex> lock(mu_);
    return transitions_;
  }

 private:
  mutable std::mutex mu_;
  std::map<HopKey, HopRecord> hops_;
  std::vector<ExecRecord> execs_;
  std::vector<TransitionRecord> transitions_;
};

class Leader;

struct Shared {
  Shared(const ModuleDag& dag, const OverlapPlan& overlap,
         const CostModel& model, const FleetProfile& fleet,
         const Workload& workload, const PipelineOptions& options)
      : dag(dag), overlap(overlap), model(model), fleet(fleet),
        workload(workload), options(options) {}

  const ModuleDag& dag;
  const OverlapPlan& overlap;
  const CostModel& model;
  const FleetProfile& fleet;
  const Workload& workload;
  const PipelineOptions& options;
  TimePoint t0 = SteadyClock::now();
  AbortState abort;
  EpochTable epochs;
  Recorder recorder;
  std::atomic<bool> closing{false};
  Leader* leader = nullptr;
  DeviceId leader_id = 0;

  double Sim(TimePoint t) const {
    return SecondsBetween(t0, t) / options.time_scale;
  }
};

absl::StatusOr<std::shared_ptr<const EpochInfo>> MakeEpoch(
    const Shared& shared, uint32_t epoch, std::vector<DeviceId> active,
    TransitionSchedule schedule) {
  auto info = std::make_shared<EpochInfo>();
  info->epoch = epoch;
  info->active = std::move(active);
  info->schedule = std::move(schedule);
  ASSIGN_OR_RETURN(info->map, BuildTransmissionMaps(
                                  shared.dag, shared.overlap.device_order,
                                  info->active, shared.fleet,
                                  shared.options.mode));
  return std::shared_ptr<const EpochInfo>(std::move(info));
}

// Asserts in debug builds that a socket is only ever read by one thread.
class SocketOwner {
 public:
  void Check() {
#ifndef NDEBUG
    const std::thread::id self = std::this_thread::get_id();
    std::thread::id expected{};
    if (!owner_.compare_exchange_strong(expected, self)) {
      assert(expected == self && "socket shared across threads");
    }
#endif
  }

 private:
  std::atomic<std::thread::id> owner_{};
};

// ---------------------------------------------------------------------------
// Leader: issues passes, collects logits and per-pass stats, and runs the
// balancer on a coordinator thread.

class Leader {
 public:
  struct Issued {
    uint32_t seq = 0;
    uint32_t epoch = 0;
  };

  Leader(Shared& shared, std::vector<ResidentSetAgent*> agents, size_t ring_size)
      : shared_(shared),
        agents_(std::move(agents)),
        ring_size_(ring_size),
        window_(shared.fleet.size(), shared.options.trigger.window) {}

  ~Leader() { StopCoordinator(); }

  void StartCoordinator() {
    coordinator_ = std::thread([this] { CoordinatorLoop(); });
  }
  void StopCoordinator() {
    {
      std::lock_guard<std::mutex> lock(events_mu_);
      stop_ = true;
    }
    events_cv_.notify_all();
    if (coordinator_.joinable()) coordinator_.join();
  }

  // Blocks while a transition waits for older passes to drain.
  std::optional<Issued> Issue(uint32_t sample, uint32_t token) {
    std::unique_lock<std::mutex> lock(mu_);
    while (pending_epoch_) {
      bool older_in_flight = false;
      for (const auto& [seq, f] : in_flight_) {
        if (f.epoch < *pending_epoch_) older_in_flight = true;
      }
      if (!older_in_flight) {
        epoch_ = *pending_epoch_;
        pending_epoch_.reset();
        break;
      }
      if (shared_.abort.aborted()) return std::nullopt;
      cv_.wait_for(lock, kPoll);
    }
    if (shared_.abort.aborted()) return std::nullopt;
    const uint32_t seq = next_seq_++;
    TokenRecord rec;
    rec.seq = seq;
    rec.sample = sample;
    rec.token = token;
    rec.epoch = epoch_;
    rec.issued = shared_.Sim(SteadyClock::now());
    tokens_[seq] = rec;
    in_flight_[seq] = {sample, epoch_};
    return Issued{seq, epoch_};
  }

  std::optional<uint64_t> WaitLogits(uint32_t seq) {
    std::unique_lock<std::mutex> lock(mu_);
    while (true) {
      auto it = logits_.find(seq);
      if (it != logits_.end()) {
        const uint64_t digest = it->second;
        logits_.erase(it);
        in_flight_.erase(seq);
        cv_.notify_all();
        return digest;
      }
      if (shared_.abort.aborted()) return std::nullopt;
      cv_.wait_for(lock, kPoll);
    }
  }

  void OnLogits(const Envelope& env, TimePoint received) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = tokens_.find(env.seq);
      if (it == tokens_.end() || env.segments.size() != 1) {
        shared_.abort.Trigger(shared_.leader_id,
                              absl::InternalError(absl::StrCat(
                                  "unexpected LOGITS for pass ", env.seq)));
        return;
      }
      if (!logits_.emplace(env.seq, env.segments[0].data_digest).second ||
          it->second.completed > 0) {
        shared_.abort.Trigger(
            shared_.leader_id,
            absl::InternalError(absl::StrCat(
                "pass ", env.seq, " returned more than one LOGITS frame")));
        return;
      }
      it->second.completed = shared_.Sim(received);
    }
    cv_.notify_all();
    PushEvent({env.seq, true, {}});
  }

  void OnStats(const PassStats& stats) { PushEvent({stats.seq, false, stats}); }

  // Installs a transition from the coordinator thread. Returns the switch
  // pass, or nullopt when one is already pending.
  absl::StatusOr<std::optional<uint32_t>> InstallTransition(
      const RebalanceDecision& decision, const std::vector<DeviceId>& ring,
      uint32_t new_epoch) {
    std::lock_guard<std::mutex> lock(mu_);
    if (pending_epoch_) return std::optional<uint32_t>();
    TransitionSchedule schedule = ScheduleTransition(
        decision, ring, static_cast<int64_t>(next_seq_) - 1, new_epoch);
    RETURN_IF_ERROR(ValidateSchedule(schedule));
    ASSIGN_OR_RETURN(auto info, MakeEpoch(shared_, new_epoch,
                                          decision.new_active,
                                          std::move(schedule)));
    shared_.epochs.Add(std::move(info));
    pending_epoch_ = new_epoch;
    return std::optional<uint32_t>(next_seq_);
  }

  void SampleCompleted() { completed_samples_.fetch_add(1); }

  // Waits until every issued pass has reported stats from every ring device.
  void WaitQuiescent() {
    std::unique_lock<std::mutex> lock(events_mu_);
    while (true) {
      size_t issued;
      {
        std::lock_guard<std::mutex> l(mu_);
        issued = next_seq_;
      }
      if (processed_ == issued && events_.empty()) return;
      if (shared_.abort.aborted()) return;
      events_cv_.wait_for(lock, kPoll);
    }
  }

  std::vector<uint32_t> InFlightSamples() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::set<uint32_t> samples;
    for (const auto& [seq, f] : in_flight_) samples.insert(f.sample);
    return {samples.begin(), samples.end()};
  }

  std::vector<TokenRecord> tokens() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<TokenRecord> out;
    for (const auto& [seq, t] : tokens_) out.push_back(t);
    return out;
  }
  std::map<uint32_t, std::vector<double>> busy() const {
    std::lock_guard<std::mutex> lock(events_mu_);
    return busy_;
  }
  std::vector<RebalanceEvent> rebalances() const {
    std::lock_guard<std::mutex> lock(events_mu_);
    return rebalances_;
  }

 private:
  struct Event {
    uint32_t seq = 0;
    bool logits = false;
    PassStats stats;
  };
  struct InFlight {
    uint32_t sample = 0;
    uint32_t epoch = 0;
  };
  struct Progress {
    bool logits = false;
    int stats = 0;
    std::vector<double> busy;
    std::vector<int64_t> flops;
  };

  void PushEvent(Event e) {
    {
      std::lock_guard<std::mutex> lock(events_mu_);
      events_.push_back(e);
    }
    events_cv_.notify_all();
  }

  void CoordinatorLoop() {
    std::unique_lock<std::mutex> lock(events_mu_);
    while (true) {
      if (events_.empty()) {
        if (stop_) return;
        events_cv_.wait_for(lock, kPoll);
        continue;
      }
      const Event e = events_.front();
      events_.pop_front();
      absl::Status st = Handle(e);
      if (!st.ok()) shared_.abort.Trigger(shared_.leader_id, st);
      events_cv_.notify_all();
    }
  }

  // Runs with events_mu_ held.
  absl::Status Handle(const Event& e) {
    const size_t m = shared_.fleet.size();
    Progress& p = progress_[e.seq];
    if (p.busy.empty()) {
      p.busy.assign(m, 0);
      p.flops.assign(m, 0);
    }
    if (e.logits) {
      p.logits = true;
    } else {
      p.busy[e.stats.device] += e.stats.busy_sec;
      p.flops[e.stats.device] += e.stats.flops;
      ++p.stats;
    }
    if (!p.logits || p.stats < static_cast<int>(ring_size_)) {
      return absl::OkStatus();
    }
    busy_[e.seq] = p.busy;
    const Progress done = std::move(p);
    progress_.erase(e.seq);
    ++processed_;

    uint32_t epoch;
    {
      std::lock_guard<std::mutex> lock(mu_);
      epoch = tokens_[e.seq].epoch;
    }
    if (!shared_.options.balancer || epoch != watched_epoch_) {
      return absl::OkStatus();
    }
    window_.Record(done.busy);
    flops_window_.push_back(done.flops);
    while (static_cast<int>(flops_window_.size()) >
           shared_.options.trigger.window) {
      flops_window_.pop_front();
    }
    if (completed_samples_.load() < shared_.options.balance_after_samples) {
      return absl::OkStatus();
    }
    return Evaluate(e.seq);
  }

  absl::Status Evaluate(uint32_t seq) {
    if (!window_.full()) return absl::OkStatus();
    const size_t m = shared_.fleet.size();
    std::vector<DeviceAgent*> agents(agents_.begin(), agents_.end());
    ASSIGN_OR_RETURN(FleetProfile snapshot,
                     SnapshotRuntime(shared_.fleet, agents, 1.0));
    const std::vector<double> mean_busy = window_.MeanBusy();
    for (size_t i = 0; i < m; ++i) {
      double flops = 0;
      for (const auto& row : flops_window_) flops += static_cast<double>(row[i]);
      const double busy = mean_busy[i] * flops_window_.size();
      if (flops > 0 && busy > 0) snapshot.devices[i].flops_per_sec = flops / busy;
    }
    TriggerOptions trigger_options = shared_.options.trigger;
    trigger_options.beta = shared_.model.beta;
    const TriggerResult trigger =
        ShouldRebalance(snapshot, window_, trigger_options);
    if (!trigger.triggered()) return absl::OkStatus();

    auto current = shared_.epochs.Get(watched_epoch_);
    ASSIGN_OR_RETURN(RebalanceDecision decision,
                     PlanRebalance(shared_.overlap, current->active, snapshot,
                                   shared_.model, trigger.bottleneck,
                                   shared_.options.overheads));
    RebalanceEvent event;
    event.decided_after_seq = seq;
    event.epoch = watched_epoch_;
    window_.Clear();
    flops_window_.clear();
    // A move must repay its release and reload cost within one window.
    const double gain = (decision.current_cost - decision.new_cost) *
                        shared_.options.trigger.window;
    if (decision.outcome == RebalanceDecision::Outcome::kRebalance &&
        gain <= decision.est_overhead_sec()) {
      decision.outcome = RebalanceDecision::Outcome::kNoImprovement;
      decision.reason = "gain does not repay the transition overhead";
    }
    if (decision.outcome == RebalanceDecision::Outcome::kRebalance) {
      ASSIGN_OR_RETURN(std::optional<uint32_t> switch_seq,
                       InstallTransition(decision, current->map.ring,
                                         watched_epoch_ + 1));
      if (!switch_seq) return absl::OkStatus();
      event.switch_seq = switch_seq;
      event.epoch = ++watched_epoch_;
      event.log_line = FormatRebalanceLog(*switch_seq, decision);
    } else {
      event.log_line = absl::StrCat("no-rebalance ", seq, " ",
                                    decision.reason);
    }
    event.decision = std::move(decision);
    rebalances_.push_back(std::move(event));
    return absl::OkStatus();
  }

  Shared& shared_;
  std::vector<ResidentSetAgent*> agents_;
  const size_t ring_size_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  uint32_t next_seq_ = 0;
  uint32_t epoch_ = 0;
  std::optional<uint32_t> pending_epoch_;
  std::map<uint32_t, InFlight> in_flight_;
  std::map<uint32_t, uint64_t> logits_;
  std::map<uint32_t, TokenRecord> tokens_;
  std::atomic<int> completed_samples_{0};

  mutable std::mutex events_mu_;
  std::condition_variable events_cv_;
  std::deque<Event> events_;
  bool stop_ = false;
  size_t processed_ = 0;
  std::map<uint32_t, Progress> progress_;
  std::map<uint32_t, std::vector<double>> busy_;
  BusyWindow window_;
  std::deque<std::vector<int64_t>> flops_window_;
  uint32_t watched_epoch_ = 0;
  std::vector<RebalanceEvent> rebalances_;
  std::thread coordinator_;
};

// ---------------------------------------------------------------------------
// Worker: one simulated device.

class Worker {
 public:
  Worker(DeviceId id, Shared& shared)
      : id_(id),
        shared_(shared),
        pressure_(id < static_cast<DeviceId>(shared.options.memory_pressure.size())
                      ? shared.options.memory_pressure[id]
                      : 0),
        engine_(shared.fleet.devices[id].flops_per_sec,
                shared.options.time_scale),
        agent_(id, shared.fleet.devices[id].mem_avail_bytes - pressure_),
        data_out_(shared.fleet.size()),
        residual_out_(shared.fleet.size()) {}

  ~Worker() { StopCompute(); }

  DeviceId id() const { return id_; }
  ResidentSetAgent& agent() { return agent_; }

  void SetSender(DeviceId peer, bool residual, std::unique_ptr<ShapedSender> s) {
    (residual ? residual_out_ : data_out_)[peer] = std::move(s);
  }

  absl::Status LoadInitial(const EpochInfo& epoch0) {
    const ModuleRange r = epoch0.map.devices[id_].modules;
    for (int j = r.first; j <= r.last; ++j) agent_.Load(j, shared_.dag.mem[j]);
    return CheckBudget("at startup");
  }

  // Resident modules must fit beta times the memory left by other users.
  absl::Status CheckBudget(const std::string& when) const {
    const CostModel& model = shared_.model;
    const double budget =
        model.beta * static_cast<double>(model.mem_avail[id_] - pressure_);
    const int64_t resident = agent_.resident_bytes();
    if (static_cast<double>(resident) > budget) {
      return absl::FailedPreconditionError(absl::StrCat(
          "memory constraint violated on device ", id_, " ", when,
          ": resident ", resident, " bytes exceed the budget of ",
          static_cast<int64_t>(budget), " bytes"));
    }
    return absl::OkStatus();
  }

  void StartCompute(int threads) {
    for (int i = 0; i < threads; ++i) {
      pool_.emplace_back([this] { ComputeLoop(); });
    }
  }
  void StopCompute() {
    {
      std::lock_guard<std::mutex> lock(ready_mu_);
      stop_ = true;
    }
    ready_cv_.notify_all();
    for (std::thread& t : pool_) {
      if (t.joinable()) t.join();
    }
    pool_.clear();
  }
  void CloseSenders() {
    for (auto& s : data_out_) if (s) s->Close();
    for (auto& s : residual_out_) if (s) s->Close();
  }
  void AbortSenders() {
    for (auto& s : data_out_) if (s) s->Abort();
    for (auto& s : residual_out_) if (s) s->Abort();
  }

  // Leader only: the token input arrives locally.
  void StartPass(uint32_t seq, uint32_t epoch, uint32_t sample, uint32_t token,
                 uint64_t token_input) {
    std::unique_lock<std::mutex> lock(pending_mu_);
    PendingPass& p = Pending(seq, epoch, sample, token);
    p.token_input = token_input;
    MaybeDispatch(seq, p, lock);
  }

  // Returns whether the frame delivered a residual segment consumed here.
  absl::StatusOr<bool> OnData(const Frame& frame, const Envelope& env) {
    auto info = shared_.epochs.Get(env.epoch);
    if (!info) {
      return absl::InternalError(absl::StrCat(
          "pass ", env.seq, " references unknown epoch ", env.epoch));
    }
    const DeviceTransmission& t = info->map.devices[id_];
    bool residual_here = false;
    for (const Segment& s : env.segments) {
      if (s.dst_module != s.src_module + 1 && t.modules.contains(s.dst_module)) {
        residual_here = true;
      }
    }
    std::unique_lock<std::mutex> lock(pending_mu_);
    PendingPass& p = Pending(env.seq, env.epoch, frame.sample_id,
                             frame.token_index);
    if (p.epoch != env.epoch) {
      return absl::InternalError(absl::StrCat(
          "pass ", env.seq, " mixes epochs ", p.epoch, " and ", env.epoch));
    }
    if (frame.type == MsgType::kActivation) {
      if (p.activation) {
        return absl::InternalError(absl::StrCat(
            "device ", id_, " received pass ", env.seq, " twice"));
      }
      const int pos = t.position;
      if (pos <= 0 || info->map.ring[pos - 1] != env.sender) {
        return absl::InternalError(absl::StrCat(
            "ACTIVATION for pass ", env.seq, " reached device ", id_,
            " from device ", env.sender, " out of ring order"));
      }
      p.activation = true;
    } else {
      ++p.residual_frames;
    }
    for (const Segment& s : env.segments) {
      p.segments[{s.src_module, s.dst_module}] = s.data_digest;
    }
    MaybeDispatch(env.seq, p, lock);
    return residual_here;
  }

 private:
  struct PendingPass {
    uint32_t epoch = 0;
    uint32_t sample = 0;
    uint32_t token = 0;
    bool activation = false;
    int residual_frames = 0;
    std::optional<uint64_t> token_input;
    std::map<std::pair<int, int>, uint64_t> segments;
  };
  struct ReadyPass {
    uint32_t seq = 0;
    PendingPass pass;
  };

  PendingPass& Pending(uint32_t seq, uint32_t epoch, uint32_t sample,
                       uint32_t token) {
    auto [it, inserted] = pending_.try_emplace(seq);
    if (inserted) {
      it->second.epoch = epoch;
      it->second.sample = sample;
      it->second.token = token;
    }
    return it->second;
  }

  // Out-of-order arrivals stay buffered until the pass is complete.
  void MaybeDispatch(uint32_t seq, PendingPass& p,
                     std::unique_lock<std::mutex>& lock) {
    auto info = shared_.epochs.Get(p.epoch);
    if (!info) return;
    const DeviceTransmission& t = info->map.devices[id_];
    const bool ready =
        t.position == 0
            ? p.token_input.has_value()
            : p.activation && p.residual_frames ==
                                  static_cast<int>(t.residual_sources.size());
    if (!ready) return;
    ReadyPass r{seq, std::move(p)};
    pending_.erase(seq);
    lock.unlock();
    {
      std::lock_guard<std::mutex> l(ready_mu_);
      ready_.push_back(std::move(r));
    }
    ready_cv_.notify_one();
  }

  void ComputeLoop() {
    while (true) {
      ReadyPass r;
      {
        std::unique_lock<std::mutex> lock(ready_mu_);
        while (ready_.empty()) {
          if (stop_) return;
          ready_cv_.wait_for(lock, kPoll);
        }
        r = std::move(ready_.front());
        ready_.pop_front();
      }
      if (shared_.abort.aborted()) continue;
      absl::Status st = RunPass(r.seq, r.pass);
      if (!st.ok()) shared_.abort.Trigger(id_, st);
    }
  }

  // Adopts every epoch up to `epoch` and marks a pass as executing.
  absl::Status Enter(uint32_t epoch, uint32_t seq) {
    std::lock_guard<std::mutex> lock(adopt_mu_);
    if (epoch < epoch_) {
      return absl::InternalError(absl::StrCat(
          "device ", id_, " received pass ", seq, " of epoch ", epoch,
          " after adopting epoch ", epoch_));
    }
    while (epoch_ < epoch) {
      if (executing_ > 0) {
        return absl::InternalError(absl::StrCat(
            "device ", id_, " adopting epoch ", epoch_ + 1,
            " while a pass of epoch ", epoch_, " is executing"));
      }
      auto info = shared_.epochs.Get(epoch_ + 1);
      if (!info) {
        return absl::InternalError(absl::StrCat("epoch ", epoch_ + 1,
                                                " was never installed"));
      }
      TransitionRecord rec;
      rec.device = id_;
      rec.epoch = info->epoch;
      rec.seq = seq;
      rec.charge = ChargeFor(info->schedule, id_, shared_.dag.mem,
                             shared_.options.overheads);
      for (int j : rec.charge.release) agent_.Release(j);
      for (int j : rec.charge.load) agent_.Load(j, shared_.dag.mem[j]);
      rec.resident_bytes = agent_.resident_bytes();
      RETURN_IF_ERROR(CheckBudget(
          absl::StrCat("after transition to epoch ", info->epoch)));
      const double charged = rec.charge.release_sec + rec.charge.reload_sec;
      if (charged > 0) engine_.Occupy(charged);
      shared_.recorder.Transition(rec);
      epoch_ = info->epoch;
    }
    ++executing_;
    return absl::OkStatus();
  }

  void Exit() {
    std::lock_guard<std::mutex> lock(adopt_mu_);
    --executing_;
  }

  absl::Status RunPass(uint32_t seq, PendingPass& pass) {
    const auto& opts = shared_.options;
    if (opts.fault && opts.fault->device == id_ && opts.fault->seq == seq) {
      return absl::InternalError(
          absl::StrCat("injected fault at pass ", seq));
    }
    auto info = shared_.epochs.Get(pass.epoch);
    const DeviceTransmission& t = info->map.devices[id_];
    if (t.position < 0) {
      return absl::InternalError(absl::StrCat(
          "device ", id_, " hosts no modules in epoch ", pass.epoch));
    }
    for (const SegmentRoute& r : t.inputs) {
      if (!pass.segments.count({r.src_module, r.dst_module})) {
        return absl::InternalError(absl::StrCat(
            "device ", id_, " is missing input ", r.src_module, "->",
            r.dst_module, " for pass ", seq));
      }
    }

    RETURN_IF_ERROR(Enter(pass.epoch, seq));
    const ModuleDag& dag = shared_.dag;
    const double multiplier =
        shared_.workload.FlopsMultiplier(static_cast<int>(pass.token));
    std::map<int, uint64_t> out;
    ExecRecord exec;
    exec.seq = seq;
    exec.epoch = pass.epoch;
    exec.device = id_;
    exec.modules = t.modules;
    int64_t flops = 0;
    absl::Status status;
    for (int j = t.modules.first; j <= t.modules.last && status.ok(); ++j) {
      std::vector<uint64_t> inputs;
      if (j == 0) inputs.push_back(*pass.token_input);
      for (const ModuleInput& in : dag.inputs[j]) {
        inputs.push_back(info->active[in.src] == id_
                             ? out.at(in.src)
                             : pass.segments.at({in.src, j}));
      }
      absl::StatusOr<ExecuteResult> r = SyntheticExecute(
          j, dag.flops[j], multiplier, inputs, engine_, agent_);
      if (!r.ok()) {
        status = r.status();
        break;
      }
      if (j == t.modules.first) exec.start = shared_.Sim(r->slot.start);
      exec.end = shared_.Sim(r->slot.end);
      exec.busy_sec += r->busy_sec;
      flops += static_cast<int64_t>(static_cast<double>(dag.flops[j]) * multiplier);
      out[j] = r->output_digest;
    }
    Exit();
    RETURN_IF_ERROR(status);
    shared_.recorder.Exec(exec);

    auto segment = [&](const SegmentRoute& r) {
      const uint64_t digest = r.from == id_
                                  ? out.at(r.src_module)
                                  : pass.segments.at({r.src_module, r.dst_module});
      return Segment{static_cast<uint16_t>(r.src_module),
                     static_cast<uint16_t>(r.dst_module), digest,
                     static_cast<uint32_t>(r.bytes)};
    };

    // Residual outputs leave first, nearest target first.
    for (DeviceId target : t.send_order) {
      Envelope env{pass.epoch, seq, static_cast<uint16_t>(id_), {}};
      for (const SegmentRoute& r : t.residual_routes) {
        if (r.to == target) env.segments.push_back(segment(r));
      }
      Send(target, true, MsgType::kResidual, pass, env);
    }
    if (t.sequential_target) {
      Envelope env{pass.epoch, seq, static_cast<uint16_t>(id_), {}};
      for (const SegmentRoute& r : t.activation) env.segments.push_back(segment(r));
      for (const SegmentRoute& r : t.piggyback) env.segments.push_back(segment(r));
      Send(*t.sequential_target, false, MsgType::kActivation, pass, env);
    } else {
      const int last = static_cast<int>(dag.size()) - 1;
      Envelope env{pass.epoch, seq, static_cast<uint16_t>(id_),
                   {Segment{static_cast<uint16_t>(last), 0,
                            LogitsDigest(out.at(last)),
                            static_cast<uint32_t>(dag.return_bytes)}}};
      if (*t.return_target == id_) {
        shared_.leader->OnLogits(env, SteadyClock::now());
      } else {
        Send(*t.return_target, false, MsgType::kLogits, pass, env);
      }
    }

    const PassStats stats{seq, static_cast<uint16_t>(id_), exec.busy_sec, flops};
    if (shared_.leader_id == id_) {
      shared_.leader->OnStats(stats);
    } else {
      Frame f;
      f.type = MsgType::kControl;
      f.sample_id = pass.sample;
      f.token_index = pass.token;
      f.source_module = static_cast<uint16_t>(id_);
      f.target_module = 0xFFFF;
      f.payload = EncodePassStats(stats);
      residual_out_[shared_.leader_id]->Send(EncodeFrame(f), 0);
    }
    return absl::OkStatus();
  }

  void Send(DeviceId to, bool residual_channel, MsgType type,
            const PendingPass& pass, const Envelope& env) {
    Frame f;
    f.type = type;
    f.sample_id = pass.sample;
    f.token_index = pass.token;
    if (!env.segments.empty()) {
      f.source_module = env.segments.front().src_module;
      f.target_module = env.segments.front().dst_module;
    }
    f.payload = EncodeEnvelope(env);
    const int64_t bytes = env.SimulatedBytes();
    ShapedSender& sender = *(residual_channel ? residual_out_ : data_out_)[to];
    const ShapedSender::Ticket ticket = sender.Send(EncodeFrame(f), bytes);
    const LinkShape shape = shared_.fleet.link(id_, to);
    shared_.recorder.Sent({env.seq, type, id_, to}, bytes,
                          shape.latency_sec + bytes / shape.bandwidth_bps,
                          shared_.Sim(ticket.enqueued));
  }

  const DeviceId id_;
  Shared& shared_;
  const int64_t pressure_;
  ComputeEngine engine_;
  ResidentSetAgent agent_;
  std::vector<std::unique_ptr<ShapedSender>> data_out_;
  std::vector<std::unique_ptr<ShapedSender>> residual_out_;

  std::mutex pending_mu_;
  std::map<uint32_t, PendingPass> pending_;

  std::mutex ready_mu_;
  std::condition_variable ready_cv_;
  std::deque<ReadyPass> ready_;
  bool stop_ = false;
  std::vector<std::thread> pool_;

  std::mutex adopt_mu_;
  uint32_t epoch_ = 0;
  int executing_ = 0;
};

// ---------------------------------------------------------------------------
// Connections.

struct Inbound {
  DeviceId device = 0;  // receiver
  DeviceId peer = 0;    // sender
  bool residual = false;
  Fd socket;
  SocketOwner owner;
};

struct Listeners {
  uint16_t base_port = 0;
  std::vector<Fd> data;
  std::vector<Fd> residual;
};

absl::StatusOr<Listeners> OpenListenersAt(size_t m, uint16_t base) {
  Listeners l;
  l.base_port = base;
  for (size_t i = 0; i < m; ++i) {
    for (bool residual : {false, true}) {
      const uint16_t port = static_cast<uint16_t>(
          base + (residual ? kResidualPortOffset : 0) + i);
      absl::StatusOr<Fd> fd = ListenTcp(port);
      if (!fd.ok()) {
        return absl::UnavailableError(absl::StrCat(
            "port conflict on ", port, ": ", fd.status().message()));
      }
      (residual ? l.residual : l.data).push_back(*std::move(fd));
    }
  }
  return l;
}

absl::StatusOr<Listeners> OpenListeners(size_t m, uint16_t base_port) {
  if (base_port != 0) {
    if (static_cast<size_t>(base_port) + kResidualPortOffset + m > 65535) {
      return absl::InvalidArgumentError(
          absl::StrCat("base port ", base_port, " leaves no room for ", m,
                       " devices"));
    }
    return OpenListenersAt(m, base_port);
  }
  std::mt19937 rng(std::random_device{}());
  std::uniform_int_distribution<int> pick(20000, 60000);
  absl::Status last;
  for (int attempt = 0; attempt < 32; ++attempt) {
    absl::StatusOr<Listeners> l =
        OpenListenersAt(m, static_cast<uint16_t>(pick(rng)));
    if (l.ok()) return l;
    last = l.status();
  }
  return last;
}

absl::Status SendHello(const Fd& fd, DeviceId self) {
  const uint8_t hello[2] = {static_cast<uint8_t>(self & 0xFF),
                            static_cast<uint8_t>(self >> 8)};
  return SendAll(fd.get(), hello);
}

absl::StatusOr<DeviceId> RecvHello(const Fd& fd) {
  uint8_t hello[2];
  RETURN_IF_ERROR(RecvAll(fd.get(), hello));
  return static_cast<DeviceId>(hello[0] | (hello[1] << 8));
}

void ReaderLoop(Shared& shared, Worker& worker, Inbound& in) {
  TightenTimerSlack();
  while (true) {
    in.owner.Check();
    absl::StatusOr<Frame> frame = ReadFrame(in.socket.get());
    const TimePoint received = SteadyClock::now();
    if (!frame.ok()) {
      if (shared.closing.load() || shared.abort.aborted()) return;
      shared.abort.Trigger(
          in.device, absl::UnavailableError(absl::StrCat(
                         "link from device ", in.peer, " failed: ",
                         frame.status().message())));
      return;
    }
    absl::Status st;
    if (frame->type == MsgType::kControl) {
      absl::StatusOr<PassStats> stats = DecodePassStats(frame->payload);
      if (stats.ok()) {
        shared.leader->OnStats(*stats);
      } else {
        st = stats.status();
      }
    } else {
      absl::StatusOr<Envelope> env = DecodeEnvelope(frame->payload);
      if (!env.ok()) {
        st = env.status();
      } else if (env->sender != in.peer) {
        st = absl::DataLossError(absl::StrCat(
            "frame from device ", in.peer, " claims sender ", env->sender));
      } else if (frame->type == MsgType::kLogits) {
        shared.recorder.Received({env->seq, frame->type, in.peer, in.device},
                                 shared.Sim(received), false);
        shared.leader->OnLogits(*env, received);
      } else {
        absl::StatusOr<bool> residual_here = worker.OnData(*frame, *env);
        if (residual_here.ok()) {
          shared.recorder.Received({env->seq, frame->type, in.peer, in.device},
                                   shared.Sim(received), *residual_here);
        } else {
          st = residual_here.status();
        }
      }
    }
    if (!st.ok()) {
      shared.abort.Trigger(in.device, st);
      return;
    }
  }
}

}  // namespace

double RunReport::tokens_per_sec() const {
  return makespan_sec > 0 ? static_cast<double>(tokens.size()) / makespan_sec
                          : 0;
}

double RunReport::mean_latency() const {
  if (tokens.empty()) return 0;
  double total = 0;
  for (const TokenRecord& t : tokens) total += t.latency();
  return total / static_cast<double>(tokens.size());
}

absl::StatusOr<RunReport> RunPipeline(const ModuleDag& dag,
                                      const OverlapPlan& overlap,
                                      const CostModel& model,
                                      const FleetProfile& fleet,
                                      const Workload& workload,
                                      const PipelineOptions& options) {
  RETURN_IF_ERROR(ValidateModuleDag(dag));
  RETURN_IF_ERROR(ValidateFleet(fleet));
  const size_t m = fleet.size();
  if (overlap.num_devices() != m || overlap.num_modules() != dag.size() ||
      model.num_devices() != m || model.num_modules() != dag.size()) {
    return absl::InvalidArgumentError(
        "plan, cost model, fleet and module dag disagree in shape");
  }
  if (options.threads < 1) {
    return absl::InvalidArgumentError("threads must be at least 1");
  }
  if (options.time_scale <= 0) {
    return absl::InvalidArgumentError("time scale must be positive");
  }
  if (workload.samples < 0 || workload.tokens < 1) {
    return absl::InvalidArgumentError("workload needs at least one token");
  }

  Shared shared(dag, overlap, model, fleet, workload, options);
  ASSIGN_OR_RETURN(auto epoch0, MakeEpoch(shared, 0, overlap.active, {}));
  shared.epochs.Add(epoch0);
  const std::vector<DeviceId> ring = epoch0->map.ring;
  shared.leader_id = ring.front();

  // Sockets.
  ASSIGN_OR_RETURN(Listeners listeners, OpenListeners(m, options.base_port));
  std::vector<std::unique_ptr<Worker>> workers;
  std::vector<ResidentSetAgent*> agents;
  for (size_t i = 0; i < m; ++i) {
    workers.push_back(std::make_unique<Worker>(static_cast<DeviceId>(i), shared));
    agents.push_back(&workers.back()->agent());
  }
  std::vector<std::unique_ptr<Inbound>> inbound;
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      for (bool residual : {false, true}) {
        const uint16_t port = static_cast<uint16_t>(
            listeners.base_port + (residual ? kResidualPortOffset : 0) + b);
        ASSIGN_OR_RETURN(Fd fd, ConnectTcp({"127.0.0.1", port},
                                           options.connect_timeout_sec));
        RETURN_IF_ERROR(SendHello(fd, static_cast<DeviceId>(a)));
        workers[a]->SetSender(
            static_cast<DeviceId>(b), residual,
            std::make_unique<ShapedSender>(
                std::move(fd),
                fleet.link(static_cast<DeviceId>(a), static_cast<DeviceId>(b)),
                options.time_scale));
      }
    }
  }
  for (size_t b = 0; b < m; ++b) {
    for (bool residual : {false, true}) {
      const Fd& listener = residual ? listeners.residual[b] : listeners.data[b];
      for (size_t k = 0; k + 1 < m; ++k) {
        ASSIGN_OR_RETURN(Fd fd, AcceptTcp(listener, options.connect_timeout_sec));
        ASSIGN_OR_RETURN(const DeviceId peer, RecvHello(fd));
        auto in = std::make_unique<Inbound>();
        in->device = static_cast<DeviceId>(b);
        in->peer = peer;
        in->residual = residual;
        in->socket = std::move(fd);
        inbound.push_back(std::move(in));
      }
    }
  }

  Leader leader(shared, agents, ring.size());
  shared.leader = &leader;
  for (auto& w : workers) RETURN_IF_ERROR(w->LoadInitial(*epoch0));
  for (auto& w : workers) w->StartCompute(options.threads);
  std::vector<std::thread> readers;
  for (auto& in : inbound) {
    Worker& w = *workers[in->device];
    Inbound& ref = *in;
    readers.emplace_back([&shared, &w, &ref] { ReaderLoop(shared, w, ref); });
  }
  leader.StartCoordinator();

  // Drivers: each keeps one sample in flight.
  shared.t0 = SteadyClock::now();
  std::vector<uint64_t> sample_digests(workload.samples, 0);
  std::atomic<int> next_sample{0};
  Worker& leader_worker = *workers[shared.leader_id];
  std::vector<std::thread> drivers;
  for (int d = 0; d < options.threads; ++d) {
    drivers.emplace_back([&] {
      while (!shared.abort.aborted()) {
        const int s = next_sample.fetch_add(1);
        if (s >= workload.samples) return;
        uint64_t digest = kSampleDigestSeed;
        uint64_t input =
            FirstTokenInput(static_cast<uint32_t>(s), workload.context_len);
        for (int t = 0; t < workload.tokens; ++t) {
          std::optional<Leader::Issued> issued = leader.Issue(
              static_cast<uint32_t>(s), static_cast<uint32_t>(t));
          if (!issued) return;
          leader_worker.StartPass(issued->seq, issued->epoch,
                                  static_cast<uint32_t>(s),
                                  static_cast<uint32_t>(t), input);
          std::optional<uint64_t> logits = leader.WaitLogits(issued->seq);
          if (!logits) return;
          digest = FoldSampleDigest(digest, *logits);
          input = NextTokenInput(*logits);
        }
        sample_digests[s] = digest;
        leader.SampleCompleted();
      }
    });
  }
  for (std::thread& t : drivers) t.join();
  leader.WaitQuiescent();

  // Teardown.
  shared.closing = true;
  const bool aborted = shared.abort.aborted();
  if (aborted) {
    for (auto& w : workers) w->AbortSenders();
    for (auto& in : inbound) ShutdownBoth(in->socket.get());
  } else {
    for (auto& w : workers) w->CloseSenders();
  }
  for (std::thread& t : readers) t.join();
  for (auto& w : workers) w->StopCompute();
  leader.StopCoordinator();

  if (shared.abort.aborted()) {
    const std::vector<uint32_t> in_flight = leader.InFlightSamples();
    const absl::Status cause = shared.abort.status();
    return absl::Status(
        cause.code(),
        absl::StrCat("pipeline aborted: device ", shared.abort.device(),
                     " failed: ", cause.message(), "; in-flight samples [",
                     absl::StrJoin(in_flight, ","), "]"));
  }

  RunReport report;
  report.mode = options.mode;
  report.threads = options.threads;
  report.balancer = options.balancer;
  report.time_scale = options.time_scale;
  report.num_devices = m;
  report.ring = ring;
  report.hops = shared.recorder.hops();
  report.execs = shared.recorder.execs();
  report.transitions = shared.recorder.transitions();
  report.rebalances = leader.rebalances();
  report.sample_digests = std::move(sample_digests);
  report.reference_digests = ReferenceSampleDigests(dag, workload);
  report.tokens = leader.tokens();
  report.device_busy_sec.assign(m, 0);

  std::map<DeviceId, int> position;
  for (size_t q = 0; q < ring.size(); ++q) position[ring[q]] = static_cast<int>(q);
  std::map<uint32_t, TokenRecord*> by_seq;
  const auto busy = leader.busy();
  for (TokenRecord& t : report.tokens) {
    by_seq[t.seq] = &t;
    auto it = busy.find(t.seq);
    t.device_busy = it == busy.end() ? std::vector<double>(m, 0) : it->second;
    for (size_t i = 0; i < m; ++i) report.device_busy_sec[i] += t.device_busy[i];
    t.activation_hops.assign(ring.size() > 0 ? ring.size() - 1 : 0, 0);
  }
  for (const HopRecord& h : report.hops) {
    auto it = by_seq.find(h.seq);
    if (it == by_seq.end()) continue;
    TokenRecord& t = *it->second;
    switch (h.type) {
      case MsgType::kActivation:
        t.activation_hops[position[h.from]] = h.hop_sec();
        break;
      case MsgType::kLogits:
        t.return_hop = h.hop_sec();
        break;
      case MsgType::kResidual:
        t.residual_hop = std::max(t.residual_hop, h.hop_sec());
        break;
      case MsgType::kControl:
        break;
    }
    if (h.residual_delivery) {
      t.residual_arrival = std::max(t.residual_arrival, h.received - t.issued);
    }
  }
  if (!report.tokens.empty()) {
    double first = report.tokens.front().issued;
    double last = 0;
    for (const TokenRecord& t : report.tokens) {
      first = std::min(first, t.issued);
      last = std::max(last, t.completed);
    }
    report.makespan_sec = last - first;
  }
  return report;
}

absl::Status CheckRingDiscipline(const RunReport& report) {
  const std::vector<DeviceId>& ring = report.ring;
  std::map<uint32_t, std::vector<const HopRecord*>> per_seq;
  for (const HopRecord& h : report.hops) per_seq[h.seq].push_back(&h);
  for (const TokenRecord& t : report.tokens) {
    std::vector<const HopRecord*> acts;
    int logits = 0;
    for (const HopRecord* h : per_seq[t.seq]) {
      if (h->type == MsgType::kActivation) acts.push_back(h);
      if (h->type == MsgType::kLogits) {
        ++logits;
        if (h->from != ring.back() || h->to != ring.front()) {
          return absl::InternalError(absl::StrCat(
              "pass ", t.seq, " returned LOGITS from device ", h->from,
              " to device ", h->to));
        }
      }
    }
    if (acts.size() + 1 != ring.size()) {
      return absl::InternalError(absl::StrCat(
          "pass ", t.seq, " made ", acts.size(), " ACTIVATION hops on a ring of ",
          ring.size()));
    }
    std::sort(acts.begin(), acts.end(), [](const HopRecord* a, const HopRecord* b) {
      return a->sent < b->sent;
    });
    for (size_t q = 0; q < acts.size(); ++q) {
      if (acts[q]->from != ring[q] || acts[q]->to != ring[q + 1]) {
        return absl::InternalError(absl::StrCat(
            "pass ", t.seq, " hop ", q, " went ", acts[q]->from, "->",
            acts[q]->to, " instead of ", ring[q], "->", ring[q + 1]));
      }
      if (q > 0 && acts[q]->sent < acts[q - 1]->received) {
        return absl::InternalError(absl::StrCat(
            "pass ", t.seq, " left device ", ring[q],
            " before its ACTIVATION arrived"));
      }
    }
    const int expected_logits = ring.size() > 1 ? 1 : 0;
    if (logits != expected_logits || t.completed <= 0) {
      return absl::InternalError(absl::StrCat(
          "pass ", t.seq, " returned ", logits, " LOGITS frames"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckResidualCompleteness(const RunReport& report) {
  std::map<std::pair<uint32_t, DeviceId>, double> last_arrival;
  for (const HopRecord& h : report.hops) {
    if (h.type != MsgType::kActivation && h.type != MsgType::kResidual) continue;
    if (h.received <= 0) {
      return absl::InternalError(absl::StrCat(
          MsgTypeName(h.type), " frame of pass ", h.seq, " from device ",
          h.from, " to device ", h.to, " was never received"));
    }
    double& t = last_arrival[{h.seq, h.to}];
    t = std::max(t, h.received);
  }
  for (const ExecRecord& e : report.execs) {
    auto it = last_arrival.find({e.seq, e.device});
    if (it != last_arrival.end() && e.start < it->second) {
      return absl::InternalError(absl::StrCat(
          "device ", e.device, " started pass ", e.seq, " at ", e.start,
          " before its last input arrived at ", it->second));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckShapedLowerBound(const RunReport& report, double slack_sec) {
  for (const HopRecord& h : report.hops) {
    if (h.hop_sec() + slack_sec < h.ideal_sec) {
      return absl::InternalError(absl::StrCat(
          MsgTypeName(h.type), " hop ", h.from, "->", h.to, " of pass ", h.seq,
          " took ", h.hop_sec(), " s, below the shaped minimum ", h.ideal_sec));
    }
  }
  return absl::OkStatus();
}

}  // namespace pipelink
