// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "wbft/runtime.hpp"

namespace wbft::testing {

constexpr ProcessId kBroadcast = 0xFFFFFFFEu;

/// Minimal single-process harness: records sends, timers and metrics so a
/// replica or client can be driven message by message.
class TestContext final : public Context {
 public:
  TimeNs clock = 0;
  SystemDirectory dir;
  std::optional<AnnealResult> fixed_anneal;  // returned for any roster/t_eff
  std::vector<std::pair<ProcessId, AnyMsg>> sent;  // kBroadcast = to all replicas
  struct TimerRec {
    std::uint64_t id;
    std::uint64_t tag;
    TimeNs at;
    bool cancelled = false;
  };
  std::vector<TimerRec> timers;
  std::vector<std::pair<std::string, std::string>> events;
  std::vector<ConsensusSample> consensus;

  struct ConsensusSampleTag {};

  TimeNs now() const override { return clock; }
  void send(ProcessId to, const AnyMsg& msg) override { sent.emplace_back(to, msg); }
  void broadcast_replicas(const AnyMsg& msg) override { sent.emplace_back(kBroadcast, msg); }
  std::uint64_t set_timer(TimeNs delay, std::uint64_t tag) override {
    timers.push_back({++timer_ids_, tag, clock + delay});
    return timer_ids_;
  }
  void cancel_timer(std::uint64_t timer_id) override {
    for (auto& t : timers)
      if (t.id == timer_id) t.cancelled = true;
  }
  void timeline(const std::string& event, const std::string& detail) override {
    events.emplace_back(event, detail);
  }
  void consensus_decided(Instance instance, TimeNs start, TimeNs decide, bool fast,
                         ReplicaId leader) override {
    consensus.push_back({instance, start, decide, fast, leader});
  }
  SystemDirectory& directory() override { return dir; }
  AnnealResult annealed_config(std::span<const ReplicaId> roster, std::uint32_t t_eff) override {
    if (fixed_anneal) return *fixed_anneal;
    std::vector<ReplicaId> ids(roster.begin(), roster.end());
    AnnealResult res;
    res.cfg = compute_weight_config(ids, t_eff);
    res.leader = ids.front();
    res.predicted_ns = 30 * kMsNs;
    return res;
  }
  TimeNs predict_current(const WeightConfig&, ReplicaId, Pattern) override { return 30 * kMsNs; }
  std::uint64_t run_seed() const override { return 7; }

  template <class T>
  std::vector<T> sent_of() const {
    std::vector<T> out;
    for (const auto& [to, msg] : sent)
      if (const auto* m = std::get_if<T>(&msg)) out.push_back(*m);
    return out;
  }

  bool saw_event(const std::string& name) const {
    for (const auto& [e, d] : events)
      if (e == name) return true;
    return false;
  }

 private:
  std::uint64_t timer_ids_ = 0;
};

}  // namespace wbft::testing
