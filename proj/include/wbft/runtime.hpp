// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "wbft/messages.hpp"
#include "wbft/optimizer.hpp"
#include "wbft/view.hpp"

namespace wbft {

/// Environment handle the simulator hands to each process. Scheduling and
/// delivery belong to the simulator; processes only emit intents.
class Context {
 public:
  virtual ~Context() = default;

  virtual TimeNs now() const = 0;
  virtual void send(ProcessId to, const AnyMsg& msg) = 0;
  virtual void broadcast_replicas(const AnyMsg& msg) = 0;

  /// Arms a one-shot timer; the tag comes back via Process::on_timer.
  virtual std::uint64_t set_timer(TimeNs delay, std::uint64_t tag) = 0;
  virtual void cancel_timer(std::uint64_t timer_id) = 0;

  virtual void timeline(const std::string& event, const std::string& detail) = 0;
  virtual void consensus_decided(Instance instance, TimeNs start, TimeNs decide, bool fast,
                                 ReplicaId leader) = 0;

  virtual SystemDirectory& directory() = 0;

  /// Current measurement-round annealing result for the given membership and
  /// threshold. Deterministic and shared: every replica asking in the same
  /// round gets the same answer, mirroring the agreed weight reassignment of
  /// the underlying protocol.
  virtual AnnealResult annealed_config(std::span<const ReplicaId> roster,
                                       std::uint32_t t_eff) = 0;

  /// Predicted consensus latency of a specific configuration on the current
  /// measured network.
  virtual TimeNs predict_current(const WeightConfig& cfg, ReplicaId leader,
                                 Pattern pattern) = 0;

  virtual std::uint64_t run_seed() const = 0;
};

class Process {
 public:
  virtual ~Process() = default;
  virtual void start(Context& ctx) = 0;
  virtual void on_message(ProcessId from, const AnyMsg& msg) = 0;
  virtual void on_timer(std::uint64_t tag) = 0;
};

}  // namespace wbft
