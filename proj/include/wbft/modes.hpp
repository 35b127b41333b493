// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <optional>

#include "wbft/forensics.hpp"
#include "wbft/messages.hpp"

namespace wbft {

/// Fast/conservative switching state: the consecutive-success counter that
/// arms the fast mode and the latency watchdog that aborts it.
class ModeController {
 public:
  ModeController() = default;
  ModeController(std::uint32_t theta, std::uint32_t watchdog_window)
      : theta_(theta), window_(watchdog_window) {}

  /// Counts a decided instance; returns true when the theta-th consecutive
  /// success should flip the system to fast mode (caller is conservative).
  bool on_decided_conservative() { return ++consecutive_ok_ >= theta_; }

  void reset_counter() { consecutive_ok_ = 0; }
  std::uint32_t consecutive_ok() const { return consecutive_ok_; }

  void set_expectation(TimeNs ns) { expectation_ns_ = ns; }
  TimeNs expectation() const { return expectation_ns_; }
  void clear_watchdog() { samples_.clear(); }

  /// Feeds one observed fast-mode consensus latency. Returns true when the
  /// sliding-window median strictly exceeds the conservative-mode
  /// expectation (consensus latency disappointment).
  bool watchdog_sample(TimeNs observed);

  static StopReason severest(StopReason a, StopReason b) {
    auto rank = [](StopReason r) {
      switch (r) {
        case StopReason::valid_poc:
          return 2;
        case StopReason::timer_expired:
          return 1;
        case StopReason::latency_disappointment:
          return 0;
      }
      return 0;
    };
    return rank(a) >= rank(b) ? a : b;
  }

 private:
  std::uint32_t theta_ = 400;
  std::uint32_t window_ = 32;
  std::uint32_t consecutive_ok_ = 0;
  TimeNs expectation_ns_ = 0;
  std::deque<TimeNs> samples_;
};

/// Round-robin successor among the surviving roster.
ReplicaId next_leader(const std::vector<ReplicaId>& roster, ReplicaId current);

/// Outcome of merging the collected logs during a synchronization phase.
struct FixedHistory {
  std::vector<LogEntry> entries;
  std::vector<ReplicaId> culprits;
  std::optional<ProofOfCulpability> poc;
};

/// Deterministically merges signed logs into a single decision history.
///
/// When run_forensics is set, all divergent log pairs are analyzed first and
/// logs owned by identified culprits are discarded. Each instance then
/// adopts the candidate value with a verifying decision proof and the
/// highest support among remaining logs (ties broken by digest order); the
/// history ends at the first instance no log can support. Every correct
/// replica recomputes this function over the same bundle and reaches the
/// same history.
FixedHistory fix_history(const std::vector<SignedLog>& logs, bool run_forensics,
                         const KeyStore& keys, const ConfigLookup& cfg_for);

}  // namespace wbft
