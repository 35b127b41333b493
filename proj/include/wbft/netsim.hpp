// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <queue>
#include <set>

#include "wbft/client.hpp"
#include "wbft/replica.hpp"
#include "wbft/scenario.hpp"

namespace wbft {

struct TimelineRow {
  TimeNs at = 0;
  std::string event;
  std::string detail;
};

struct ConsensusRow {
  Instance instance = 0;
  TimeNs start = 0;
  TimeNs decide = 0;
  bool fast = false;
  ReplicaId leader = 0;
};

struct ClientOpRow {
  ProcessId client = 0;
  std::uint32_t region = 0;
  ClientShim::OpRecord op;
};

/// Everything a run produces: metric rows for the CSV exporters plus the
/// structured state the correctness checkers need.
struct Trace {
  std::vector<TimelineRow> timeline;
  std::vector<ConsensusRow> consensus;
  std::vector<ClientOpRow> ops;

  std::vector<ViewInfo> views;                    // registered regencies, ascending
  std::vector<std::uint32_t> coalition;           // resolved equivocators (empty if none)
  std::vector<std::uint32_t> crashed_or_silent;   // scripted benign-faulty replicas
  std::vector<ProofOfCulpability> pocs;           // every PoC broadcast by a replica
  std::vector<std::pair<ReplicaId, std::vector<LogEntry>>> final_logs;  // non-Byzantine replicas
  std::uint64_t final_epoch = 0;
  std::vector<ReplicaId> final_roster;
  TimeNs end_time = 0;
  bool all_clients_done = false;
  bool equivocation_inert = false;  // a scripted coalition could not split quorums
};

/// Seeded discrete-event simulator: latency-matrix-driven delivery with
/// per-pair FIFO, virtual clocks, scripted fault injection, and a scripted
/// equivocation adversary (dual-world shadow replicas).
class Simulation {
 public:
  explicit Simulation(const Scenario& sc);
  ~Simulation();

  Trace run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: validate + run.
Trace run_scenario(const Scenario& sc);

}  // namespace wbft
