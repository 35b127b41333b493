// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wbft/netsim.hpp"

namespace wbft {

/// Result of auditing one finished run for the client-facing guarantees.
struct HistoryCheck {
  std::vector<std::string> violations;
  std::vector<LogEntry> canonical;
  std::size_t finalized_ops = 0;

  bool ok() const { return violations.empty(); }
};

/// Verifies the trace of a finished run:
///  - picks the canonical decision history (longest settled log among
///    non-crashed honest replicas) and re-executes it;
///  - every final-level client result must match the canonical execution of
///    its operation (finality is never contradicted post-sync);
///  - real-time order: an operation finalized before another was invoked
///    must execute earlier;
///  - every canonical decision must carry an independently verifying proof;
///  - without a scripted equivocation, all honest replica logs must be
///    pairwise prefix-consistent (agreement under the threshold).
///
/// check_strong additionally holds strong-level results to the canonical
/// execution; callers enable it for runs with at most t_fast actual faults.
HistoryCheck check_history(const Trace& trace, const KeyStore& keys, bool check_strong);

}  // namespace wbft
