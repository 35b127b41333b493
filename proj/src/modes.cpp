// SPDX-License-Identifier: Apache-2.0
#include "wbft/modes.hpp"

#include <algorithm>
#include <map>

namespace wbft {

bool ModeController::watchdog_sample(TimeNs observed) {
  samples_.push_back(observed);
  while (samples_.size() > window_) samples_.pop_front();
  if (expectation_ns_ <= 0) return false;
  std::vector<TimeNs> sorted(samples_.begin(), samples_.end());
  std::sort(sorted.begin(), sorted.end());
  TimeNs median = sorted[sorted.size() / 2];
  return median > expectation_ns_;
}

ReplicaId next_leader(const std::vector<ReplicaId>& roster, ReplicaId current) {
  auto it = std::upper_bound(roster.begin(), roster.end(), current);
  return it == roster.end() ? roster.front() : *it;
}

FixedHistory fix_history(const std::vector<SignedLog>& logs, bool run_forensics,
                         const KeyStore& keys, const ConfigLookup& cfg_for) {
  FixedHistory out;

  std::map<ReplicaId, const SignedLog*> by_owner;
  for (const auto& log : logs) by_owner.emplace(log.owner, &log);

  if (run_forensics) {
    for (auto ia = by_owner.begin(); ia != by_owner.end(); ++ia) {
      for (auto ib = std::next(ia); ib != by_owner.end(); ++ib) {
        auto poc = find_culpability(*ia->second, *ib->second, keys, cfg_for);
        if (!poc) continue;
        if (!out.poc) out.poc = poc;
        for (auto id : poc->culprits)
          if (!std::binary_search(out.culprits.begin(), out.culprits.end(), id))
            out.culprits.insert(
                std::lower_bound(out.culprits.begin(), out.culprits.end(), id), id);
      }
    }
    for (auto id : out.culprits) by_owner.erase(id);
  }

  for (Instance i = 0;; ++i) {
    // Candidates: value digests decided at instance i across remaining logs.
    std::map<Digest, std::pair<std::uint32_t, const LogEntry*>> candidates;
    for (const auto& [owner, log] : by_owner) {
      if (log->entries.empty()) continue;
      Instance base = log->entries.front().instance;
      if (i < base || i >= base + log->entries.size()) continue;
      const LogEntry& e = log->entries[static_cast<std::size_t>(i - base)];
      auto& slot = candidates[e.value()];
      ++slot.first;
      if (!slot.second) slot.second = &e;
    }
    if (candidates.empty()) break;

    const LogEntry* chosen = nullptr;
    std::uint32_t best = 0;
    for (const auto& [digest, slot] : candidates) {
      if (slot.first <= best) continue;  // map order makes ties pick the lower digest
      const WeightConfig* cfg = cfg_for(slot.second->proof.regency);
      if (!cfg || !verify_decision_proof(slot.second->proof, *cfg, keys)) continue;
      best = slot.first;
      chosen = slot.second;
    }
    if (!chosen) break;
    out.entries.push_back(*chosen);
  }
  return out;
}

}  // namespace wbft
