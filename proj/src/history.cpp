// SPDX-License-Identifier: Apache-2.0
#include "wbft/history.hpp"

#include <algorithm>

#include "wbft/forensics.hpp"
#include "wbft/service.hpp"

namespace wbft {

HistoryCheck check_history(const Trace& trace, const KeyStore& keys, bool check_strong) {
  HistoryCheck out;
  auto fail = [&](const std::string& what) { out.violations.push_back(what); };

  bool scripted_equivocation = !trace.coalition.empty();
  auto is_crashed = [&](ReplicaId id) {
    return std::find(trace.crashed_or_silent.begin(), trace.crashed_or_silent.end(), id) !=
           trace.crashed_or_silent.end();
  };

  // Canonical history: longest log among live honest replicas.
  const std::vector<LogEntry>* canonical = nullptr;
  ReplicaId canonical_owner = 0;
  for (const auto& [id, log] : trace.final_logs) {
    if (is_crashed(id)) continue;
    if (!canonical || log.size() > canonical->size()) {
      canonical = &log;
      canonical_owner = id;
    }
  }
  if (!canonical) {
    fail("no honest replica log available");
    return out;
  }
  out.canonical = *canonical;

  // Proof validity over the canonical chain.
  std::map<Regency, const WeightConfig*> cfg_by_regency;
  for (const auto& v : trace.views) cfg_by_regency[v.regency] = &v.thresholds.config;
  auto lookup = [&](Regency r) -> const WeightConfig* {
    auto it = cfg_by_regency.find(r);
    return it == cfg_by_regency.end() ? nullptr : it->second;
  };
  for (const auto& entry : *canonical) {
    const WeightConfig* cfg = lookup(entry.proof.regency);
    if (!cfg || !verify_decision_proof(entry.proof, *cfg, keys)) {
      fail("decision proof fails verification at instance " + std::to_string(entry.instance));
      break;
    }
  }

  // Agreement: honest logs are pairwise prefix-consistent when no scripted
  // coalition could split quorums; with one, converged logs must agree.
  for (const auto& [id, log] : trace.final_logs) {
    if (id == canonical_owner) continue;
    if (scripted_equivocation && (is_crashed(id) || log.size() < canonical->size())) continue;
    std::size_t upto = std::min(log.size(), canonical->size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (!(log[i].value() == (*canonical)[i].value())) {
        fail("honest replicas " + std::to_string(id) + " and " + std::to_string(canonical_owner) +
             " decided different values at instance " + std::to_string(i));
        break;
      }
    }
  }

  // Re-execute the canonical chain to learn each operation's authoritative
  // reply and execution position.
  ChainService replay;
  struct ExecInfo {
    std::size_t order;
    Bytes reply;
  };
  std::map<std::pair<ProcessId, std::uint64_t>, ExecInfo> executed;
  std::size_t order = 0;
  for (const auto& entry : *canonical) {
    std::vector<std::pair<ProcessId, std::uint64_t>> reqs;
    for (const auto& r : entry.batch) reqs.emplace_back(r.client, r.seq);
    for (const auto& ex : replay.apply(entry.instance, encode_batch(entry.batch), reqs)) {
      if (!ex.fresh) continue;
      executed[{ex.client, ex.seq}] = {order++, ex.reply};
    }
  }

  // Finalized results must match the canonical execution and respect
  // real-time order.
  struct Final {
    ProcessId client;
    std::uint64_t seq;
    TimeNs invoke;
    TimeNs final_ts;
    std::size_t order;
  };
  std::vector<Final> finals;
  for (const auto& row : trace.ops) {
    const auto& op = row.op;
    if (op.final_ts < 0) continue;
    ++out.finalized_ops;
    auto key = std::make_pair(row.client, op.seq);
    auto it = executed.find(key);
    if (it == executed.end()) {
      fail("finalized op c" + std::to_string(row.client) + "#" + std::to_string(op.seq) +
           " missing from the canonical history");
      continue;
    }
    if (it->second.reply != op.result) {
      fail("finalized result for c" + std::to_string(row.client) + "#" + std::to_string(op.seq) +
           " contradicts the canonical history");
      continue;
    }
    finals.push_back({row.client, op.seq, op.invoke, op.final_ts, it->second.order});

    if (check_strong && op.strong >= 0 && !op.strong_result.empty() &&
        op.strong_result != it->second.reply) {
      fail("strong-level result for c" + std::to_string(row.client) + "#" +
           std::to_string(op.seq) + " contradicts the canonical history");
    }
  }

  std::sort(finals.begin(), finals.end(),
            [](const Final& a, const Final& b) { return a.final_ts < b.final_ts; });
  for (std::size_t i = 0; i < finals.size(); ++i) {
    for (std::size_t j = i + 1; j < finals.size(); ++j) {
      if (finals[i].final_ts < finals[j].invoke && finals[i].order > finals[j].order) {
        fail("real-time order violated between c" + std::to_string(finals[i].client) + "#" +
             std::to_string(finals[i].seq) + " and c" + std::to_string(finals[j].client) + "#" +
             std::to_string(finals[j].seq));
      }
    }
  }

  return out;
}

}  // namespace wbft
