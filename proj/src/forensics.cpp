// SPDX-License-Identifier: Apache-2.0
#include "wbft/forensics.hpp"

#include <algorithm>

namespace wbft {

bool verify_decision_proof(const DecisionProof& proof, const WeightConfig& cfg,
                           const KeyStore& keys) {
  Bytes payload = vote_signing_bytes(Phase::accept, proof.instance, proof.regency, proof.value);
  std::uint64_t units = 0;
  std::set<ReplicaId> seen;
  for (const auto& sig : proof.accepts) {
    if (!cfg.has_member(sig.signer)) return false;
    if (!seen.insert(sig.signer).second) return false;  // duplicate signer
    if (!keys.check(sig.signer, payload, sig)) return false;
    units += cfg.units_of(sig.signer);
  }
  return units >= cfg.quorum_units;
}

bool verify_log_signature(const SignedLog& log, const KeyStore& keys) {
  if (!keys.check(log.owner, log.signing_bytes(), log.sig)) return false;
  for (std::size_t i = 0; i < log.entries.size(); ++i) {
    const auto& e = log.entries[i];
    if (i > 0 && e.instance != log.entries[i - 1].instance + 1) return false;
    if (e.proof.instance != e.instance) return false;
    if (e.proof.value != e.value()) return false;
  }
  return true;
}

namespace {
const LogEntry* entry_at(const SignedLog& log, Instance i) {
  if (log.entries.empty()) return nullptr;
  Instance base = log.entries.front().instance;
  if (i < base || i >= base + log.entries.size()) return nullptr;
  return &log.entries[static_cast<std::size_t>(i - base)];
}
}  // namespace

std::optional<Instance> first_divergence(const SignedLog& a, const SignedLog& b) {
  if (a.entries.empty() || b.entries.empty()) return std::nullopt;
  Instance lo = std::max(a.entries.front().instance, b.entries.front().instance);
  Instance hi = std::min(a.entries.back().instance, b.entries.back().instance);
  for (Instance i = lo; i <= hi; ++i) {
    const auto* ea = entry_at(a, i);
    const auto* eb = entry_at(b, i);
    if (ea->value() != eb->value()) return i;
  }
  return std::nullopt;
}

std::optional<ProofOfCulpability> find_culpability(const SignedLog& a, const SignedLog& b,
                                                   const KeyStore& keys,
                                                   const ConfigLookup& cfg_for) {
  auto diverging = first_divergence(a, b);
  if (!diverging) return std::nullopt;

  const LogEntry* ea = entry_at(a, *diverging);
  const LogEntry* eb = entry_at(b, *diverging);

  auto invalid_poc = [&](const SignedLog& log, const LogEntry& entry) {
    ProofOfCulpability poc;
    poc.kind = PocKind::invalid_proof;
    poc.instance = entry.instance;
    poc.regency = entry.regency;
    poc.culprits = {log.owner};
    poc.bad_log = log;
    return poc;
  };

  const WeightConfig* cfg_a = cfg_for(ea->regency);
  const WeightConfig* cfg_b = cfg_for(eb->regency);
  if (!cfg_a || !verify_decision_proof(ea->proof, *cfg_a, keys)) return invalid_poc(a, *ea);
  if (!cfg_b || !verify_decision_proof(eb->proof, *cfg_b, keys)) return invalid_poc(b, *eb);

  // Both proofs valid: replicas that signed ACCEPTs for both values are the
  // equivocators. Proofs over different regencies cannot conflict (a regency
  // decides an instance at most once per correct replica), so only the
  // same-regency case yields a double-accept proof.
  if (ea->regency != eb->regency) return std::nullopt;

  std::set<ReplicaId> signers_a;
  for (const auto& s : ea->proof.accepts) signers_a.insert(s.signer);
  ProofOfCulpability poc;
  poc.kind = PocKind::double_accept;
  poc.instance = *diverging;
  poc.regency = ea->regency;
  for (const auto& s : eb->proof.accepts)
    if (signers_a.count(s.signer)) poc.culprits.push_back(s.signer);
  std::sort(poc.culprits.begin(), poc.culprits.end());
  poc.proof_a = ea->proof;
  poc.proof_b = eb->proof;
  if (poc.culprits.size() < cfg_a->t_eff + 1) return std::nullopt;
  return poc;
}

std::optional<std::vector<ReplicaId>> verify_poc(const ProofOfCulpability& poc,
                                                 const KeyStore& keys,
                                                 const ConfigLookup& cfg_for) {
  if (poc.kind == PocKind::double_accept) {
    const WeightConfig* cfg = cfg_for(poc.regency);
    if (!cfg) return std::nullopt;
    const auto& pa = poc.proof_a;
    const auto& pb = poc.proof_b;
    if (pa.instance != poc.instance || pb.instance != poc.instance) return std::nullopt;
    if (pa.regency != poc.regency || pb.regency != poc.regency) return std::nullopt;
    if (pa.value == pb.value) return std::nullopt;  // no conflict
    if (!verify_decision_proof(pa, *cfg, keys)) return std::nullopt;
    if (!verify_decision_proof(pb, *cfg, keys)) return std::nullopt;

    std::set<ReplicaId> signers_a;
    for (const auto& s : pa.accepts) signers_a.insert(s.signer);
    std::vector<ReplicaId> culprits;
    for (const auto& s : pb.accepts)
      if (signers_a.count(s.signer)) culprits.push_back(s.signer);
    std::sort(culprits.begin(), culprits.end());
    culprits.erase(std::unique(culprits.begin(), culprits.end()), culprits.end());
    if (culprits.size() < cfg->t_eff + 1) return std::nullopt;
    if (culprits != poc.culprits) return std::nullopt;
    return culprits;
  }

  // invalid_proof: the signed log itself convicts its owner if the named
  // entry's decision proof fails under the regency's config.
  const auto& log = poc.bad_log;
  if (!verify_log_signature(log, keys)) return std::nullopt;
  const LogEntry* entry = entry_at(log, poc.instance);
  if (!entry) return std::nullopt;
  const WeightConfig* cfg = cfg_for(entry->regency);
  if (cfg && verify_decision_proof(entry->proof, *cfg, keys))
    return std::nullopt;  // proof is actually fine: reject the accusation
  std::vector<ReplicaId> culprits{log.owner};
  if (culprits != poc.culprits) return std::nullopt;
  return culprits;
}

void Auditor::start_checkpoint_audit(Instance boundary, Instance window_from,
                                     const std::set<ReplicaId>& camp_a,
                                     const std::set<ReplicaId>& camp_b) {
  if (!audited_boundaries_.insert(boundary).second) return;
  Audit audit;
  audit.checkpoint = true;
  audit.boundary = boundary;
  audit.from = window_from;
  audit.to = boundary;
  audit.camp_a = camp_a;
  audit.camp_b = camp_b;
  audits_.push_back(std::move(audit));
  if (hooks_.note) hooks_.note("audit_start boundary=" + std::to_string(boundary));
  for (auto id : camp_a) hooks_.fetch(id, window_from, boundary);
  for (auto id : camp_b) hooks_.fetch(id, window_from, boundary);
}

void Auditor::start_panic_audit(ProcessId client, std::uint64_t seq,
                                const std::vector<ReplicaId>& targets, Instance window_from,
                                Instance window_to) {
  if (!audited_ops_.insert({client, seq}).second) return;  // rate limit
  Audit audit;
  audit.from = window_from;
  audit.to = window_to;
  audits_.push_back(std::move(audit));
  if (hooks_.note)
    hooks_.note("audit_start panic client=" + std::to_string(client) +
                " seq=" + std::to_string(seq));
  for (auto id : targets) hooks_.fetch(id, window_from, window_to);
}

void Auditor::on_log(ReplicaId from, const SignedLog& log) {
  if (log.owner != from || !verify_log_signature(log, *keys_)) return;
  for (auto& audit : audits_) {
    if (audit.done) continue;
    audit.logs[from] = log;
    try_conclude(audit);
  }
}

void Auditor::cancel_boundary(Instance boundary) {
  for (auto& audit : audits_) {
    if (audit.checkpoint && audit.boundary == boundary && !audit.done) {
      audit.done = true;
      if (hooks_.note) hooks_.note("audit_cancelled boundary=" + std::to_string(boundary));
    }
  }
}

void Auditor::try_conclude(Audit& audit) {
  // For checkpoint audits we need one log per camp; panic audits accept any
  // divergent pair. Pairs are scanned in ascending owner order so every
  // replica concludes identically.
  for (auto ia = audit.logs.begin(); ia != audit.logs.end(); ++ia) {
    for (auto ib = std::next(ia); ib != audit.logs.end(); ++ib) {
      if (audit.checkpoint) {
        bool cross = (audit.camp_a.count(ia->first) && audit.camp_b.count(ib->first)) ||
                     (audit.camp_a.count(ib->first) && audit.camp_b.count(ia->first));
        if (!cross) continue;
      }
      auto poc = find_culpability(ia->second, ib->second, *keys_, cfg_for_);
      if (poc) {
        audit.done = true;
        hooks_.produced(*poc);
        return;
      }
    }
  }
}

}  // namespace wbft
