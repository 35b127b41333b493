// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>

#include "wbft/auth.hpp"
#include "wbft/messages.hpp"
#include "wbft/view.hpp"

namespace wbft {

/// Regency -> weight config resolver. Verifiers re-derive culpability from
/// evidence bytes plus this public, deterministically shared protocol state.
using ConfigLookup = std::function<const WeightConfig*(Regency)>;

inline ConfigLookup directory_lookup(const SystemDirectory& dir) {
  return [&dir](Regency r) { return dir.config_for(r); };
}

/// Checks a weighted quorum of ACCEPT signatures for (instance, regency,
/// value) against the config in force at that regency.
bool verify_decision_proof(const DecisionProof& proof, const WeightConfig& cfg,
                           const KeyStore& keys);

/// Owner signature plus per-entry shape (contiguous instances, entry value
/// matching its proof digest). Proof quorums are checked separately during
/// divergence analysis, as an invalid proof is itself evidence.
bool verify_log_signature(const SignedLog& log, const KeyStore& keys);

/// First instance at which two logs decide different values, if any.
std::optional<Instance> first_divergence(const SignedLog& a, const SignedLog& b);

/// Implements the evidence step of the audit: locate the first diverging
/// decision between two signed logs and build a proof of culpability.
/// Returns nothing when the logs agree on every instance both cover.
std::optional<ProofOfCulpability> find_culpability(const SignedLog& a, const SignedLog& b,
                                                   const KeyStore& keys,
                                                   const ConfigLookup& cfg_for);

/// Evidence-only re-derivation of the culprit set. Returns the culprits iff
/// every signature verifies, the digests genuinely conflict, the quorums are
/// valid under the regency's config, at least t_eff+1 replicas double-signed
/// (double_accept), and the claimed culprit list matches the derivation.
std::optional<std::vector<ReplicaId>> verify_poc(const ProofOfCulpability& poc,
                                                 const KeyStore& keys,
                                                 const ConfigLookup& cfg_for);

/// Event-driven auditor state machine (one per replica). The owner wires the
/// hooks; audits fetch logs from both camps in parallel and emit at most one
/// PoC each. A checkpoint audit cancels itself when the boundary becomes
/// stable before evidence is complete.
class Auditor {
 public:
  struct Hooks {
    std::function<void(ReplicaId target, Instance from, Instance to)> fetch;
    std::function<void(const ProofOfCulpability&)> produced;
    std::function<void(const std::string& what)> note;
  };

  Auditor(const KeyStore* keys, ConfigLookup cfg_for, Hooks hooks)
      : keys_(keys), cfg_for_(std::move(cfg_for)), hooks_(std::move(hooks)) {}

  void start_checkpoint_audit(Instance boundary, Instance window_from,
                              const std::set<ReplicaId>& camp_a,
                              const std::set<ReplicaId>& camp_b);

  /// Panic-triggered audit; fans out to the whole roster, window narrowed by
  /// the caller. At most one audit per (client, seq) is ever started.
  void start_panic_audit(ProcessId client, std::uint64_t seq,
                         const std::vector<ReplicaId>& targets, Instance window_from,
                         Instance window_to);

  void on_log(ReplicaId from, const SignedLog& log);

  /// Stable checkpoint reached for this boundary: abandon the matching audit.
  void cancel_boundary(Instance boundary);

  bool has_audited_op(ProcessId client, std::uint64_t seq) const {
    return audited_ops_.count({client, seq}) > 0;
  }

 private:
  struct Audit {
    bool checkpoint = false;
    Instance boundary = 0;
    Instance from = 0;
    Instance to = 0;
    std::set<ReplicaId> camp_a;  // empty camps = any divergent pair qualifies
    std::set<ReplicaId> camp_b;
    std::map<ReplicaId, SignedLog> logs;
    bool done = false;
  };

  void try_conclude(Audit& audit);

  const KeyStore* keys_;
  ConfigLookup cfg_for_;
  Hooks hooks_;
  std::vector<Audit> audits_;
  std::set<std::pair<ProcessId, std::uint64_t>> audited_ops_;
  std::set<Instance> audited_boundaries_;
};

}  // namespace wbft
