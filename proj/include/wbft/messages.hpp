// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "wbft/auth.hpp"
#include "wbft/common.hpp"
#include "wbft/wire.hpp"

namespace wbft {

// Wire layout: one type byte followed by the message body; every field is
// length-prefixed or fixed width (see wire.hpp). Signed messages sign the
// body encoded without the trailing signature, so signatures are stable for
// identical logical content.

constexpr ProcessId kReplicaClientBase = 0x80000000u;
inline bool is_replica_client(ProcessId id) { return id >= kReplicaClientBase; }
inline ProcessId replica_client(ReplicaId id) { return kReplicaClientBase + id; }

struct Request {
  ProcessId client = 0;
  std::uint64_t seq = 0;
  Bytes payload;
  Signature sig;

  Bytes signing_bytes() const;
  bool operator==(const Request&) const = default;
};

using Batch = std::vector<Request>;

Bytes encode_batch(const Batch& batch);
Batch decode_batch(const Bytes& bytes);
Digest batch_digest(const Batch& batch);

struct Propose {
  Instance instance = 0;
  Regency regency = 0;
  TimeNs propose_ts = 0;
  Batch batch;
};

enum class Phase : std::uint8_t { write = 0, accept = 1 };

struct Vote {
  Phase phase = Phase::write;
  Instance instance = 0;
  Regency regency = 0;
  Digest value;
  Signature sig;

  Bytes signing_bytes() const;
};

/// Weighted quorum of signed ACCEPT votes for one (instance, regency, value).
struct DecisionProof {
  Instance instance = 0;
  Regency regency = 0;
  Digest value;
  std::vector<Signature> accepts;
};

struct LogEntry {
  Instance instance = 0;
  Regency regency = 0;
  Batch batch;
  DecisionProof proof;

  Digest value() const { return batch_digest(batch); }
};

struct Reply {
  ReplicaId replica = 0;
  ProcessId client = 0;
  std::uint64_t seq = 0;
  Bytes result;
  bool fast = false;
  std::uint64_t epoch = 0;
  Instance instance = 0;
  Signature sig;

  Bytes signing_bytes() const;
  bool operator==(const Reply&) const = default;
};

struct CheckpointMsg {
  ReplicaId replica = 0;
  Instance upto = 0;
  Digest state;
  std::uint64_t epoch = 0;
  Signature sig;

  Bytes signing_bytes() const;
};

enum class StopReason : std::uint8_t {
  timer_expired = 0,
  valid_poc = 1,
  latency_disappointment = 2,
};

const char* stop_reason_name(StopReason r);

struct SignedLog {
  ReplicaId owner = 0;
  std::uint64_t epoch = 0;
  bool fast = false;
  Instance last_stable = 0;  // 0 = none; boundaries are 1-based "upto" instances
  std::vector<std::pair<Instance, Digest>> boundaries;
  std::vector<LogEntry> entries;
  Signature sig;

  Bytes signing_bytes() const;
};

enum class PocKind : std::uint8_t { invalid_proof = 0, double_accept = 1 };

/// Non-repudiable evidence identifying equivocators: either two valid
/// conflicting decision proofs (culprits signed ACCEPTs in both) or a signed
/// log whose decision proof does not verify (culprit is the log owner).
struct ProofOfCulpability {
  PocKind kind = PocKind::double_accept;
  Instance instance = 0;
  Regency regency = 0;
  std::vector<ReplicaId> culprits;
  DecisionProof proof_a;
  DecisionProof proof_b;
  SignedLog bad_log;  // only for invalid_proof
};

struct StopMsg {
  ReplicaId replica = 0;
  Regency regency = 0;  // regency being aborted
  StopReason reason = StopReason::timer_expired;
  std::optional<ProofOfCulpability> poc;
  Signature sig;

  Bytes signing_bytes() const;
};

struct SyncLogMsg {
  Regency new_regency = 0;
  SignedLog log;
};

/// Broadcast by the new leader; every replica recomputes the fixed history
/// from the embedded signed logs, so a faulty leader cannot forge content,
/// only select which logs to include.
struct SyncBundle {
  Regency new_regency = 0;
  bool ran_forensics = false;
  bool extras_timed_out = false;  // could not gather the t_fast+1 extra logs
  std::vector<SignedLog> logs;
  Signature sig;

  Bytes signing_bytes() const;
};

struct PocMsg {
  ReplicaId replica = 0;
  ProofOfCulpability poc;
  Signature sig;

  Bytes signing_bytes() const;
};

struct PanicMsg {
  ProcessId client = 0;
  std::uint64_t seq = 0;
  Reply reply_a;
  Reply reply_b;
  Signature sig;

  Bytes signing_bytes() const;
};

struct LogQuery {
  ProcessId client = 0;
  std::uint64_t seq = 0;
  Signature sig;

  Bytes signing_bytes() const;
};

struct LogInfo {
  ReplicaId replica = 0;
  ProcessId client = 0;
  std::uint64_t seq = 0;
  bool found = false;
  Instance instance = 0;
  Digest value;
  Bytes result;
  bool covered_stable = false;
  std::uint64_t epoch = 0;
  bool fast = false;
  Signature sig;

  Bytes signing_bytes() const;
};

/// Auditor's log retrieval request (window of instances).
struct LogFetch {
  ReplicaId requester = 0;
  Instance from = 0;
  Instance to = 0;
};

/// Response to a LogFetch: the responder's signed log over the window.
struct AuditLogMsg {
  ReplicaId responder = 0;
  SignedLog log;
};

using AnyMsg = std::variant<Request, Propose, Vote, Reply, CheckpointMsg, StopMsg, SyncLogMsg,
                            SyncBundle, PocMsg, PanicMsg, LogQuery, LogInfo, LogFetch,
                            AuditLogMsg>;

Bytes encode_message(const AnyMsg& msg);
std::optional<AnyMsg> decode_message(const Bytes& bytes);

// Encodings reused by proofs and logs.
void encode_proof(wire::Writer& w, const DecisionProof& p);
DecisionProof decode_proof(wire::Reader& r);
void encode_signed_log(wire::Writer& w, const SignedLog& log);
SignedLog decode_signed_log(wire::Reader& r);
void encode_poc(wire::Writer& w, const ProofOfCulpability& poc);
ProofOfCulpability decode_poc(wire::Reader& r);

/// Canonical bytes an ACCEPT/WRITE signature covers; used when verifying
/// proofs built from votes.
Bytes vote_signing_bytes(Phase phase, Instance instance, Regency regency, const Digest& value);

// Reconfiguration rides in a batch as a replica-signed system request with a
// recognizable payload prefix.
Bytes make_reconfigure_payload(const std::vector<ReplicaId>& culprits,
                               const ProofOfCulpability& poc);
bool is_reconfigure_payload(const Bytes& payload);
std::optional<std::pair<std::vector<ReplicaId>, ProofOfCulpability>> parse_reconfigure_payload(
    const Bytes& payload);

}  // namespace wbft
