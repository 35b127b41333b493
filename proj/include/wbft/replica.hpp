// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <set>

#include "wbft/forensics.hpp"
#include "wbft/modes.hpp"
#include "wbft/runtime.hpp"
#include "wbft/service.hpp"

namespace wbft {

struct ReplicaParams {
  std::uint32_t n = 4;
  std::uint32_t t = 1;
  std::uint32_t checkpoint_k = 16;
  std::uint32_t theta = 400;
  std::uint32_t reopt_interval = 200;
  std::uint32_t batch_max = 64;
  Pattern pattern = Pattern::three_step;
  WeightScheme scheme = WeightScheme::bimodal;
  bool allow_fast = true;
  TimeNs request_timer_floor = 500 * kMsNs;
  std::uint32_t watchdog_window = 32;
};

/// Per-replica consensus state machine: three-phase normal case with
/// weighted vote collection, decision log with proofs, periodic
/// checkpointing, the abortable fast/conservative mode controller, the
/// synchronization phase, and the forensics auditor. Strictly single
/// threaded; the simulator owns all scheduling.
class Replica : public Process {
 public:
  Replica(ReplicaId id, const KeyStore* keys, ReplicaParams params);

  void start(Context& ctx) override;
  void on_message(ProcessId from, const AnyMsg& msg) override;
  void on_timer(std::uint64_t tag) override;

  // Introspection for harnesses and tests.
  ReplicaId id() const { return id_; }
  const std::vector<LogEntry>& log() const { return log_; }
  const ViewInfo& view() const { return view_; }
  bool fast() const { return view_.fast; }
  Regency regency() const { return regency_; }
  std::uint64_t epoch() const { return epoch_; }
  const std::vector<ReplicaId>& roster() const { return roster_; }
  Instance stable_upto() const { return stable_upto_; }
  Digest service_digest() const { return service_.state_digest(); }
  std::size_t pending_count() const { return pending_.size(); }
  bool in_sync() const { return in_sync_; }
  SignedLog export_signed_log(Instance from, Instance to) const;

  /// Harness hook: lets the scripted adversary perturb the batch an
  /// equivocating leader proposes. Never set on correct replicas.
  void set_batch_hook(std::function<void(Batch&)> hook) { batch_hook_ = std::move(hook); }

 private:
  struct InstanceState {
    struct Proposal {
      Batch batch;
      TimeNs propose_ts = 0;
    };
    std::map<Digest, Proposal> proposals;
    std::map<Digest, std::map<ReplicaId, Signature>> writes;
    std::map<Digest, std::map<ReplicaId, Signature>> accepts;
    bool wrote = false;
    bool accepted = false;
    bool decided = false;
  };

  struct DecidedInfo {
    LogEntry entry;
    TimeNs decide_ts = 0;
    TimeNs propose_ts = -1;  // -1: adopted from sync, not locally timed
  };

  enum class TimerKind { request, sync, sync_extras };
  struct TimerInfo {
    TimerKind kind;
    ProcessId client = 0;
    std::uint64_t seq = 0;
    Regency regency = 0;
    std::uint64_t id = 0;  // context timer id
  };

  // -- view construction ----------------------------------------------------
  WeightConfig conservative_cfg();
  ViewInfo make_view(Regency r, bool fast, ReplicaId leader, WeightConfig cfg);
  void install_view(ViewInfo v, const char* why);
  void refresh_expectation();
  TimeNs request_timer_duration() const;

  // -- request handling -----------------------------------------------------
  void handle_request(const Request& req, bool from_client);
  void arm_request_timer(ProcessId client, std::uint64_t seq);
  void cancel_request_timer(ProcessId client, std::uint64_t seq);
  void propose_next();

  // -- consensus ------------------------------------------------------------
  void handle_propose(ProcessId from, const Propose& p);
  void handle_vote(const Vote& v);
  bool validate_batch(const Batch& batch) const;
  void try_decide(Instance instance);
  void decide(Instance instance, const Digest& value);
  void try_execute();
  void execute_entry(const DecidedInfo& info, bool replaying);
  void post_decide_bookkeeping(const DecidedInfo& info);

  // -- checkpoints & audits -------------------------------------------------
  void take_checkpoint(Instance upto);
  void handle_checkpoint(const CheckpointMsg& m);
  void evaluate_checkpoint(Instance upto);
  void handle_log_fetch(ProcessId from, const LogFetch& f);
  void on_poc_produced(const ProofOfCulpability& poc);
  void handle_poc_msg(const PocMsg& m);
  void handle_panic(const PanicMsg& m);
  void handle_log_query(ProcessId from, const LogQuery& q);

  // -- mode switching & sync ------------------------------------------------
  void switch_to_fast();
  void reoptimize(Instance at);
  void request_abort(StopReason reason, const ProofOfCulpability* poc);
  void handle_stop(const StopMsg& m);
  void maybe_enter_sync();
  void enter_sync();
  void handle_sync_log(const SyncLogMsg& m);
  void leader_try_bundle(bool extras_deadline);
  void handle_sync_bundle(ProcessId from, const SyncBundle& b);
  void adopt_fixed(const FixedHistory& fixed);
  void apply_reconfigure(const std::vector<ReplicaId>& culprits);
  void rebuild_pending();

  void dispatch(ProcessId from, const AnyMsg& msg);
  void buffer_future(Regency r, ProcessId from, const AnyMsg& msg);
  void pump();

  ReplicaId id_;
  const KeyStore* keys_;
  Signer signer_;
  ReplicaParams params_;
  Context* ctx_ = nullptr;

  std::vector<ReplicaId> roster_;
  std::uint32_t t_ = 0;
  std::uint32_t t_fast_ = 0;
  std::uint64_t epoch_ = 0;

  Regency regency_ = 0;
  ViewInfo view_;
  bool in_sync_ = false;

  std::map<Instance, InstanceState> instances_;
  std::map<Instance, DecidedInfo> decided_buf_;
  std::vector<LogEntry> log_;
  ChainService service_;
  std::map<std::pair<ProcessId, std::uint64_t>, Instance> op_index_;

  std::map<std::pair<ProcessId, std::uint64_t>, Request> requests_seen_;
  std::set<std::pair<ProcessId, std::uint64_t>> pending_;
  std::map<std::pair<ProcessId, std::uint64_t>, std::uint64_t> request_timers_;  // -> tag

  std::map<Instance, Bytes> snapshots_;     // keyed by covered-instance count
  std::map<Instance, Digest> my_ckpt_;
  std::map<Instance, std::map<Digest, std::set<ReplicaId>>> ckpt_votes_;
  Instance stable_upto_ = 0;

  ModeController modes_;
  Auditor auditor_;

  std::map<Regency, std::map<ReplicaId, StopMsg>> stops_;
  std::set<Regency> stop_sent_;
  bool abort_was_fast_ = false;
  std::set<StopReason> sync_reasons_;
  ReplicaId sync_leader_ = 0;
  std::map<ReplicaId, SignedLog> sync_logs_;  // collected as sync leader
  bool bundle_sent_ = false;
  bool extras_timer_armed_ = false;

  std::map<Regency, std::vector<std::pair<ProcessId, AnyMsg>>> future_;

  std::optional<Instance> outstanding_;  // leader's in-flight proposal
  std::optional<std::pair<std::vector<ReplicaId>, ProofOfCulpability>> pending_reconfigure_;

  std::uint64_t next_timer_tag_ = 1;
  std::map<std::uint64_t, TimerInfo> timers_;

  bool epoch_changed_ = false;
  bool needs_drain_ = false;

  std::function<void(Batch&)> batch_hook_;
};

}  // namespace wbft
