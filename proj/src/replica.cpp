// SPDX-License-Identifier: Apache-2.0
#include "wbft/replica.hpp"

#include <algorithm>
#include <limits>

namespace wbft {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

Replica::Replica(ReplicaId id, const KeyStore* keys, ReplicaParams params)
    : id_(id),
      keys_(keys),
      signer_(keys->signer_for(id)),
      params_(params),
      modes_(params.theta, params.watchdog_window),
      auditor_(keys, nullptr, {}) {
  roster_.resize(params_.n);
  for (std::uint32_t i = 0; i < params_.n; ++i) roster_[i] = i;
  t_ = params_.t;
  t_fast_ = fast_threshold(t_);
}

void Replica::start(Context& ctx) {
  ctx_ = &ctx;

  auditor_ = Auditor(
      keys_, directory_lookup(ctx.directory()),
      Auditor::Hooks{
          [this](ReplicaId target, Instance from, Instance to) {
            ctx_->send(target, LogFetch{id_, from, to});
          },
          [this](const ProofOfCulpability& poc) { on_poc_produced(poc); },
          [this](const std::string& what) { ctx_->timeline("audit", what); },
      });

  MembershipInfo m0;
  m0.epoch = 0;
  m0.roster = roster_;
  m0.t = t_;
  m0.t_fast = t_fast_;
  ctx.directory().ensure_epoch(m0);

  ViewInfo v0;
  if (params_.scheme == WeightScheme::bimodal) {
    AnnealResult ar = ctx.annealed_config(roster_, t_);
    v0 = make_view(0, false, ar.leader, ar.cfg);
  } else {
    v0 = make_view(0, false, roster_.front(), egalitarian_config(roster_, t_));
  }
  install_view(std::move(v0), nullptr);
  refresh_expectation();
  pump();
}

// ---------------------------------------------------------------------------
// views

WeightConfig Replica::conservative_cfg() {
  if (params_.scheme == WeightScheme::bimodal)
    return ctx_->annealed_config(roster_, t_).cfg;
  return egalitarian_config(roster_, t_);
}

ViewInfo Replica::make_view(Regency r, bool fast, ReplicaId leader, WeightConfig cfg) {
  ViewInfo v;
  v.regency = r;
  v.epoch = epoch_;
  v.fast = fast;
  v.leader = leader;
  v.thresholds = make_thresholds(std::move(cfg), fast);
  return v;
}

void Replica::install_view(ViewInfo v, const char* why) {
  regency_ = v.regency;
  view_ = std::move(v);
  ctx_->directory().ensure_view(view_);
  if (why)
    ctx_->timeline(why, "r" + std::to_string(id_) + " regency=" + std::to_string(regency_) +
                            " fast=" + (view_.fast ? std::string("1") : std::string("0")) +
                            " leader=" + std::to_string(view_.leader));
  needs_drain_ = true;
}

void Replica::refresh_expectation() {
  TimeNs expect;
  if (params_.scheme == WeightScheme::bimodal) {
    expect = ctx_->annealed_config(roster_, t_).predicted_ns;
  } else {
    expect = ctx_->predict_current(view_.thresholds.config, view_.leader, params_.pattern);
  }
  modes_.set_expectation(expect);
}

TimeNs Replica::request_timer_duration() const {
  return std::max<TimeNs>(params_.request_timer_floor, 2 * modes_.expectation());
}

// ---------------------------------------------------------------------------
// dispatch

void Replica::on_message(ProcessId from, const AnyMsg& msg) {
  dispatch(from, msg);
  pump();
}

void Replica::dispatch(ProcessId from, const AnyMsg& msg) {
  std::visit(
      overloaded{
          [&](const Request& m) { handle_request(m, true); },
          [&](const Propose& m) {
            if (m.regency < regency_) return;
            if (m.regency > regency_ || in_sync_) return buffer_future(m.regency, from, msg);
            handle_propose(from, m);
          },
          [&](const Vote& m) {
            if (m.regency < regency_) return;
            if (m.regency > regency_ || in_sync_) return buffer_future(m.regency, from, msg);
            handle_vote(m);
          },
          [&](const Reply&) {},
          [&](const CheckpointMsg& m) { handle_checkpoint(m); },
          [&](const StopMsg& m) { handle_stop(m); },
          [&](const SyncLogMsg& m) { handle_sync_log(m); },
          [&](const SyncBundle& m) {
            if (m.new_regency > regency_) return buffer_future(m.new_regency, from, msg);
            handle_sync_bundle(from, m);
          },
          [&](const PocMsg& m) { handle_poc_msg(m); },
          [&](const PanicMsg& m) { handle_panic(m); },
          [&](const LogQuery& m) { handle_log_query(from, m); },
          [&](const LogInfo&) {},
          [&](const LogFetch& m) { handle_log_fetch(from, m); },
          [&](const AuditLogMsg& m) { auditor_.on_log(m.log.owner, m.log); },
      },
      msg);
}

void Replica::buffer_future(Regency r, ProcessId from, const AnyMsg& msg) {
  future_[r].emplace_back(from, msg);
}

// Buffered messages are replayed only at the top of the event loop, never
// from inside a handler, so view changes cannot reenter half-finished state
// transitions. Consensus messages re-buffer themselves while a sync is
// running.
void Replica::pump() {
  while (needs_drain_) {
    needs_drain_ = false;
    while (!future_.empty() && future_.begin()->first < regency_) future_.erase(future_.begin());
    auto it = future_.find(regency_);
    if (it == future_.end()) continue;
    auto pending = std::move(it->second);
    future_.erase(it);
    for (auto& [from, msg] : pending) dispatch(from, msg);
  }
}

// ---------------------------------------------------------------------------
// requests

void Replica::handle_request(const Request& req, bool /*from_client*/) {
  if (is_replica_client(req.client)) return;  // system requests only ride in batches
  if (!keys_->check(req.client, req.signing_bytes(), req.sig)) return;  // dropped silently

  auto key = std::make_pair(req.client, req.seq);
  std::uint64_t last = service_.last_executed_seq(req.client);
  if (req.seq <= last) {
    // Duplicate of an executed request: answer from the reply cache.
    if (auto cached = service_.cached_reply(req.client, req.seq)) {
      Reply rep;
      rep.replica = id_;
      rep.client = req.client;
      rep.seq = req.seq;
      rep.result = *cached;
      rep.fast = view_.fast;
      rep.epoch = epoch_;
      auto idx = op_index_.find(key);
      rep.instance = idx == op_index_.end() ? 0 : idx->second;
      rep.sig = signer_.attest(rep.signing_bytes());
      ctx_->send(req.client, rep);
    }
    return;
  }

  bool fresh = requests_seen_.emplace(key, req).second;
  if (fresh) {
    pending_.insert(key);
    arm_request_timer(req.client, req.seq);
  }
  if (!in_sync_ && view_.leader == id_ && !outstanding_) propose_next();
}

void Replica::arm_request_timer(ProcessId client, std::uint64_t seq) {
  auto key = std::make_pair(client, seq);
  if (request_timers_.count(key)) return;
  std::uint64_t tag = next_timer_tag_++;
  TimerInfo info;
  info.kind = TimerKind::request;
  info.client = client;
  info.seq = seq;
  info.id = ctx_->set_timer(request_timer_duration(), tag);
  timers_[tag] = info;
  request_timers_[key] = tag;
}

void Replica::cancel_request_timer(ProcessId client, std::uint64_t seq) {
  auto key = std::make_pair(client, seq);
  auto it = request_timers_.find(key);
  if (it == request_timers_.end()) return;
  auto tit = timers_.find(it->second);
  if (tit != timers_.end()) {
    ctx_->cancel_timer(tit->second.id);
    timers_.erase(tit);
  }
  request_timers_.erase(it);
}

void Replica::propose_next() {
  if (in_sync_ || view_.leader != id_ || outstanding_) return;

  Batch batch;
  if (pending_reconfigure_) {
    auto& [culprits, poc] = *pending_reconfigure_;
    std::vector<ReplicaId> still;
    for (auto id : culprits)
      if (std::binary_search(roster_.begin(), roster_.end(), id)) still.push_back(id);
    if (!still.empty()) {
      Request req;
      req.client = replica_client(id_);
      req.seq = regency_;
      req.payload = make_reconfigure_payload(culprits, poc);
      req.sig = keys_->signer_for(req.client).attest(req.signing_bytes());
      batch.push_back(std::move(req));
    }
    pending_reconfigure_.reset();
  }

  if (batch.empty()) {
    for (const auto& key : pending_) {
      batch.push_back(requests_seen_.at(key));
      if (batch.size() >= params_.batch_max) break;
    }
    if (batch.empty()) return;
  }

  if (batch_hook_) batch_hook_(batch);

  Propose p;
  p.instance = log_.size() + decided_buf_.size();
  p.regency = regency_;
  p.propose_ts = ctx_->now();
  p.batch = std::move(batch);
  outstanding_ = p.instance;
  ctx_->broadcast_replicas(p);
}

// ---------------------------------------------------------------------------
// consensus

bool Replica::validate_batch(const Batch& batch) const {
  if (batch.empty()) return false;
  for (const auto& req : batch) {
    if (!keys_->check(req.client, req.signing_bytes(), req.sig)) return false;
    if (is_replica_client(req.client)) {
      auto parsed = parse_reconfigure_payload(req.payload);
      if (!parsed) return false;
      auto derived = verify_poc(parsed->second, *keys_, directory_lookup(ctx_->directory()));
      if (!derived || *derived != parsed->first) return false;
    }
  }
  return true;
}

void Replica::handle_propose(ProcessId from, const Propose& p) {
  if (from != view_.leader) return;
  if (p.instance < log_.size()) return;
  auto& st = instances_[p.instance];
  if (st.decided) return;

  Digest value = batch_digest(p.batch);
  bool known = st.proposals.count(value) > 0;
  if (!known) {
    if (!st.proposals.empty()) {
      // Conflicting proposal from the same leader: keep the first, retain the
      // evidence for audits.
      ctx_->timeline("conflicting_propose",
                     "r" + std::to_string(id_) + " instance=" + std::to_string(p.instance));
      return;
    }
    if (!validate_batch(p.batch)) {
      ctx_->timeline("invalid_proposal",
                     "r" + std::to_string(id_) + " instance=" + std::to_string(p.instance));
      return;
    }
    st.proposals[value] = {p.batch, p.propose_ts};
    for (const auto& req : p.batch)
      if (!is_replica_client(req.client)) requests_seen_.emplace(std::make_pair(req.client, req.seq), req);
  }

  if (!st.wrote) {
    st.wrote = true;
    Vote v;
    v.phase = Phase::write;
    v.instance = p.instance;
    v.regency = regency_;
    v.value = value;
    v.sig = signer_.attest(v.signing_bytes());
    ctx_->broadcast_replicas(v);
  }
  try_decide(p.instance);
}

void Replica::handle_vote(const Vote& v) {
  const auto& cfg = view_.thresholds.config;
  if (!cfg.has_member(v.sig.signer)) return;
  if (v.instance < log_.size()) return;
  if (!keys_->check(v.sig.signer, v.signing_bytes(), v.sig)) return;

  auto& st = instances_[v.instance];
  if (v.phase == Phase::write) {
    st.writes[v.value][v.sig.signer] = v.sig;
    std::uint64_t units = 0;
    for (const auto& [signer, sig] : st.writes[v.value]) units += cfg.units_of(signer);
    if (units >= cfg.quorum_units && !st.accepted) {
      st.accepted = true;
      Vote a;
      a.phase = Phase::accept;
      a.instance = v.instance;
      a.regency = regency_;
      a.value = v.value;
      a.sig = signer_.attest(a.signing_bytes());
      ctx_->broadcast_replicas(a);
    }
  } else {
    st.accepts[v.value][v.sig.signer] = v.sig;
    try_decide(v.instance);
  }
}

void Replica::try_decide(Instance instance) {
  auto it = instances_.find(instance);
  if (it == instances_.end() || it->second.decided) return;
  const auto& cfg = view_.thresholds.config;
  for (const auto& [value, votes] : it->second.accepts) {
    std::uint64_t units = 0;
    for (const auto& [signer, sig] : votes) units += cfg.units_of(signer);
    if (units < cfg.quorum_units) continue;
    if (!it->second.proposals.count(value)) continue;  // batch not yet known
    decide(instance, value);
    return;
  }
}

void Replica::decide(Instance instance, const Digest& value) {
  auto& st = instances_[instance];
  st.decided = true;

  DecidedInfo info;
  info.entry.instance = instance;
  info.entry.regency = regency_;
  info.entry.batch = st.proposals[value].batch;
  info.entry.proof.instance = instance;
  info.entry.proof.regency = regency_;
  info.entry.proof.value = value;
  for (const auto& [signer, sig] : st.accepts[value]) info.entry.proof.accepts.push_back(sig);
  info.decide_ts = ctx_->now();
  info.propose_ts = st.proposals[value].propose_ts;

  decided_buf_[instance] = std::move(info);
  try_execute();
}

void Replica::try_execute() {
  while (true) {
    auto it = decided_buf_.find(log_.size());
    if (it == decided_buf_.end()) break;
    DecidedInfo info = std::move(it->second);
    decided_buf_.erase(it);
    instances_.erase(info.entry.instance);
    execute_entry(info, false);
    if (!in_sync_) post_decide_bookkeeping(info);
  }
}

void Replica::execute_entry(const DecidedInfo& info, bool replaying) {
  const LogEntry& entry = info.entry;
  Bytes batch_bytes = encode_batch(entry.batch);
  std::vector<std::pair<ProcessId, std::uint64_t>> reqs;
  reqs.reserve(entry.batch.size());
  for (const auto& req : entry.batch) reqs.emplace_back(req.client, req.seq);

  auto execs = service_.apply(entry.instance, batch_bytes, reqs);
  log_.push_back(entry);

  for (const auto& ex : execs) {
    auto key = std::make_pair(ex.client, ex.seq);
    if (ex.fresh && !op_index_.count(key)) op_index_[key] = entry.instance;
    pending_.erase(key);
    cancel_request_timer(ex.client, ex.seq);
    if (is_replica_client(ex.client)) continue;
    Reply rep;
    rep.replica = id_;
    rep.client = ex.client;
    rep.seq = ex.seq;
    rep.result = ex.reply;
    rep.fast = view_.fast;
    rep.epoch = epoch_;
    rep.instance = entry.instance;
    rep.sig = signer_.attest(rep.signing_bytes());
    ctx_->send(ex.client, rep);
  }

  // Reconfiguration requests take effect at execution, in history order.
  for (const auto& req : entry.batch) {
    if (!is_replica_client(req.client)) continue;
    auto parsed = parse_reconfigure_payload(req.payload);
    if (!parsed) continue;
    auto derived = verify_poc(parsed->second, *keys_, directory_lookup(ctx_->directory()));
    if (!derived || *derived != parsed->first) {
      ctx_->timeline("reconfigure_rejected", "r" + std::to_string(id_));
      continue;
    }
    apply_reconfigure(parsed->first);
  }

  // Snapshot at every checkpoint boundary; broadcast only in normal
  // operation (replay rebuilds local state silently).
  Instance upto = entry.instance + 1;
  if (upto % params_.checkpoint_k == 0) {
    if (replaying) {
      Bytes snap = service_.snapshot();
      my_ckpt_[upto] = sha256(snap);
      snapshots_[upto] = std::move(snap);
    } else {
      take_checkpoint(upto);
    }
  }
}

void Replica::post_decide_bookkeeping(const DecidedInfo& info) {
  const Instance inst = info.entry.instance;

  if (view_.leader == id_ && outstanding_ && *outstanding_ == inst) {
    outstanding_.reset();
    ctx_->consensus_decided(inst, info.propose_ts, info.decide_ts, view_.fast, id_);
  }

  if (view_.fast && info.propose_ts >= 0) {
    if (modes_.watchdog_sample(info.decide_ts - info.propose_ts) &&
        !stop_sent_.count(regency_)) {
      ctx_->timeline("latency_disappointment",
                     "r" + std::to_string(id_) + " instance=" + std::to_string(inst));
      request_abort(StopReason::latency_disappointment, nullptr);
    }
  }

  bool bumped = false;

  if (epoch_changed_) {
    // A reconfiguration executed in this entry: rebuild the view around the
    // surviving membership.
    epoch_changed_ = false;
    ReplicaId lead = std::binary_search(roster_.begin(), roster_.end(), view_.leader)
                         ? view_.leader
                         : next_leader(roster_, view_.leader);
    install_view(make_view(regency_ + 1, false, lead, conservative_cfg()), "reconfigure_view");
    modes_.reset_counter();
    modes_.clear_watchdog();
    refresh_expectation();
    bumped = true;
  }

  if (!bumped && !view_.fast && params_.allow_fast && modes_.on_decided_conservative()) {
    switch_to_fast();
    bumped = true;
  }

  if (!bumped && params_.scheme == WeightScheme::bimodal &&
      (inst + 1) % params_.reopt_interval == 0) {
    reoptimize(inst);
  }

  if (view_.leader == id_ && !outstanding_ && !pending_.empty()) propose_next();
}

// ---------------------------------------------------------------------------
// checkpoints & forensics plumbing

void Replica::take_checkpoint(Instance upto) {
  Bytes snap = service_.snapshot();
  Digest digest = sha256(snap);
  snapshots_[upto] = std::move(snap);
  my_ckpt_[upto] = digest;
  ckpt_votes_[upto][digest].insert(id_);

  CheckpointMsg m;
  m.replica = id_;
  m.upto = upto;
  m.state = digest;
  m.epoch = epoch_;
  m.sig = signer_.attest(m.signing_bytes());
  ctx_->broadcast_replicas(m);
  evaluate_checkpoint(upto);
}

void Replica::handle_checkpoint(const CheckpointMsg& m) {
  if (!std::binary_search(roster_.begin(), roster_.end(), m.replica)) return;
  if (!keys_->check(m.replica, m.signing_bytes(), m.sig)) return;
  ckpt_votes_[m.upto][m.state].insert(m.replica);
  evaluate_checkpoint(m.upto);
}

void Replica::evaluate_checkpoint(Instance upto) {
  auto mine_it = my_ckpt_.find(upto);
  if (mine_it == my_ckpt_.end()) return;  // not reached this boundary yet
  const Digest& mine = mine_it->second;
  auto& votes = ckpt_votes_[upto];

  std::size_t matching = votes[mine].size();
  if (matching >= roster_.size() - t_) {
    if (stable_upto_ < upto) {
      stable_upto_ = upto;
      ctx_->timeline("checkpoint_stable",
                     "r" + std::to_string(id_) + " upto=" + std::to_string(upto));
      auditor_.cancel_boundary(upto);
    }
    return;
  }

  for (const auto& [digest, voters] : votes) {
    if (digest == mine || voters.empty()) continue;
    std::set<ReplicaId> camp_a = votes[mine];
    camp_a.insert(id_);
    auditor_.start_checkpoint_audit(upto, stable_upto_, camp_a, voters);
    break;
  }
}

void Replica::handle_log_fetch(ProcessId from, const LogFetch& f) {
  Instance to = f.to;
  if (log_.empty()) to = 0;
  AuditLogMsg resp;
  resp.responder = id_;
  resp.log = export_signed_log(f.from, to);
  ctx_->send(from, resp);
}

SignedLog Replica::export_signed_log(Instance from, Instance to) const {
  SignedLog log;
  log.owner = id_;
  log.epoch = epoch_;
  log.fast = view_.fast;
  log.last_stable = stable_upto_;
  for (const auto& [upto, digest] : my_ckpt_) log.boundaries.emplace_back(upto, digest);
  for (const auto& entry : log_) {
    if (entry.instance < from || entry.instance > to) continue;
    log.entries.push_back(entry);
  }
  log.sig = keys_->signer_for(id_).attest(log.signing_bytes());
  return log;
}

void Replica::on_poc_produced(const ProofOfCulpability& poc) {
  std::string culprits;
  for (auto id : poc.culprits) culprits += std::to_string(id) + " ";
  ctx_->timeline("poc", "r" + std::to_string(id_) + " instance=" + std::to_string(poc.instance) +
                            " culprits= " + culprits);
  PocMsg m;
  m.replica = id_;
  m.poc = poc;
  m.sig = signer_.attest(m.signing_bytes());
  ctx_->broadcast_replicas(m);
  if (view_.fast && !stop_sent_.count(regency_))
    request_abort(StopReason::valid_poc, &poc);
}

void Replica::handle_poc_msg(const PocMsg& m) {
  if (!keys_->check(m.replica, m.signing_bytes(), m.sig)) return;
  auto derived = verify_poc(m.poc, *keys_, directory_lookup(ctx_->directory()));
  if (!derived) return;  // unverifiable: bearer treated as suspect, no abort
  if (view_.fast && !stop_sent_.count(regency_)) request_abort(StopReason::valid_poc, &m.poc);
}

void Replica::handle_panic(const PanicMsg& m) {
  if (!view_.fast) return;  // rule scoped to fast mode
  if (!keys_->check(m.client, m.signing_bytes(), m.sig)) return;
  const Reply& a = m.reply_a;
  const Reply& b = m.reply_b;
  if (a.client != m.client || b.client != m.client || a.seq != m.seq || b.seq != m.seq) return;
  if (!a.fast || !b.fast) return;
  if (a.result == b.result) return;
  if (!std::binary_search(roster_.begin(), roster_.end(), a.replica) ||
      !std::binary_search(roster_.begin(), roster_.end(), b.replica))
    return;
  if (!keys_->check(a.replica, a.signing_bytes(), a.sig)) return;
  if (!keys_->check(b.replica, b.signing_bytes(), b.sig)) return;
  if (auditor_.has_audited_op(m.client, m.seq)) return;

  Instance to = log_.empty() ? 0 : log_.back().instance;
  auto idx = op_index_.find({m.client, m.seq});
  if (idx != op_index_.end()) to = idx->second;
  ctx_->timeline("panic", "r" + std::to_string(id_) + " client=" + std::to_string(m.client) +
                              " seq=" + std::to_string(m.seq));
  auditor_.start_panic_audit(m.client, m.seq, roster_, stable_upto_, to);
}

void Replica::handle_log_query(ProcessId from, const LogQuery& q) {
  if (!keys_->check(q.client, q.signing_bytes(), q.sig)) return;
  LogInfo info;
  info.replica = id_;
  info.client = q.client;
  info.seq = q.seq;
  auto idx = op_index_.find({q.client, q.seq});
  if (idx != op_index_.end() && idx->second < log_.size()) {
    info.found = true;
    info.instance = idx->second;
    info.value = log_[idx->second].value();
    if (auto cached = service_.cached_reply(q.client, q.seq)) info.result = *cached;
    info.covered_stable = idx->second < stable_upto_;
  }
  info.epoch = epoch_;
  info.fast = view_.fast;
  info.sig = signer_.attest(info.signing_bytes());
  ctx_->send(from, info);
}

// ---------------------------------------------------------------------------
// mode switching & synchronization phase

void Replica::switch_to_fast() {
  AnnealResult ar = ctx_->annealed_config(roster_, t_fast_);
  install_view(make_view(regency_ + 1, true, ar.leader, ar.cfg), "mode_switch");
  modes_.reset_counter();
  modes_.clear_watchdog();
  refresh_expectation();
}

void Replica::reoptimize(Instance /*at*/) {
  std::uint32_t t_eff = view_.fast ? t_fast_ : t_;
  AnnealResult ar = ctx_->annealed_config(roster_, t_eff);
  refresh_expectation();
  if (ar.leader == view_.leader && ar.cfg == view_.thresholds.config) return;
  install_view(make_view(regency_ + 1, view_.fast, ar.leader, ar.cfg), "reoptimize");
}

void Replica::request_abort(StopReason reason, const ProofOfCulpability* poc) {
  if (stop_sent_.count(regency_)) return;
  if (reason != StopReason::timer_expired && !view_.fast && !in_sync_) return;
  stop_sent_.insert(regency_);
  StopMsg m;
  m.replica = id_;
  m.regency = regency_;
  m.reason = reason;
  if (poc) m.poc = *poc;
  m.sig = signer_.attest(m.signing_bytes());
  ctx_->timeline("abort", "r" + std::to_string(id_) + " regency=" + std::to_string(regency_) +
                              " reason=" + stop_reason_name(reason));
  ctx_->broadcast_replicas(m);
}

void Replica::handle_stop(const StopMsg& m) {
  if (!std::binary_search(roster_.begin(), roster_.end(), m.replica)) return;
  if (!keys_->check(m.replica, m.signing_bytes(), m.sig)) return;
  if (m.regency < regency_) return;
  if (m.regency > regency_) return buffer_future(m.regency, m.replica, AnyMsg{m});

  stops_[m.regency][m.replica] = m;
  if (m.poc) {
    auto derived = verify_poc(*m.poc, *keys_, directory_lookup(ctx_->directory()));
    if (derived && view_.fast && !stop_sent_.count(regency_))
      request_abort(StopReason::valid_poc, &*m.poc);
  }
  maybe_enter_sync();
}

void Replica::maybe_enter_sync() {
  auto it = stops_.find(regency_);
  if (it == stops_.end()) return;
  auto& collected = it->second;
  if (collected.size() < t_ + 1) return;

  if (!stop_sent_.count(regency_)) {
    StopReason reason = StopReason::latency_disappointment;
    for (const auto& [id, stop] : collected) reason = ModeController::severest(reason, stop.reason);
    request_abort(reason, nullptr);
  }
  enter_sync();
}

void Replica::enter_sync() {
  if (!in_sync_) {
    // A cascaded sync (previous one timed out) keeps the original abort
    // facts; only a fresh abort records them.
    abort_was_fast_ = view_.fast;
    sync_reasons_.clear();
  }
  for (const auto& [id, stop] : stops_[regency_]) sync_reasons_.insert(stop.reason);

  ReplicaId prev_leader = in_sync_ ? sync_leader_ : view_.leader;
  Regency target = regency_ + 1;
  sync_leader_ = next_leader(roster_, prev_leader);
  in_sync_ = true;
  regency_ = target;
  bundle_sent_ = false;
  extras_timer_armed_ = false;
  sync_logs_.clear();
  outstanding_.reset();

  for (auto it = request_timers_.begin(); it != request_timers_.end();) {
    auto tit = timers_.find(it->second);
    if (tit != timers_.end()) {
      ctx_->cancel_timer(tit->second.id);
      timers_.erase(tit);
    }
    it = request_timers_.erase(it);
  }

  ctx_->timeline("sync_start", "r" + std::to_string(id_) + " regency=" + std::to_string(target) +
                                   " leader=" + std::to_string(sync_leader_));

  SyncLogMsg m;
  m.new_regency = target;
  m.log = export_signed_log(0, std::numeric_limits<Instance>::max());
  ctx_->send(sync_leader_, m);

  std::uint64_t tag = next_timer_tag_++;
  TimerInfo info;
  info.kind = TimerKind::sync;
  info.regency = target;
  info.id = ctx_->set_timer(request_timer_duration(), tag);
  timers_[tag] = info;

  needs_drain_ = true;
}

void Replica::handle_sync_log(const SyncLogMsg& m) {
  if (!in_sync_ || m.new_regency != regency_ || sync_leader_ != id_ || bundle_sent_) return;
  if (!std::binary_search(roster_.begin(), roster_.end(), m.log.owner)) return;
  if (!verify_log_signature(m.log, *keys_)) return;
  sync_logs_.emplace(m.log.owner, m.log);
  leader_try_bundle(false);
}

void Replica::leader_try_bundle(bool extras_deadline) {
  if (bundle_sent_ || !in_sync_ || sync_leader_ != id_) return;
  const std::size_t need = roster_.size() - t_;
  if (sync_logs_.size() < need) return;

  bool forensics = abort_was_fast_;
  if (forensics && sync_reasons_.size() == 1 &&
      *sync_reasons_.begin() == StopReason::latency_disappointment)
    forensics = false;  // latency disappointment alone: no forensics pass

  bool extras_timed_out = false;
  if (forensics) {
    std::vector<SignedLog> logs;
    for (const auto& [owner, log] : sync_logs_) logs.push_back(log);
    FixedHistory probe = fix_history(logs, true, *keys_, directory_lookup(ctx_->directory()));
    if (!probe.culprits.empty()) {
      std::size_t non_culprit = 0;
      for (const auto& [owner, log] : sync_logs_)
        if (!std::binary_search(probe.culprits.begin(), probe.culprits.end(), owner))
          ++non_culprit;
      if (non_culprit < need) {
        if (!extras_deadline) {
          if (!extras_timer_armed_) {
            extras_timer_armed_ = true;
            std::uint64_t tag = next_timer_tag_++;
            TimerInfo info;
            info.kind = TimerKind::sync_extras;
            info.regency = regency_;
            info.id = ctx_->set_timer(request_timer_duration(), tag);
            timers_[tag] = info;
          }
          return;  // wait for logs from additional replicas to discount culprits
        }
        extras_timed_out = true;
      }
    }
  }

  SyncBundle b;
  b.new_regency = regency_;
  b.ran_forensics = forensics;
  b.extras_timed_out = extras_timed_out;
  for (const auto& [owner, log] : sync_logs_) b.logs.push_back(log);
  b.sig = signer_.attest(b.signing_bytes());
  bundle_sent_ = true;
  ctx_->broadcast_replicas(b);
}

void Replica::handle_sync_bundle(ProcessId /*from*/, const SyncBundle& b) {
  if (!in_sync_ || b.new_regency != regency_) return;
  if (b.sig.signer != sync_leader_) return;
  if (!keys_->check(sync_leader_, b.signing_bytes(), b.sig)) return;

  std::set<ReplicaId> owners;
  for (const auto& log : b.logs) {
    if (!std::binary_search(roster_.begin(), roster_.end(), log.owner)) return;
    if (!owners.insert(log.owner).second) return;
    if (!verify_log_signature(log, *keys_)) return;
  }
  if (owners.size() < roster_.size() - t_) {
    ctx_->timeline("invalid_bundle", "r" + std::to_string(id_));
    return;
  }

  FixedHistory fixed = fix_history(b.logs, b.ran_forensics, *keys_,
                                   directory_lookup(ctx_->directory()));
  if (!fixed.culprits.empty() && !b.extras_timed_out) {
    std::size_t non_culprit = 0;
    for (auto owner : owners)
      if (!std::binary_search(fixed.culprits.begin(), fixed.culprits.end(), owner))
        ++non_culprit;
    if (non_culprit < roster_.size() - t_) {
      ctx_->timeline("invalid_bundle", "r" + std::to_string(id_) + " missing extra logs");
      return;
    }
  }
  adopt_fixed(fixed);
}

void Replica::adopt_fixed(const FixedHistory& fixed) {
  // First index where our log deviates from the fixed history; everything
  // beyond it is rolled back and replayed.
  std::size_t common = std::min(log_.size(), fixed.entries.size());
  std::size_t p = common;
  for (std::size_t i = 0; i < common; ++i) {
    if (log_[i].value() != fixed.entries[i].value()) {
      p = i;
      break;
    }
  }
  bool diverged = p < log_.size();

  if (diverged) {
    Instance restore = 0;
    for (const auto& [upto, snap] : snapshots_) {
      if (upto <= p) restore = std::max(restore, upto);
    }
    ctx_->timeline("rollback", "r" + std::to_string(id_) + " from=" + std::to_string(log_.size()) +
                                   " to=" + std::to_string(restore));
    service_ = restore ? ChainService::restore(snapshots_[restore]) : ChainService();
    log_.erase(log_.begin() + static_cast<std::ptrdiff_t>(restore), log_.end());
    for (auto it = snapshots_.upper_bound(restore); it != snapshots_.end();)
      it = snapshots_.erase(it);
    for (auto it = my_ckpt_.upper_bound(restore); it != my_ckpt_.end();) it = my_ckpt_.erase(it);
    for (auto it = ckpt_votes_.upper_bound(restore); it != ckpt_votes_.end();)
      it = ckpt_votes_.erase(it);
    stable_upto_ = std::min(stable_upto_, restore);
  }

  for (std::size_t i = log_.size(); i < fixed.entries.size(); ++i) {
    DecidedInfo info;
    info.entry = fixed.entries[i];
    info.decide_ts = ctx_->now();
    execute_entry(info, true);
  }

  decided_buf_.clear();
  instances_.clear();
  op_index_.clear();
  for (const auto& entry : log_)
    for (const auto& req : entry.batch) {
      auto key = std::make_pair(req.client, req.seq);
      if (!op_index_.count(key) && service_.last_executed_seq(req.client) >= req.seq)
        op_index_[key] = entry.instance;
    }
  rebuild_pending();

  modes_.reset_counter();
  modes_.clear_watchdog();

  in_sync_ = false;
  epoch_changed_ = false;
  ReplicaId lead = std::binary_search(roster_.begin(), roster_.end(), sync_leader_)
                       ? sync_leader_
                       : next_leader(roster_, sync_leader_);
  install_view(make_view(regency_, false, lead, conservative_cfg()), "sync_done");
  refresh_expectation();

  for (auto it = timers_.begin(); it != timers_.end();) {
    if (it->second.kind == TimerKind::sync || it->second.kind == TimerKind::sync_extras) {
      ctx_->cancel_timer(it->second.id);
      it = timers_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = stops_.begin(); it != stops_.end();)
    it = it->first <= regency_ ? stops_.erase(it) : ++it;

  for (const auto& key : pending_) arm_request_timer(key.first, key.second);

  if (view_.leader == id_) {
    if (fixed.poc && !fixed.culprits.empty())
      pending_reconfigure_ = std::make_pair(fixed.culprits, *fixed.poc);
    propose_next();
  }
}

void Replica::apply_reconfigure(const std::vector<ReplicaId>& culprits) {
  std::vector<ReplicaId> survivors;
  bool changed = false;
  for (auto id : roster_) {
    if (std::binary_search(culprits.begin(), culprits.end(), id)) {
      changed = true;
      continue;
    }
    survivors.push_back(id);
  }
  if (!changed) return;

  roster_ = std::move(survivors);
  t_ = optimal_threshold(static_cast<std::uint32_t>(roster_.size()));
  t_fast_ = fast_threshold(t_);
  ++epoch_;
  epoch_changed_ = true;

  MembershipInfo m;
  m.epoch = epoch_;
  m.roster = roster_;
  m.t = t_;
  m.t_fast = t_fast_;
  ctx_->directory().ensure_epoch(m);

  std::string detail = "r" + std::to_string(id_) + " expelled=";
  for (auto id : culprits) detail += std::to_string(id) + " ";
  detail += "n=" + std::to_string(roster_.size()) + " t=" + std::to_string(t_);
  ctx_->timeline("reconfigure", detail);
}

void Replica::rebuild_pending() {
  pending_.clear();
  for (const auto& [key, req] : requests_seen_)
    if (req.seq > service_.last_executed_seq(req.client)) pending_.insert(key);
}

// ---------------------------------------------------------------------------
// timers

void Replica::on_timer(std::uint64_t tag) {
  auto it = timers_.find(tag);
  if (it == timers_.end()) {
    pump();
    return;
  }
  TimerInfo info = it->second;
  timers_.erase(it);

  switch (info.kind) {
    case TimerKind::request: {
      auto key = std::make_pair(info.client, info.seq);
      request_timers_.erase(key);
      if (!pending_.count(key)) return;
      ctx_->timeline("timer_expired", "r" + std::to_string(id_) + " client=" +
                                          std::to_string(info.client) + " seq=" +
                                          std::to_string(info.seq));
      request_abort(StopReason::timer_expired, nullptr);
      arm_request_timer(info.client, info.seq);
      break;
    }
    case TimerKind::sync: {
      if (!in_sync_ || info.regency != regency_) return;
      ctx_->timeline("sync_timeout", "r" + std::to_string(id_) + " regency=" +
                                         std::to_string(info.regency));
      request_abort(StopReason::timer_expired, nullptr);
      std::uint64_t tag2 = next_timer_tag_++;
      TimerInfo again = info;
      again.id = ctx_->set_timer(request_timer_duration(), tag2);
      timers_[tag2] = again;
      break;
    }
    case TimerKind::sync_extras:
      if (in_sync_ && info.regency == regency_) leader_try_bundle(true);
      break;
  }
  pump();
}

}  // namespace wbft
