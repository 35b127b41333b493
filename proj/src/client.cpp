// SPDX-License-Identifier: Apache-2.0
#include "wbft/client.hpp"

#include <algorithm>

namespace wbft {

ClientShim::ClientShim(ProcessId id, const KeyStore* keys, ClientParams params)
    : id_(id), keys_(keys), signer_(keys->signer_for(id)), params_(params) {}

void ClientShim::start(Context& ctx) {
  ctx_ = &ctx;
  rng_ = Rng(mix_seed(ctx.run_seed(), 0x636c69ULL + id_));
  schedule_next();
}

void ClientShim::schedule_next() {
  if (done()) return;
  TimeNs think = params_.think_max > 0
                     ? static_cast<TimeNs>(rng_.below(static_cast<std::uint64_t>(params_.think_max)))
                     : 0;
  think_tag_ = ++timer_seq_;
  ctx_->set_timer(think, *think_tag_);
}

void ClientShim::send_request() {
  ++seq_;
  op_open_ = true;
  by_result_.clear();
  fast_replies_.clear();
  log_infos_.clear();
  log_not_found_.clear();
  panicked_ = false;

  OpRecord rec;
  rec.seq = seq_;
  rec.invoke = ctx_->now();
  ops_.push_back(rec);

  Request req;
  req.client = id_;
  req.seq = seq_;
  req.payload.resize(params_.payload_bytes);
  std::uint64_t fill = mix_seed(id_, seq_);
  for (std::size_t i = 0; i < req.payload.size(); i += 8) {
    std::uint64_t w = splitmix64(fill);
    for (std::size_t j = 0; j < 8 && i + j < req.payload.size(); ++j)
      req.payload[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
  }
  req.sig = signer_.attest(req.signing_bytes());
  last_payload_ = req.payload;
  ctx_->broadcast_replicas(req);

  check_tag_ = ++timer_seq_;
  ctx_->set_timer(params_.log_check_delay, *check_tag_);
}

void ClientShim::on_timer(std::uint64_t tag) {
  if (think_tag_ && tag == *think_tag_) {
    think_tag_.reset();
    send_request();
    return;
  }
  if (check_tag_ && tag == *check_tag_) {
    check_tag_.reset();
    if (!op_open_) return;
    // Reply quorum still missing: periodically confirm via the decision logs.
    LogQuery q;
    q.client = id_;
    q.seq = seq_;
    q.sig = signer_.attest(q.signing_bytes());
    ctx_->broadcast_replicas(q);
    check_tag_ = ++timer_seq_;
    ctx_->set_timer(params_.log_check_delay, *check_tag_);
  }
}

void ClientShim::on_message(ProcessId /*from*/, const AnyMsg& msg) {
  if (const auto* rep = std::get_if<Reply>(&msg)) handle_reply(*rep);
  if (const auto* info = std::get_if<LogInfo>(&msg)) handle_log_info(*info);
}

const ViewInfo* ClientShim::rules_view() const {
  // Thresholds follow the newest (epoch, mode) pair observed on verified
  // replies; the directory plays the role of signed view metadata.
  const auto& views = ctx_->directory().views();
  for (auto it = views.rbegin(); it != views.rend(); ++it) {
    if (it->second.epoch == epoch_seen_ && it->second.fast == fast_seen_) return &it->second;
  }
  for (auto it = views.rbegin(); it != views.rend(); ++it) {
    if (it->second.epoch == epoch_seen_) return &it->second;
  }
  return views.empty() ? nullptr : &views.rbegin()->second;
}

void ClientShim::handle_reply(const Reply& rep) {
  if (!op_open_ || rep.client != id_ || rep.seq != seq_) return;
  if (!keys_->check(rep.replica, rep.signing_bytes(), rep.sig)) return;
  const MembershipInfo* mem = ctx_->directory().epoch(rep.epoch);
  if (!mem || !std::binary_search(mem->roster.begin(), mem->roster.end(), rep.replica)) return;
  const ViewInfo* declared = nullptr;
  for (const auto& [r, v] : ctx_->directory().views())
    if (v.epoch == rep.epoch && v.fast == rep.fast) declared = &v;
  if (!declared) return;  // mode flag does not match any registered view

  if (rep.epoch > epoch_seen_ || (rep.epoch == epoch_seen_ && rep.fast != fast_seen_)) {
    epoch_seen_ = rep.epoch;
    fast_seen_ = rep.fast;
  }

  by_result_[rep.result][rep.replica] = rep;

  if (rep.fast) {
    for (const auto& prev : fast_replies_) {
      if (prev.result != rep.result && !panicked_) {
        panicked_ = true;
        PanicMsg panic;
        panic.client = id_;
        panic.seq = seq_;
        panic.reply_a = prev;
        panic.reply_b = rep;
        panic.sig = signer_.attest(panic.signing_bytes());
        ctx_->timeline("client_panic", "c" + std::to_string(id_) + " seq=" + std::to_string(seq_));
        ctx_->broadcast_replicas(panic);
      }
    }
    fast_replies_.push_back(rep);
  }

  evaluate();
}

void ClientShim::evaluate() {
  if (!op_open_) return;
  const ViewInfo* rules = rules_view();
  if (!rules) return;
  const ModeThresholds& th = rules->thresholds;
  const MembershipInfo* mem = ctx_->directory().epoch(epoch_seen_);
  if (!mem) return;

  OpRecord& rec = ops_.back();
  auto mark = [&](TimeNs& slot) {
    if (slot < 0) slot = ctx_->now();
  };

  for (const auto& [result, replies] : by_result_) {
    if (!replies.empty()) mark(rec.first);
    std::uint64_t units = 0;
    std::uint32_t count = 0;
    for (const auto& [replica, rep] : replies) {
      std::uint64_t u = th.config.units_of(replica);
      if (u == 0) continue;
      units += u;
      ++count;
    }
    if (rules->fast && units >= th.weak_units) mark(rec.weak);
    if (units >= th.strong_units) {
      mark(rec.strong);
      if (rec.strong_result.empty()) rec.strong_result = result;
      if (!rules->fast) {
        // Conservative mode: weak collapses into strong, final coincides.
        mark(rec.weak);
        finalize(result, false);
        return;
      }
    }
    if (rules->fast && count >= th.final_count) {
      finalize(result, false);
      return;
    }
  }
}

void ClientShim::finalize(const Bytes& result, bool via_log) {
  OpRecord& rec = ops_.back();
  rec.final_ts = ctx_->now();
  rec.result = result;
  rec.via_log = via_log;
  // A stronger guarantee subsumes the weaker levels it skipped past.
  if (rec.first < 0) rec.first = rec.final_ts;
  if (rec.weak < 0) rec.weak = rec.final_ts;
  if (rec.strong < 0) rec.strong = rec.final_ts;
  if (rec.strong_result.empty()) rec.strong_result = result;

  op_open_ = false;
  ++completed_;
  if (check_tag_) check_tag_.reset();
  schedule_next();
}

void ClientShim::handle_log_info(const LogInfo& info) {
  if (!op_open_ || info.client != id_ || info.seq != seq_) return;
  if (!keys_->check(info.replica, info.signing_bytes(), info.sig)) return;
  const MembershipInfo* mem = ctx_->directory().epoch(info.epoch);
  if (!mem || !std::binary_search(mem->roster.begin(), mem->roster.end(), info.replica)) return;

  if (info.epoch > epoch_seen_ || (info.epoch == epoch_seen_ && info.fast != fast_seen_)) {
    epoch_seen_ = info.epoch;
    fast_seen_ = info.fast;
  }

  if (!info.found) {
    log_not_found_.insert(info.replica);
    if (log_not_found_.size() >= mem->roster.size() - mem->t) {
      // Absent from the logs everywhere: the request was lost, re-broadcast.
      log_not_found_.clear();
      Request req;  // same operation, same sequence number and payload
      req.client = id_;
      req.seq = seq_;
      req.payload = last_payload_;
      req.sig = signer_.attest(req.signing_bytes());
      ctx_->timeline("client_rebroadcast",
                     "c" + std::to_string(id_) + " seq=" + std::to_string(seq_));
      ctx_->broadcast_replicas(req);
    }
    return;
  }
  if (info.result.empty()) return;

  auto& group = log_infos_[info.result];
  // Entries must agree on both position and value to match.
  for (auto it = group.begin(); it != group.end();) {
    if (it->second.instance != info.instance || !(it->second.value == info.value)) {
      it = group.erase(it);
    } else {
      ++it;
    }
  }
  group[info.replica] = info;

  const ViewInfo* rules = rules_view();
  if (!rules) return;
  const ModeThresholds& th = rules->thresholds;

  std::uint32_t count = 0;
  std::uint64_t units = 0;
  std::uint32_t stable_count = 0;
  for (const auto& [replica, li] : group) {
    std::uint64_t u = th.config.units_of(replica);
    if (u == 0) continue;
    ++count;
    units += u;
    if (li.covered_stable) ++stable_count;
  }

  bool enough = rules->fast ? count >= th.final_count : units >= th.strong_units;
  if (enough || stable_count >= mem->t + 1) {
    ctx_->timeline("client_log_confirm",
                   "c" + std::to_string(id_) + " seq=" + std::to_string(seq_));
    finalize(group.begin()->second.result, true);
  }
}

}  // namespace wbft
