// SPDX-License-Identifier: Apache-2.0
#include "wbft/messages.hpp"

namespace wbft {

namespace {

enum class MsgType : std::uint8_t {
  request = 1,
  propose = 2,
  vote = 3,
  reply = 4,
  checkpoint = 5,
  stop = 6,
  sync_log = 7,
  sync_bundle = 8,
  poc = 9,
  panic = 10,
  log_query = 11,
  log_info = 12,
  log_fetch = 13,
  audit_log = 14,
};

void put_digest(wire::Writer& w, const Digest& d) { w.raw(d.bytes.data(), d.bytes.size()); }
Digest get_digest(wire::Reader& r) {
  Digest d;
  r.raw(d.bytes.data(), d.bytes.size());
  return d;
}

void put_sig(wire::Writer& w, const Signature& s) {
  w.u32(s.signer);
  w.raw(s.tag.data(), s.tag.size());
}
Signature get_sig(wire::Reader& r) {
  Signature s;
  s.signer = r.u32();
  r.raw(s.tag.data(), s.tag.size());
  return s;
}

void put_request(wire::Writer& w, const Request& req) {
  w.u32(req.client);
  w.u64(req.seq);
  w.bytes(req.payload);
  put_sig(w, req.sig);
}
Request get_request(wire::Reader& r) {
  Request req;
  req.client = r.u32();
  req.seq = r.u64();
  req.payload = r.bytes();
  req.sig = get_sig(r);
  return req;
}

void put_batch(wire::Writer& w, const Batch& batch) {
  w.u32(static_cast<std::uint32_t>(batch.size()));
  for (const auto& req : batch) put_request(w, req);
}
Batch get_batch(wire::Reader& r) {
  Batch batch(r.u32());
  for (auto& req : batch) req = get_request(r);
  return batch;
}

void put_reply(wire::Writer& w, const Reply& rep) {
  w.u32(rep.replica);
  w.u32(rep.client);
  w.u64(rep.seq);
  w.bytes(rep.result);
  w.u8(rep.fast ? 1 : 0);
  w.u64(rep.epoch);
  w.u64(rep.instance);
  put_sig(w, rep.sig);
}
Reply get_reply(wire::Reader& r) {
  Reply rep;
  rep.replica = r.u32();
  rep.client = r.u32();
  rep.seq = r.u64();
  rep.result = r.bytes();
  rep.fast = r.u8() != 0;
  rep.epoch = r.u64();
  rep.instance = r.u64();
  rep.sig = get_sig(r);
  return rep;
}

void put_entry(wire::Writer& w, const LogEntry& e) {
  w.u64(e.instance);
  w.u64(e.regency);
  put_batch(w, e.batch);
  encode_proof(w, e.proof);
}
LogEntry get_entry(wire::Reader& r) {
  LogEntry e;
  e.instance = r.u64();
  e.regency = r.u64();
  e.batch = get_batch(r);
  e.proof = decode_proof(r);
  return e;
}

}  // namespace

Bytes encode_batch(const Batch& batch) {
  wire::Writer w;
  put_batch(w, batch);
  return w.take();
}

Batch decode_batch(const Bytes& bytes) {
  wire::Reader r(bytes);
  return get_batch(r);
}

Digest batch_digest(const Batch& batch) { return sha256(encode_batch(batch)); }

Bytes Request::signing_bytes() const {
  wire::Writer w;
  w.u32(client);
  w.u64(seq);
  w.bytes(payload);
  return w.take();
}

Bytes vote_signing_bytes(Phase phase, Instance instance, Regency regency, const Digest& value) {
  wire::Writer w;
  w.u8(static_cast<std::uint8_t>(MsgType::vote));
  w.u8(static_cast<std::uint8_t>(phase));
  w.u64(instance);
  w.u64(regency);
  put_digest(w, value);
  return w.take();
}

Bytes Vote::signing_bytes() const { return vote_signing_bytes(phase, instance, regency, value); }

Bytes Reply::signing_bytes() const {
  wire::Writer w;
  w.u32(replica);
  w.u32(client);
  w.u64(seq);
  w.bytes(result);
  w.u8(fast ? 1 : 0);
  w.u64(epoch);
  w.u64(instance);
  return w.take();
}

Bytes CheckpointMsg::signing_bytes() const {
  wire::Writer w;
  w.u32(replica);
  w.u64(upto);
  put_digest(w, state);
  w.u64(epoch);
  return w.take();
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::timer_expired:
      return "timer_expired";
    case StopReason::valid_poc:
      return "valid_poc";
    case StopReason::latency_disappointment:
      return "latency_disappointment";
  }
  return "?";
}

Bytes SignedLog::signing_bytes() const {
  wire::Writer w;
  w.u32(owner);
  w.u64(epoch);
  w.u8(fast ? 1 : 0);
  w.u64(last_stable);
  w.u32(static_cast<std::uint32_t>(boundaries.size()));
  for (const auto& [inst, dig] : boundaries) {
    w.u64(inst);
    put_digest(w, dig);
  }
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) put_entry(w, e);
  return w.take();
}

Bytes StopMsg::signing_bytes() const {
  wire::Writer w;
  w.u32(replica);
  w.u64(regency);
  w.u8(static_cast<std::uint8_t>(reason));
  w.u8(poc ? 1 : 0);
  if (poc) encode_poc(w, *poc);
  return w.take();
}

Bytes SyncBundle::signing_bytes() const {
  wire::Writer w;
  w.u64(new_regency);
  w.u8(ran_forensics ? 1 : 0);
  w.u8(extras_timed_out ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(logs.size()));
  for (const auto& log : logs) encode_signed_log(w, log);
  return w.take();
}

Bytes PocMsg::signing_bytes() const {
  wire::Writer w;
  w.u32(replica);
  encode_poc(w, poc);
  return w.take();
}

Bytes PanicMsg::signing_bytes() const {
  wire::Writer w;
  w.u32(client);
  w.u64(seq);
  put_reply(w, reply_a);
  put_reply(w, reply_b);
  return w.take();
}

Bytes LogQuery::signing_bytes() const {
  wire::Writer w;
  w.u32(client);
  w.u64(seq);
  return w.take();
}

Bytes LogInfo::signing_bytes() const {
  wire::Writer w;
  w.u32(replica);
  w.u32(client);
  w.u64(seq);
  w.u8(found ? 1 : 0);
  w.u64(instance);
  put_digest(w, value);
  w.bytes(result);
  w.u8(covered_stable ? 1 : 0);
  w.u64(epoch);
  w.u8(fast ? 1 : 0);
  return w.take();
}

void encode_proof(wire::Writer& w, const DecisionProof& p) {
  w.u64(p.instance);
  w.u64(p.regency);
  put_digest(w, p.value);
  w.u32(static_cast<std::uint32_t>(p.accepts.size()));
  for (const auto& s : p.accepts) put_sig(w, s);
}

DecisionProof decode_proof(wire::Reader& r) {
  DecisionProof p;
  p.instance = r.u64();
  p.regency = r.u64();
  p.value = get_digest(r);
  p.accepts.resize(r.u32());
  for (auto& s : p.accepts) s = get_sig(r);
  return p;
}

void encode_signed_log(wire::Writer& w, const SignedLog& log) {
  w.raw(log.signing_bytes().data(), log.signing_bytes().size());
  put_sig(w, log.sig);
}

SignedLog decode_signed_log(wire::Reader& r) {
  SignedLog log;
  log.owner = r.u32();
  log.epoch = r.u64();
  log.fast = r.u8() != 0;
  log.last_stable = r.u64();
  log.boundaries.resize(r.u32());
  for (auto& [inst, dig] : log.boundaries) {
    inst = r.u64();
    dig = get_digest(r);
  }
  log.entries.resize(r.u32());
  for (auto& e : log.entries) e = get_entry(r);
  log.sig = get_sig(r);
  return log;
}

void encode_poc(wire::Writer& w, const ProofOfCulpability& poc) {
  w.u8(static_cast<std::uint8_t>(poc.kind));
  w.u64(poc.instance);
  w.u64(poc.regency);
  w.u32(static_cast<std::uint32_t>(poc.culprits.size()));
  for (auto id : poc.culprits) w.u32(id);
  encode_proof(w, poc.proof_a);
  encode_proof(w, poc.proof_b);
  w.u8(poc.kind == PocKind::invalid_proof ? 1 : 0);
  if (poc.kind == PocKind::invalid_proof) encode_signed_log(w, poc.bad_log);
}

ProofOfCulpability decode_poc(wire::Reader& r) {
  ProofOfCulpability poc;
  poc.kind = static_cast<PocKind>(r.u8());
  poc.instance = r.u64();
  poc.regency = r.u64();
  poc.culprits.resize(r.u32());
  for (auto& id : poc.culprits) id = r.u32();
  poc.proof_a = decode_proof(r);
  poc.proof_b = decode_proof(r);
  if (r.u8()) poc.bad_log = decode_signed_log(r);
  return poc;
}

Bytes encode_message(const AnyMsg& msg) {
  wire::Writer w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Request>) {
          w.u8(static_cast<std::uint8_t>(MsgType::request));
          put_request(w, m);
        } else if constexpr (std::is_same_v<T, Propose>) {
          w.u8(static_cast<std::uint8_t>(MsgType::propose));
          w.u64(m.instance);
          w.u64(m.regency);
          w.i64(m.propose_ts);
          put_batch(w, m.batch);
        } else if constexpr (std::is_same_v<T, Vote>) {
          w.u8(static_cast<std::uint8_t>(MsgType::vote));
          w.u8(static_cast<std::uint8_t>(m.phase));
          w.u64(m.instance);
          w.u64(m.regency);
          put_digest(w, m.value);
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, Reply>) {
          w.u8(static_cast<std::uint8_t>(MsgType::reply));
          put_reply(w, m);
        } else if constexpr (std::is_same_v<T, CheckpointMsg>) {
          w.u8(static_cast<std::uint8_t>(MsgType::checkpoint));
          w.u32(m.replica);
          w.u64(m.upto);
          put_digest(w, m.state);
          w.u64(m.epoch);
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, StopMsg>) {
          w.u8(static_cast<std::uint8_t>(MsgType::stop));
          w.raw(m.signing_bytes().data(), m.signing_bytes().size());
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, SyncLogMsg>) {
          w.u8(static_cast<std::uint8_t>(MsgType::sync_log));
          w.u64(m.new_regency);
          encode_signed_log(w, m.log);
        } else if constexpr (std::is_same_v<T, SyncBundle>) {
          w.u8(static_cast<std::uint8_t>(MsgType::sync_bundle));
          w.raw(m.signing_bytes().data(), m.signing_bytes().size());
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, PocMsg>) {
          w.u8(static_cast<std::uint8_t>(MsgType::poc));
          w.u32(m.replica);
          encode_poc(w, m.poc);
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, PanicMsg>) {
          w.u8(static_cast<std::uint8_t>(MsgType::panic));
          w.raw(m.signing_bytes().data(), m.signing_bytes().size());
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, LogQuery>) {
          w.u8(static_cast<std::uint8_t>(MsgType::log_query));
          w.u32(m.client);
          w.u64(m.seq);
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, LogInfo>) {
          w.u8(static_cast<std::uint8_t>(MsgType::log_info));
          w.raw(m.signing_bytes().data(), m.signing_bytes().size());
          put_sig(w, m.sig);
        } else if constexpr (std::is_same_v<T, LogFetch>) {
          w.u8(static_cast<std::uint8_t>(MsgType::log_fetch));
          w.u32(m.requester);
          w.u64(m.from);
          w.u64(m.to);
        } else if constexpr (std::is_same_v<T, AuditLogMsg>) {
          w.u8(static_cast<std::uint8_t>(MsgType::audit_log));
          w.u32(m.responder);
          encode_signed_log(w, m.log);
        }
      },
      msg);
  return w.take();
}

std::optional<AnyMsg> decode_message(const Bytes& bytes) {
  try {
    wire::Reader r(bytes);
    auto type = static_cast<MsgType>(r.u8());
    switch (type) {
      case MsgType::request:
        return get_request(r);
      case MsgType::propose: {
        Propose m;
        m.instance = r.u64();
        m.regency = r.u64();
        m.propose_ts = r.i64();
        m.batch = get_batch(r);
        return m;
      }
      case MsgType::vote: {
        Vote m;
        m.phase = static_cast<Phase>(r.u8());
        m.instance = r.u64();
        m.regency = r.u64();
        m.value = get_digest(r);
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::reply:
        return get_reply(r);
      case MsgType::checkpoint: {
        CheckpointMsg m;
        m.replica = r.u32();
        m.upto = r.u64();
        m.state = get_digest(r);
        m.epoch = r.u64();
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::stop: {
        StopMsg m;
        m.replica = r.u32();
        m.regency = r.u64();
        m.reason = static_cast<StopReason>(r.u8());
        if (r.u8()) m.poc = decode_poc(r);
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::sync_log: {
        SyncLogMsg m;
        m.new_regency = r.u64();
        m.log = decode_signed_log(r);
        return m;
      }
      case MsgType::sync_bundle: {
        SyncBundle m;
        m.new_regency = r.u64();
        m.ran_forensics = r.u8() != 0;
        m.extras_timed_out = r.u8() != 0;
        m.logs.resize(r.u32());
        for (auto& log : m.logs) log = decode_signed_log(r);
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::poc: {
        PocMsg m;
        m.replica = r.u32();
        m.poc = decode_poc(r);
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::panic: {
        PanicMsg m;
        m.client = r.u32();
        m.seq = r.u64();
        m.reply_a = get_reply(r);
        m.reply_b = get_reply(r);
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::log_query: {
        LogQuery m;
        m.client = r.u32();
        m.seq = r.u64();
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::log_info: {
        LogInfo m;
        m.replica = r.u32();
        m.client = r.u32();
        m.seq = r.u64();
        m.found = r.u8() != 0;
        m.instance = r.u64();
        m.value = get_digest(r);
        m.result = r.bytes();
        m.covered_stable = r.u8() != 0;
        m.epoch = r.u64();
        m.fast = r.u8() != 0;
        m.sig = get_sig(r);
        return m;
      }
      case MsgType::log_fetch: {
        LogFetch m;
        m.requester = r.u32();
        m.from = r.u64();
        m.to = r.u64();
        return m;
      }
      case MsgType::audit_log: {
        AuditLogMsg m;
        m.responder = r.u32();
        m.log = decode_signed_log(r);
        return m;
      }
    }
  } catch (const wire::DecodeError&) {
  }
  return std::nullopt;
}

namespace {
const char kReconfigureMagic[4] = {'R', 'C', 'F', 'G'};
}

Bytes make_reconfigure_payload(const std::vector<ReplicaId>& culprits,
                               const ProofOfCulpability& poc) {
  wire::Writer w;
  w.raw(reinterpret_cast<const std::uint8_t*>(kReconfigureMagic), 4);
  w.u32(static_cast<std::uint32_t>(culprits.size()));
  for (auto id : culprits) w.u32(id);
  encode_poc(w, poc);
  return w.take();
}

bool is_reconfigure_payload(const Bytes& payload) {
  return payload.size() > 4 && std::memcmp(payload.data(), kReconfigureMagic, 4) == 0;
}

std::optional<std::pair<std::vector<ReplicaId>, ProofOfCulpability>> parse_reconfigure_payload(
    const Bytes& payload) {
  if (!is_reconfigure_payload(payload)) return std::nullopt;
  try {
    wire::Reader r(payload.data() + 4, payload.size() - 4);
    std::vector<ReplicaId> culprits(r.u32());
    for (auto& id : culprits) id = r.u32();
    ProofOfCulpability poc = decode_poc(r);
    return std::make_pair(std::move(culprits), std::move(poc));
  } catch (const wire::DecodeError&) {
    return std::nullopt;
  }
}

}  // namespace wbft
