// SPDX-License-Identifier: Apache-2.0
#include "wbft/service.hpp"

#include "wbft/wire.hpp"

namespace wbft {

std::vector<ChainService::Execution> ChainService::apply(
    Instance instance, const Bytes& batch_bytes,
    const std::vector<std::pair<ProcessId, std::uint64_t>>& requests) {
  // The chain advances once per decision over the full batch bytes, so two
  // batches with the same request set but different order or duplication
  // produce different states.
  wire::Writer w;
  w.raw(chain_.bytes.data(), chain_.bytes.size());
  w.u64(instance);
  w.bytes(batch_bytes);
  chain_ = sha256(w.buf());

  std::vector<Execution> out;
  out.reserve(requests.size());
  for (const auto& [client, seq] : requests) {
    Execution ex;
    ex.client = client;
    ex.seq = seq;
    auto it = last_seq_.find(client);
    std::uint64_t prev = it == last_seq_.end() ? 0 : it->second;
    if (seq > prev) {
      wire::Writer rw;
      rw.raw(chain_.bytes.data(), chain_.bytes.size());
      rw.u32(client);
      rw.u64(seq);
      Digest r = sha256(rw.buf());
      ex.reply.assign(r.bytes.begin(), r.bytes.end());
      ex.fresh = true;
      last_seq_[client] = seq;
      last_reply_[client] = ex.reply;
    } else if (seq == prev && prev != 0) {
      ex.reply = last_reply_[client];
      ex.fresh = false;
    } else {
      continue;  // older than the reply cache window: drop
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::optional<Bytes> ChainService::cached_reply(ProcessId client, std::uint64_t seq) const {
  auto it = last_seq_.find(client);
  if (it == last_seq_.end() || it->second != seq) return std::nullopt;
  return last_reply_.at(client);
}

std::uint64_t ChainService::last_executed_seq(ProcessId client) const {
  auto it = last_seq_.find(client);
  return it == last_seq_.end() ? 0 : it->second;
}

Bytes ChainService::snapshot() const {
  wire::Writer w;
  w.raw(chain_.bytes.data(), chain_.bytes.size());
  w.u32(static_cast<std::uint32_t>(last_seq_.size()));
  for (const auto& [client, seq] : last_seq_) {
    w.u32(client);
    w.u64(seq);
    w.bytes(last_reply_.at(client));
  }
  return w.take();
}

ChainService ChainService::restore(const Bytes& snapshot) {
  ChainService s;
  wire::Reader r(snapshot);
  r.raw(s.chain_.bytes.data(), s.chain_.bytes.size());
  std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    ProcessId client = r.u32();
    std::uint64_t seq = r.u64();
    s.last_seq_[client] = seq;
    s.last_reply_[client] = r.bytes();
  }
  return s;
}

}  // namespace wbft
