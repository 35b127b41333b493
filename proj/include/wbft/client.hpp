// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>

#include "wbft/runtime.hpp"

namespace wbft {

enum class Level : std::uint8_t { pending = 0, first = 1, weak = 2, strong = 3, final = 4 };

struct ClientParams {
  std::uint32_t requests = 10;
  std::uint32_t payload_bytes = 400;
  TimeNs think_max = 1000 * kMsNs;     // uniform think time before each request
  TimeNs log_check_delay = 1500 * kMsNs;
  std::uint32_t region = 0;
  std::uint32_t n = 4;  // initial replica count
};

/// Client shim: signs and broadcasts requests, tracks one correctable per
/// operation through first -> weak -> strong -> final, emits panic messages
/// on diverging fast-mode replies, and falls back to checking replica logs
/// when replies alone cannot finalize.
class ClientShim : public Process {
 public:
  struct OpRecord {
    std::uint64_t seq = 0;
    TimeNs invoke = -1;
    TimeNs first = -1;
    TimeNs weak = -1;
    TimeNs strong = -1;
    TimeNs final_ts = -1;
    Bytes result;
    Bytes strong_result;
    bool via_log = false;
  };

  ClientShim(ProcessId id, const KeyStore* keys, ClientParams params);

  void start(Context& ctx) override;
  void on_message(ProcessId from, const AnyMsg& msg) override;
  void on_timer(std::uint64_t tag) override;

  ProcessId id() const { return id_; }
  std::uint32_t region() const { return params_.region; }
  bool done() const { return completed_ == params_.requests; }
  const std::vector<OpRecord>& ops() const { return ops_; }

 private:
  void schedule_next();
  void send_request();
  void handle_reply(const Reply& rep);
  void handle_log_info(const LogInfo& info);
  void evaluate();
  void finalize(const Bytes& result, bool via_log);
  const ViewInfo* rules_view() const;

  ProcessId id_;
  const KeyStore* keys_;
  Signer signer_;
  ClientParams params_;
  Context* ctx_ = nullptr;
  Rng rng_{0};

  std::uint64_t seq_ = 0;  // current operation (1-based)
  std::uint32_t completed_ = 0;
  std::vector<OpRecord> ops_;
  bool op_open_ = false;
  Bytes last_payload_;

  // state of the correctable for the in-flight operation
  std::map<Bytes, std::map<ReplicaId, Reply>> by_result_;
  std::vector<Reply> fast_replies_;
  bool panicked_ = false;
  std::uint64_t epoch_seen_ = 0;
  bool fast_seen_ = false;

  std::map<Bytes, std::map<ReplicaId, LogInfo>> log_infos_;  // keyed by result bytes
  std::set<ReplicaId> log_not_found_;

  std::uint64_t timer_seq_ = 0;
  std::optional<std::uint64_t> think_tag_;
  std::optional<std::uint64_t> check_tag_;
};

}  // namespace wbft
