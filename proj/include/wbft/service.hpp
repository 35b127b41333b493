// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>

#include "wbft/auth.hpp"
#include "wbft/common.hpp"

namespace wbft {

/// Order-sensitive replicated service used by the harness: the state is a
/// running hash over decided batches, so any difference in decided content or
/// order shows up in the state digest and in every subsequent reply.
///
/// Requests are deduplicated per client by sequence number (clients issue
/// sequential operations); re-delivery of the last executed request yields
/// the cached reply without advancing the state.
class ChainService {
 public:
  struct Execution {
    ProcessId client = 0;
    std::uint64_t seq = 0;
    Bytes reply;
    bool fresh = false;  // false when answered from the reply cache
  };

  /// Applies one decided batch (pre-encoded batch bytes plus its parsed
  /// requests) and returns a reply per request.
  std::vector<Execution> apply(Instance instance, const Bytes& batch_bytes,
                               const std::vector<std::pair<ProcessId, std::uint64_t>>& requests);

  std::optional<Bytes> cached_reply(ProcessId client, std::uint64_t seq) const;
  std::uint64_t last_executed_seq(ProcessId client) const;

  Digest state_digest() const { return chain_; }

  Bytes snapshot() const;
  static ChainService restore(const Bytes& snapshot);

 private:
  Digest chain_{};  // zero digest = genesis
  std::map<ProcessId, std::uint64_t> last_seq_;
  std::map<ProcessId, Bytes> last_reply_;
};

}  // namespace wbft
