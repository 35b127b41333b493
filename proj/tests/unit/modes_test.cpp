// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numeric>

#include "wbft/modes.hpp"

using namespace wbft;

TEST_CASE("theta counting and reset") {
  ModeController mc(400, 32);
  for (int i = 0; i < 399; ++i) CHECK_FALSE(mc.on_decided_conservative());
  CHECK(mc.on_decided_conservative());  // 400th consecutive decision

  mc.reset_counter();
  CHECK(mc.consecutive_ok() == 0);
  // An abort at 399 means starting over.
  ModeController mc2(400, 32);
  for (int i = 0; i < 399; ++i) mc2.on_decided_conservative();
  mc2.reset_counter();
  CHECK_FALSE(mc2.on_decided_conservative());

  ModeController one(1, 32);
  CHECK(one.on_decided_conservative());  // theta=1: first decision switches
}

TEST_CASE("watchdog compares the window median strictly") {
  ModeController mc(400, 32);
  mc.set_expectation(ms_to_ns(231.0));
  // Fig-style healthy fast mode: far below expectation.
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(103.0)));
  // Exactly the expectation: strict comparison, no abort.
  mc.clear_watchdog();
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(231.0)));
  // Median above the expectation: abort.
  mc.clear_watchdog();
  mc.watchdog_sample(ms_to_ns(240.0));
  CHECK(mc.watchdog_sample(ms_to_ns(250.0)));
}

TEST_CASE("watchdog median resists outliers") {
  ModeController mc(400, 5);
  mc.set_expectation(ms_to_ns(200.0));
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(100.0)));
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(100.0)));
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(900.0)));  // one slow instance
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(100.0)));
  CHECK_FALSE(mc.watchdog_sample(ms_to_ns(100.0)));
}

TEST_CASE("leader rotation is round robin over the surviving roster") {
  std::vector<ReplicaId> roster{0, 2, 5, 9};
  CHECK(next_leader(roster, 0) == 2);
  CHECK(next_leader(roster, 2) == 5);
  CHECK(next_leader(roster, 9) == 0);
  CHECK(next_leader(roster, 3) == 5);  // expelled leader: next surviving id
}

namespace {

struct SyncFixture {
  KeyStore keys{77};
  WeightConfig cfg;
  ConfigLookup lookup;

  SyncFixture() {
    std::vector<ReplicaId> ids(10);
    std::iota(ids.begin(), ids.end(), 0u);
    cfg = compute_weight_config(ids, 2);
    lookup = [this](Regency) { return &cfg; };
  }

  Request request(ProcessId client, std::uint64_t seq) const {
    Request r;
    r.client = client;
    r.seq = seq;
    r.payload = str_bytes("p" + std::to_string(seq));
    r.sig = keys.signer_for(client).attest(r.signing_bytes());
    return r;
  }

  LogEntry entry(Instance inst, const Batch& batch, const std::vector<ReplicaId>& signers) const {
    LogEntry e;
    e.instance = inst;
    e.regency = 0;
    e.batch = batch;
    e.proof.instance = inst;
    e.proof.regency = 0;
    e.proof.value = batch_digest(batch);
    Bytes payload = vote_signing_bytes(Phase::accept, inst, 0, e.proof.value);
    for (auto id : signers) e.proof.accepts.push_back(keys.signer_for(id).attest(payload));
    return e;
  }

  SignedLog signed_log(ReplicaId owner, std::vector<LogEntry> entries) const {
    SignedLog log;
    log.owner = owner;
    log.entries = std::move(entries);
    log.sig = keys.signer_for(owner).attest(log.signing_bytes());
    return log;
  }
};

}  // namespace

TEST_CASE("fix_history adopts every proven decision when logs agree") {
  SyncFixture fx;
  const std::vector<ReplicaId> quorum{0, 1, 2, 3, 4};
  Batch b0{fx.request(100, 1)};
  Batch b1{fx.request(100, 2)};
  std::vector<SignedLog> logs;
  // Seven replicas report, some lag one instance behind.
  for (ReplicaId r = 3; r < 10; ++r) {
    std::vector<LogEntry> entries{fx.entry(0, b0, quorum)};
    if (r % 2 == 1) entries.push_back(fx.entry(1, b1, quorum));
    logs.push_back(fx.signed_log(r, std::move(entries)));
  }
  FixedHistory fixed = fix_history(logs, false, fx.keys, fx.lookup);
  REQUIRE(fixed.entries.size() == 2);
  CHECK(fixed.entries[0].value() == batch_digest(b0));
  CHECK(fixed.entries[1].value() == batch_digest(b1));
  CHECK(fixed.culprits.empty());
}

TEST_CASE("fix_history discounts culprit logs and picks the majority branch") {
  SyncFixture fx;
  const std::vector<ReplicaId> camp_a{0, 1, 2, 3, 4};           // 22 units
  const std::vector<ReplicaId> camp_b{0, 1, 2, 5, 6, 7, 8, 9};  // 25 units
  Batch b0{fx.request(100, 1)};
  Batch va{fx.request(100, 2), fx.request(101, 1)};
  Batch vb{fx.request(101, 1), fx.request(100, 2)};

  std::vector<SignedLog> logs;
  // Camp A correct reporters: 3 and 4. Camp B correct reporters: 5..9.
  for (ReplicaId r : {3, 4})
    logs.push_back(fx.signed_log(r, {fx.entry(0, b0, camp_a), fx.entry(1, va, camp_a)}));
  for (ReplicaId r : {5, 6, 7, 8, 9})
    logs.push_back(fx.signed_log(r, {fx.entry(0, b0, camp_b), fx.entry(1, vb, camp_b)}));
  // Culprits also report (their logs must be discounted, join camp A side).
  for (ReplicaId r : {0, 1})
    logs.push_back(fx.signed_log(r, {fx.entry(0, b0, camp_a), fx.entry(1, va, camp_a)}));

  FixedHistory fixed = fix_history(logs, true, fx.keys, fx.lookup);
  CHECK(fixed.culprits == std::vector<ReplicaId>{0, 1, 2});
  REQUIRE(fixed.poc.has_value());
  REQUIRE(fixed.entries.size() == 2);
  // After discounting culprit logs: camp B has 5 honest reporters vs 2.
  CHECK(fixed.entries[1].value() == batch_digest(vb));

  // Without forensics the same logs produce no culprits and keep the raw
  // majority; the caller decides which mode applies.
  FixedHistory blind = fix_history(logs, false, fx.keys, fx.lookup);
  CHECK(blind.culprits.empty());
}

TEST_CASE("fix_history skips candidates whose proofs fail") {
  SyncFixture fx;
  const std::vector<ReplicaId> quorum{0, 1, 2, 3, 4};
  Batch b0{fx.request(100, 1)};
  Batch forged{fx.request(100, 9)};
  LogEntry weak = fx.entry(0, forged, {7, 8, 9});  // 6 units, far below quorum

  std::vector<SignedLog> logs;
  logs.push_back(fx.signed_log(5, {weak}));
  logs.push_back(fx.signed_log(6, {weak}));
  logs.push_back(fx.signed_log(7, {weak}));
  logs.push_back(fx.signed_log(3, {fx.entry(0, b0, quorum)}));

  FixedHistory fixed = fix_history(logs, false, fx.keys, fx.lookup);
  REQUIRE(fixed.entries.size() == 1);
  // The forged branch has more supporters but no valid proof.
  CHECK(fixed.entries[0].value() == batch_digest(b0));
}

TEST_CASE("stop reason severity ordering") {
  using SR = StopReason;
  CHECK(ModeController::severest(SR::timer_expired, SR::valid_poc) == SR::valid_poc);
  CHECK(ModeController::severest(SR::latency_disappointment, SR::timer_expired) ==
        SR::timer_expired);
  CHECK(ModeController::severest(SR::latency_disappointment, SR::latency_disappointment) ==
        SR::latency_disappointment);
}
