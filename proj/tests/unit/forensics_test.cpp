// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numeric>

#include "wbft/forensics.hpp"

using namespace wbft;

namespace {

struct Fixture {
  KeyStore keys{1234};
  WeightConfig cfg;  // n=10, t_fast=2: highs 0..3 (5 units), lows 4..9 (2 units), Q=22
  ConfigLookup lookup;

  Fixture() {
    std::vector<ReplicaId> ids(10);
    std::iota(ids.begin(), ids.end(), 0u);
    cfg = compute_weight_config(ids, 2);
    lookup = [this](Regency) { return &cfg; };
  }

  Request request(ProcessId client, std::uint64_t seq, const std::string& body) const {
    Request r;
    r.client = client;
    r.seq = seq;
    r.payload = str_bytes(body);
    r.sig = keys.signer_for(client).attest(r.signing_bytes());
    return r;
  }

  DecisionProof proof(Instance inst, Regency reg, const Digest& value,
                      const std::vector<ReplicaId>& signers) const {
    DecisionProof p;
    p.instance = inst;
    p.regency = reg;
    p.value = value;
    Bytes payload = vote_signing_bytes(Phase::accept, inst, reg, value);
    for (auto id : signers) p.accepts.push_back(keys.signer_for(id).attest(payload));
    return p;
  }

  LogEntry entry(Instance inst, Regency reg, const Batch& batch,
                 const std::vector<ReplicaId>& signers) const {
    LogEntry e;
    e.instance = inst;
    e.regency = reg;
    e.batch = batch;
    e.proof = proof(inst, reg, batch_digest(batch), signers);
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

const std::vector<ReplicaId> kCampA{0, 1, 2, 3, 4};           // 22 units
const std::vector<ReplicaId> kCampB{0, 1, 2, 5, 6, 7, 8, 9};  // 25 units
const std::vector<ReplicaId> kCoalition{0, 1, 2};

}  // namespace

TEST_CASE("decision proof verification: weight and signatures") {
  Fixture fx;
  Batch batch{fx.request(100, 1, "x")};
  Digest v = batch_digest(batch);

  CHECK(verify_decision_proof(fx.proof(0, 0, v, kCampA), fx.cfg, fx.keys));
  // 21 units: one short of the quorum.
  CHECK_FALSE(verify_decision_proof(fx.proof(0, 0, v, {0, 1, 2, 3, 9}), fx.cfg, fx.keys));

  DecisionProof tampered = fx.proof(0, 0, v, kCampA);
  tampered.accepts[0].tag[0] ^= 1;
  CHECK_FALSE(verify_decision_proof(tampered, fx.cfg, fx.keys));

  // Duplicate signer must not double-count.
  DecisionProof dup = fx.proof(0, 0, v, {0, 1, 2, 3});
  dup.accepts.push_back(dup.accepts[0]);
  CHECK_FALSE(verify_decision_proof(dup, fx.cfg, fx.keys));
}

TEST_CASE("double-accept culpability from diverging logs") {
  Fixture fx;
  Batch shared{fx.request(100, 1, "op-1")};
  Batch diverge_a{fx.request(100, 2, "op-2"), fx.request(101, 1, "op-3")};
  Batch diverge_b{fx.request(101, 1, "op-3"), fx.request(100, 2, "op-2")};  // reordered

  auto log_a = fx.signed_log(3, {fx.entry(0, 0, shared, kCampA), fx.entry(1, 0, diverge_a, kCampA)});
  auto log_b = fx.signed_log(5, {fx.entry(0, 0, shared, kCampB), fx.entry(1, 0, diverge_b, kCampB)});

  auto poc = find_culpability(log_a, log_b, fx.keys, fx.lookup);
  REQUIRE(poc.has_value());
  CHECK(poc->kind == PocKind::double_accept);
  CHECK(poc->instance == 1);
  CHECK(poc->culprits == kCoalition);

  auto verified = verify_poc(*poc, fx.keys, fx.lookup);
  REQUIRE(verified.has_value());
  CHECK(*verified == kCoalition);
}

TEST_CASE("no divergence, no culpability") {
  Fixture fx;
  Batch b1{fx.request(100, 1, "a")};
  Batch b2{fx.request(100, 2, "b")};
  auto log_a = fx.signed_log(3, {fx.entry(0, 0, b1, kCampA), fx.entry(1, 0, b2, kCampA)});
  auto log_b = fx.signed_log(5, {fx.entry(0, 0, b1, kCampB)});  // shorter, consistent
  CHECK_FALSE(find_culpability(log_a, log_b, fx.keys, fx.lookup).has_value());
}

TEST_CASE("invalid proof convicts the log owner") {
  Fixture fx;
  Batch b1{fx.request(100, 1, "a")};
  Batch forged{fx.request(100, 2, "forged")};
  // Under-weight proof: 3 lows = 6 units.
  auto bad = fx.signed_log(7, {fx.entry(0, 0, b1, kCampB), fx.entry(1, 0, forged, {7, 8, 9})});
  auto good = fx.signed_log(3, {fx.entry(0, 0, b1, kCampA),
                                fx.entry(1, 0, Batch{fx.request(100, 2, "real")}, kCampA)});

  auto poc = find_culpability(good, bad, fx.keys, fx.lookup);
  REQUIRE(poc.has_value());
  CHECK(poc->kind == PocKind::invalid_proof);
  CHECK(poc->culprits == std::vector<ReplicaId>{7});

  auto verified = verify_poc(*poc, fx.keys, fx.lookup);
  REQUIRE(verified.has_value());
  CHECK(*verified == std::vector<ReplicaId>{7});
}

TEST_CASE("poc rejection: tamper, no conflict, framing") {
  Fixture fx;
  Batch b_a{fx.request(100, 1, "a")};
  Batch b_b{fx.request(100, 1, "a"), fx.request(100, 1, "a")};  // duplicated: same op, new digest
  Digest va = batch_digest(b_a);
  Digest vb = batch_digest(b_b);

  ProofOfCulpability poc;
  poc.kind = PocKind::double_accept;
  poc.instance = 4;
  poc.regency = 0;
  poc.culprits = kCoalition;
  poc.proof_a = fx.proof(4, 0, va, kCampA);
  poc.proof_b = fx.proof(4, 0, vb, kCampB);
  REQUIRE(verify_poc(poc, fx.keys, fx.lookup).has_value());

  SUBCASE("tampered signature") {
    poc.proof_b.accepts[2].tag[5] ^= 0xff;
    CHECK_FALSE(verify_poc(poc, fx.keys, fx.lookup).has_value());
  }
  SUBCASE("same digest on both sides") {
    poc.proof_b = fx.proof(4, 0, va, kCampB);
    CHECK_FALSE(verify_poc(poc, fx.keys, fx.lookup).has_value());
  }
  SUBCASE("culprit list mismatch") {
    poc.culprits = {0, 1};
    CHECK_FALSE(verify_poc(poc, fx.keys, fx.lookup).has_value());
  }
  SUBCASE("framing a valid log as invalid") {
    ProofOfCulpability frame;
    frame.kind = PocKind::invalid_proof;
    frame.instance = 0;
    frame.regency = 0;
    frame.culprits = {3};
    frame.bad_log = fx.signed_log(3, {fx.entry(0, 0, b_a, kCampA)});
    CHECK_FALSE(verify_poc(frame, fx.keys, fx.lookup).has_value());
  }
}

TEST_CASE("auditor produces a poc from cross-camp logs and honors cancellation") {
  Fixture fx;
  Batch shared{fx.request(100, 1, "s")};
  Batch da{fx.request(100, 2, "x"), fx.request(101, 1, "y")};
  Batch db{fx.request(101, 1, "y"), fx.request(100, 2, "x")};
  auto log_a = fx.signed_log(4, {fx.entry(0, 0, shared, kCampA), fx.entry(1, 0, da, kCampA)});
  auto log_b = fx.signed_log(6, {fx.entry(0, 0, shared, kCampB), fx.entry(1, 0, db, kCampB)});

  std::vector<ReplicaId> fetched;
  std::optional<ProofOfCulpability> produced;
  Auditor auditor(&fx.keys, fx.lookup,
                  {[&](ReplicaId target, Instance, Instance) { fetched.push_back(target); },
                   [&](const ProofOfCulpability& poc) { produced = poc; },
                   nullptr});

  SUBCASE("poc emerges once both camps responded") {
    auditor.start_checkpoint_audit(2, 0, {4}, {6});
    CHECK(fetched.size() == 2);
    auditor.on_log(4, log_a);
    CHECK_FALSE(produced.has_value());
    auditor.on_log(6, log_b);
    REQUIRE(produced.has_value());
    CHECK(produced->culprits == kCoalition);
  }

  SUBCASE("stable checkpoint cancels the audit") {
    auditor.start_checkpoint_audit(2, 0, {4}, {6});
    auditor.on_log(4, log_a);
    auditor.cancel_boundary(2);
    auditor.on_log(6, log_b);
    CHECK_FALSE(produced.has_value());
  }

  SUBCASE("same-camp logs alone never conclude a checkpoint audit") {
    auditor.start_checkpoint_audit(2, 0, {4, 3}, {6});
    auto log_a2 = fx.signed_log(3, {fx.entry(0, 0, shared, kCampA), fx.entry(1, 0, da, kCampA)});
    auditor.on_log(4, log_a);
    auditor.on_log(3, log_a2);
    CHECK_FALSE(produced.has_value());
  }

  SUBCASE("panic audits are rate limited per operation") {
    auditor.start_panic_audit(100, 2, {4, 6}, 0, 1);
    CHECK(fetched.size() == 2);
    auditor.start_panic_audit(100, 2, {4, 6}, 0, 1);
    CHECK(fetched.size() == 2);  // second start is a no-op
    CHECK(auditor.has_audited_op(100, 2));
  }
}

TEST_CASE("log owner signature is required") {
  Fixture fx;
  Batch b{fx.request(100, 1, "a")};
  auto log = fx.signed_log(3, {fx.entry(0, 0, b, kCampA)});
  CHECK(verify_log_signature(log, fx.keys));
  log.entries[0].regency = 9;  // content changed after signing
  CHECK_FALSE(verify_log_signature(log, fx.keys));
}
