// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "wbft/messages.hpp"

using namespace wbft;

namespace {

Request make_request(const KeyStore& keys, ProcessId client, std::uint64_t seq,
                     const std::string& payload) {
  Request req;
  req.client = client;
  req.seq = seq;
  req.payload = str_bytes(payload);
  req.sig = keys.signer_for(client).attest(req.signing_bytes());
  return req;
}

}  // namespace

// One round-trip property over a message that exercises every nested codec
// (batch, proof, signatures) instead of a per-type matrix.
TEST_CASE("sync bundle round trip preserves bytes") {
  KeyStore keys(7);
  Batch batch{make_request(keys, 100, 1, "a"), make_request(keys, 101, 4, "bb")};

  LogEntry entry;
  entry.instance = 3;
  entry.regency = 2;
  entry.batch = batch;
  entry.proof.instance = 3;
  entry.proof.regency = 2;
  entry.proof.value = batch_digest(batch);
  for (ReplicaId r = 0; r < 3; ++r) {
    entry.proof.accepts.push_back(keys.signer_for(r).attest(
        vote_signing_bytes(Phase::accept, 3, 2, entry.proof.value)));
  }

  SignedLog log;
  log.owner = 1;
  log.epoch = 0;
  log.fast = true;
  log.last_stable = 0;
  log.boundaries = {{16, sha256(str_bytes("snap"))}};
  log.entries = {entry};
  log.sig = keys.signer_for(1).attest(log.signing_bytes());

  SyncBundle bundle;
  bundle.new_regency = 5;
  bundle.ran_forensics = true;
  bundle.logs = {log};
  bundle.sig = keys.signer_for(2).attest(bundle.signing_bytes());

  Bytes wire = encode_message(bundle);
  auto decoded = decode_message(wire);
  REQUIRE(decoded.has_value());
  const auto* back = std::get_if<SyncBundle>(&*decoded);
  REQUIRE(back != nullptr);
  CHECK(encode_message(*back) == wire);

  // Signature stability: the decoded copy verifies against the same key.
  CHECK(keys.check(2, back->signing_bytes(), back->sig));
  CHECK(keys.check(1, back->logs[0].signing_bytes(), back->logs[0].sig));
}

TEST_CASE("every message type survives encode/decode") {
  KeyStore keys(9);
  Digest d = sha256(str_bytes("v"));

  std::vector<AnyMsg> msgs;
  msgs.push_back(make_request(keys, 100, 1, "hello"));
  Propose p;
  p.instance = 1;
  p.regency = 0;
  p.propose_ts = 12345;
  p.batch = {make_request(keys, 100, 1, "hello")};
  msgs.push_back(p);
  Vote v;
  v.phase = Phase::accept;
  v.instance = 1;
  v.value = d;
  v.sig = keys.signer_for(0).attest(v.signing_bytes());
  msgs.push_back(v);
  Reply rep;
  rep.replica = 2;
  rep.client = 100;
  rep.seq = 1;
  rep.result = str_bytes("res");
  rep.fast = true;
  rep.sig = keys.signer_for(2).attest(rep.signing_bytes());
  msgs.push_back(rep);
  CheckpointMsg ck;
  ck.replica = 1;
  ck.upto = 16;
  ck.state = d;
  ck.sig = keys.signer_for(1).attest(ck.signing_bytes());
  msgs.push_back(ck);
  StopMsg stop;
  stop.replica = 3;
  stop.regency = 4;
  stop.reason = StopReason::latency_disappointment;
  stop.sig = keys.signer_for(3).attest(stop.signing_bytes());
  msgs.push_back(stop);
  msgs.push_back(LogQuery{100, 1, keys.signer_for(100).attest(LogQuery{100, 1, {}}.signing_bytes())});
  msgs.push_back(LogFetch{0, 1, 16});

  for (const auto& m : msgs) {
    Bytes wire = encode_message(m);
    auto back = decode_message(wire);
    REQUIRE(back.has_value());
    CHECK(encode_message(*back) == wire);
  }
}

TEST_CASE("truncated bytes decode to nothing") {
  KeyStore keys(9);
  Bytes wire = encode_message(make_request(keys, 100, 1, "hello"));
  for (std::size_t cut : {std::size_t{1}, wire.size() / 2, wire.size() - 1}) {
    Bytes partial(wire.begin(), wire.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_FALSE(decode_message(partial).has_value());
  }
}

TEST_CASE("reconfigure payload round trip and rejection") {
  ProofOfCulpability poc;
  poc.kind = PocKind::double_accept;
  poc.instance = 9;
  poc.regency = 3;
  poc.culprits = {1, 4, 5};
  Bytes payload = make_reconfigure_payload(poc.culprits, poc);
  CHECK(is_reconfigure_payload(payload));
  auto parsed = parse_reconfigure_payload(payload);
  REQUIRE(parsed.has_value());
  CHECK(parsed->first == std::vector<ReplicaId>{1, 4, 5});
  CHECK(parsed->second.instance == 9);
  CHECK_FALSE(is_reconfigure_payload(str_bytes("not-a-reconfig")));
}
