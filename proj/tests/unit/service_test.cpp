// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "wbft/service.hpp"

using namespace wbft;

TEST_CASE("execution is order sensitive") {
  ChainService a, b;
  Bytes batch1 = str_bytes("batch-one");
  Bytes batch2 = str_bytes("batch-two");
  a.apply(0, batch1, {{100, 1}});
  a.apply(1, batch2, {{101, 1}});
  b.apply(0, batch2, {{101, 1}});
  b.apply(1, batch1, {{100, 1}});
  CHECK_FALSE(a.state_digest() == b.state_digest());
}

TEST_CASE("duplicate request returns the cached reply without advancing state") {
  ChainService s;
  auto first = s.apply(0, str_bytes("b0"), {{100, 1}});
  REQUIRE(first.size() == 1);
  CHECK(first[0].fresh);
  Digest after_first = s.state_digest();

  // Redelivery in a later batch: the batch itself advances the chain, the
  // request does not execute twice.
  auto second = s.apply(1, str_bytes("b1"), {{100, 1}});
  REQUIRE(second.size() == 1);
  CHECK_FALSE(second[0].fresh);
  CHECK(second[0].reply == first[0].reply);
  CHECK_FALSE(s.state_digest() == after_first);  // chain moved (new decision)
  CHECK(s.last_executed_seq(100) == 1);

  CHECK(s.cached_reply(100, 1).has_value());
  CHECK_FALSE(s.cached_reply(100, 2).has_value());
}

TEST_CASE("duplicated request inside one batch executes once") {
  ChainService s;
  auto execs = s.apply(0, str_bytes("bb"), {{100, 1}, {100, 1}});
  REQUIRE(execs.size() == 2);
  CHECK(execs[0].fresh);
  CHECK_FALSE(execs[1].fresh);
  CHECK(execs[0].reply == execs[1].reply);
}

TEST_CASE("snapshot and restore reproduce state and caches") {
  ChainService s;
  s.apply(0, str_bytes("b0"), {{100, 1}, {101, 1}});
  s.apply(1, str_bytes("b1"), {{100, 2}});
  Bytes snap = s.snapshot();

  ChainService r = ChainService::restore(snap);
  CHECK(r.state_digest() == s.state_digest());
  CHECK(r.last_executed_seq(100) == 2);
  CHECK(r.cached_reply(100, 2) == s.cached_reply(100, 2));

  // Divergence after the snapshot point leaves the snapshot untouched.
  s.apply(2, str_bytes("b2"), {{101, 2}});
  ChainService r2 = ChainService::restore(snap);
  CHECK_FALSE(r2.state_digest() == s.state_digest());
}
