// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "wbft/auth.hpp"

using namespace wbft;

TEST_CASE("attest/check round trip, tamper, wrong signer") {
  KeyStore keys(42);
  Signer s3 = keys.signer_for(3);
  Bytes m = str_bytes("hello quorum");
  Signature sig = s3.attest(m);

  CHECK(keys.check(3, m, sig));

  Bytes tampered = m;
  tampered[0] ^= 1;
  CHECK_FALSE(keys.check(3, tampered, sig));

  CHECK_FALSE(keys.check(4, m, sig));

  Signature forged = sig;
  forged.signer = 4;
  CHECK_FALSE(keys.check(4, m, forged));
}

TEST_CASE("digest determinism and distinctness") {
  Bytes a = str_bytes("payload-a");
  Bytes b = str_bytes("payload-b");
  CHECK(sha256(a) == sha256(a));
  CHECK_FALSE(sha256(a) == sha256(b));
}

TEST_CASE("empty payload digest is the SHA-256 constant") {
  Digest d = sha256(nullptr, 0);
  CHECK(d.hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("different key stores yield incompatible signatures") {
  KeyStore a(1), b(2);
  Bytes m = str_bytes("x");
  Signature sig = a.signer_for(0).attest(m);
  CHECK(a.check(0, m, sig));
  CHECK_FALSE(b.check(0, m, sig));
}
