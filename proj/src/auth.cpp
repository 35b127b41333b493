// SPDX-License-Identifier: Apache-2.0
#include "wbft/auth.hpp"

#include <openssl/sha.h>

namespace wbft {

Digest sha256(const std::uint8_t* data, std::size_t len) {
  Digest d;
  SHA256(data, len, d.bytes.data());
  return d;
}

namespace {
Digest tag_over(const Bytes& secret, const Bytes& payload) {
  Bytes buf;
  buf.reserve(secret.size() + payload.size());
  buf.insert(buf.end(), secret.begin(), secret.end());
  buf.insert(buf.end(), payload.begin(), payload.end());
  return sha256(buf);
}
}  // namespace

Signature Signer::attest(const Bytes& payload) const {
  Signature sig;
  sig.signer = id_;
  sig.tag = tag_over(secret_, payload).bytes;
  return sig;
}

Bytes KeyStore::secret_for(ProcessId id) const {
  Bytes secret(16);
  std::uint64_t s = mix_seed(master_seed_, 0x6b657973ULL + id);
  for (std::size_t i = 0; i < secret.size(); i += 8) {
    std::uint64_t w = splitmix64(s);
    for (std::size_t j = 0; j < 8 && i + j < secret.size(); ++j)
      secret[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
  }
  return secret;
}

Signer KeyStore::signer_for(ProcessId id) const { return Signer(id, secret_for(id)); }

bool KeyStore::check(ProcessId claimed, const Bytes& payload, const Signature& sig) const {
  if (sig.signer != claimed) return false;
  return tag_over(secret_for(claimed), payload).bytes == sig.tag;
}

}  // namespace wbft
