// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>

#include "wbft/common.hpp"

namespace wbft {

/// 256-bit hash output.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  bool operator==(const Digest&) const = default;
  auto operator<=>(const Digest&) const = default;
  bool is_zero() const {
    for (auto b : bytes)
      if (b) return false;
    return true;
  }
  std::string hex() const { return to_hex(bytes.data(), bytes.size()); }
  std::string short_hex() const { return hex().substr(0, 12); }
};

Digest sha256(const std::uint8_t* data, std::size_t len);
inline Digest sha256(const Bytes& b) { return sha256(b.data(), b.size()); }

struct Signature {
  ProcessId signer = 0;
  std::array<std::uint8_t, 32> tag{};

  bool operator==(const Signature&) const = default;
};

/// Private signing handle. Only the harness hands these out, so a simulated
/// Byzantine process can sign for its own id but never for anyone else's.
class Signer {
 public:
  Signer() = default;
  Signer(ProcessId id, Bytes secret) : id_(id), secret_(std::move(secret)) {}

  ProcessId id() const { return id_; }
  Signature attest(const Bytes& payload) const;

 private:
  ProcessId id_ = 0;
  Bytes secret_;
};

/// Trusted-setup key registry. The mock scheme derives per-id secrets from a
/// master seed (documented, not security grade) and verifies tags by
/// recomputation; a real ECDSA-class scheme can be slotted in behind the same
/// attest/check shape.
class KeyStore {
 public:
  explicit KeyStore(std::uint64_t master_seed) : master_seed_(master_seed) {}

  Signer signer_for(ProcessId id) const;
  bool check(ProcessId claimed, const Bytes& payload, const Signature& sig) const;

 private:
  Bytes secret_for(ProcessId id) const;
  std::uint64_t master_seed_;
};

}  // namespace wbft
