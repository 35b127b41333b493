// SPDX-License-Identifier: Apache-2.0
#include "wbft/common.hpp"

#include <cmath>

namespace wbft {

std::string format_ms(TimeNs ns) {
  bool neg = ns < 0;
  std::uint64_t us = static_cast<std::uint64_t>(neg ? -ns : ns) / 1000;
  std::uint64_t whole = us / 1000;
  std::uint64_t frac = us % 1000;
  std::string out = neg ? "-" : "";
  out += std::to_string(whole);
  out += '.';
  if (frac < 100) out += '0';
  if (frac < 10) out += '0';
  out += std::to_string(frac);
  return out;
}

std::string to_hex(const std::uint8_t* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = real();
  } while (u1 <= 1e-12);
  double u2 = real();
  double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

}  // namespace wbft
