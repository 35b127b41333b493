// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "wbft/common.hpp"

namespace wbft {

/// n x n one-way delays. File format: a header row of region labels, then n
/// comma-separated rows of millisecond floats. Diagonal must be zero;
/// symmetry is not required.
struct LatencyMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> delays_ms;

  std::size_t size() const { return labels.size(); }
  double at(std::size_t from, std::size_t to) const { return delays_ms[from][to]; }

  /// Validates shape, non-negativity, finiteness and zero diagonal.
  /// Returns an error description or empty string.
  std::string validate() const;

  static LatencyMatrix load(const std::string& path);  // throws std::runtime_error
};

/// Integer-nanosecond view used by both the simulator and the prediction
/// model so the two agree exactly.
struct DelayMatrixNs {
  std::vector<std::vector<TimeNs>> d;

  std::size_t size() const { return d.size(); }
  TimeNs at(std::size_t from, std::size_t to) const { return d[from][to]; }

  static DelayMatrixNs from(const LatencyMatrix& m);
};

}  // namespace wbft
