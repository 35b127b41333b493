// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wbft/matrix.hpp"
#include "wbft/optimizer.hpp"
#include "wbft/quorum.hpp"

namespace wbft {

enum class Variant : std::uint8_t { flash = 0, conservative_only = 1 };

struct FaultDirective {
  enum class Kind : std::uint8_t { crash, silent, equivocate, slow_link, drop };
  TimeNs at = 0;
  Kind kind = Kind::crash;
  std::vector<std::uint32_t> targets;  // replica ids; kLeaderToken resolves at activation
  double factor = 1.0;                 // slow_link multiplier
  std::int64_t from = -1;              // link endpoints; -1 = any
  std::int64_t to = -1;
  TimeNs until = -1;  // heal time; -1 = permanent (subject to gst)
  int line = 0;       // scenario file line, for diagnostics
};

constexpr std::uint32_t kLeaderToken = 0xFFFFFFFFu;

/// One experiment: matrix, protocol parameters, workload and scripted
/// faults. Parsed from `key = value` text (see scenarios/README note in the
/// repo top-level README for the schema).
struct Scenario {
  std::string matrix_path;
  LatencyMatrix matrix;

  std::uint32_t n = 4;
  std::uint32_t t = 1;
  std::uint32_t theta = 400;
  std::uint32_t checkpoint_k = 16;
  std::uint32_t reopt_interval = 200;
  std::uint32_t batch_max = 64;

  Variant variant = Variant::flash;
  WeightScheme weights = WeightScheme::bimodal;
  Pattern pattern = Pattern::three_step;

  std::vector<std::uint32_t> client_regions;
  std::uint32_t requests_per_client = 10;
  std::uint32_t payload_bytes = 400;
  TimeNs think_max = 1000 * kMsNs;
  TimeNs client_log_check = 1500 * kMsNs;

  TimeNs duration = 600'000 * kMsNs;
  std::uint64_t seed = 1;
  bool jitter = false;
  double jitter_sigma = 0.05;
  TimeNs request_timer_floor = 500 * kMsNs;
  TimeNs gst = -1;

  std::vector<FaultDirective> faults;

  /// Structural validation; returns human-readable problems (empty = valid).
  std::vector<std::string> validate() const;
};

/// Parses a scenario file. Problems are reported as "line N: message".
/// The matrix referenced by the scenario is loaded relative to the scenario
/// file's directory unless the path is absolute.
Scenario load_scenario(const std::string& path, std::vector<std::string>& errors);

/// Parser core, usable on in-memory text (matrix must be attached by the
/// caller when matrix_path is empty).
Scenario parse_scenario_text(const std::string& text, const std::string& base_dir,
                             std::vector<std::string>& errors);

}  // namespace wbft
