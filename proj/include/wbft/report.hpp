// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>

#include "wbft/netsim.hpp"

namespace wbft {

/// Writes clients.csv, consensus.csv, timeline.csv and run_meta.csv into
/// outdir (created if missing). Throws std::runtime_error on IO failure.
void write_reports(const Trace& trace, const Scenario& sc, const std::string& outdir);

struct LevelStats {
  double mean_ms = 0;
  double median_ms = 0;
  double p95_ms = 0;
  std::uint32_t count = 0;
};

struct LoadedReport {
  std::map<std::string, std::string> meta;
  // (client, level) -> stats; level in {first, weak, strong, final}
  std::map<std::pair<std::uint32_t, std::string>, LevelStats> client_levels;
  std::vector<double> consensus_ms;  // decide - start per instance
};

LoadedReport load_report(const std::string& dir);  // throws on IO/parse failure

struct CompareResult {
  double consensus_speedup = 0;  // baseline mean / candidate mean
  std::map<std::string, double> level_speedup;  // baseline final vs candidate level
  std::map<std::uint32_t, double> per_client_final_speedup;
};

/// Speedups of `candidate` relative to `baseline`. Both runs must share the
/// matrix and workload (validated via run_meta); on mismatch returns nullopt
/// and sets error.
std::optional<CompareResult> compare_reports(const LoadedReport& baseline,
                                             const LoadedReport& candidate, std::string* error);

void write_compare_csv(const CompareResult& cmp, const std::string& path);

}  // namespace wbft
