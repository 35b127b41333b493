// SPDX-License-Identifier: Apache-2.0
#include "wbft/quorum.hpp"

#include <algorithm>
#include <numeric>

namespace wbft {

std::uint64_t WeightConfig::units_of(ReplicaId id) const {
  auto it = std::lower_bound(roster.begin(), roster.end(), id);
  if (it == roster.end() || *it != id) return 0;
  return weights[static_cast<std::size_t>(it - roster.begin())];
}

bool WeightConfig::has_member(ReplicaId id) const {
  return std::binary_search(roster.begin(), roster.end(), id);
}

std::uint32_t optimal_threshold(std::uint32_t n) { return n == 0 ? 0 : (n - 1) / 3; }

std::uint32_t fast_threshold(std::uint32_t t) { return (t + 1) / 2; }

WeightConfig compute_weight_config(std::span<const ReplicaId> ranking, std::uint32_t t_eff) {
  const auto n = static_cast<std::uint32_t>(ranking.size());
  if (t_eff == 0) throw std::invalid_argument("threshold must be positive");
  if (n < 3 * t_eff + 1) throw std::invalid_argument("infeasible resilience: n < 3t+1");

  WeightConfig cfg;
  cfg.scheme = WeightScheme::bimodal;
  cfg.n = n;
  cfg.t_eff = t_eff;
  cfg.delta = n - 3 * t_eff - 1;
  cfg.vmax_units = static_cast<std::uint64_t>(t_eff) + cfg.delta;
  cfg.low_units = t_eff;
  cfg.quorum_units =
      static_cast<std::uint64_t>(t_eff) * (2ULL * t_eff + 2ULL * cfg.delta + 1ULL);

  cfg.roster.assign(ranking.begin(), ranking.end());
  std::sort(cfg.roster.begin(), cfg.roster.end());
  if (std::adjacent_find(cfg.roster.begin(), cfg.roster.end()) != cfg.roster.end())
    throw std::invalid_argument("ranking contains duplicate replica ids");

  cfg.weights.assign(n, cfg.low_units);
  for (std::uint32_t r = 0; r < 2 * t_eff; ++r) {
    auto it = std::lower_bound(cfg.roster.begin(), cfg.roster.end(), ranking[r]);
    cfg.weights[static_cast<std::size_t>(it - cfg.roster.begin())] = cfg.vmax_units;
  }
  cfg.total_units = std::accumulate(cfg.weights.begin(), cfg.weights.end(), std::uint64_t{0});
  return cfg;
}

WeightConfig egalitarian_config(std::span<const ReplicaId> roster, std::uint32_t t) {
  const auto n = static_cast<std::uint32_t>(roster.size());
  if (t == 0 || n < 3 * t + 1) throw std::invalid_argument("infeasible resilience: n < 3t+1");
  WeightConfig cfg;
  cfg.scheme = WeightScheme::egalitarian;
  cfg.n = n;
  cfg.t_eff = t;
  cfg.delta = n - 3 * t - 1;
  cfg.vmax_units = 1;
  cfg.low_units = 1;
  cfg.quorum_units = (n + t + 2ULL) / 2;  // ceil((n+t+1)/2)
  cfg.total_units = n;
  cfg.roster.assign(roster.begin(), roster.end());
  std::sort(cfg.roster.begin(), cfg.roster.end());
  cfg.weights.assign(n, 1);
  return cfg;
}

bool is_quorum(const WeightConfig& cfg, std::span<const ReplicaId> members) {
  std::uint64_t sum = 0;
  for (auto id : members) sum += cfg.units_of(id);
  return sum >= cfg.quorum_units;
}

namespace {
// Cardinality of the minimal quorum formed by accumulating weights in the
// given order (heaviest-first for the smallest quorum, lightest-first for
// the largest minimal quorum).
std::uint32_t greedy_cardinality(const WeightConfig& cfg, bool heaviest_first) {
  std::vector<std::uint64_t> w = cfg.weights;
  std::sort(w.begin(), w.end());
  if (heaviest_first) std::reverse(w.begin(), w.end());
  std::uint64_t sum = 0;
  std::uint32_t count = 0;
  for (auto u : w) {
    sum += u;
    ++count;
    if (sum >= cfg.quorum_units) return count;
  }
  return cfg.n;  // whole roster; reachable only for degenerate configs
}
}  // namespace

std::uint32_t min_quorum_cardinality(const WeightConfig& cfg) {
  return greedy_cardinality(cfg, true);
}

std::uint32_t max_quorum_cardinality(const WeightConfig& cfg) {
  return greedy_cardinality(cfg, false);
}

ModeThresholds make_thresholds(WeightConfig cfg, bool fast) {
  ModeThresholds th;
  th.fast = fast;
  th.t_eff = cfg.t_eff;
  th.weak_units = static_cast<std::uint64_t>(cfg.t_eff) * cfg.vmax_units + cfg.low_units;
  th.strong_units = cfg.quorum_units;
  th.final_count = fast ? cfg.n - cfg.t_eff - 1 : 0;
  th.config = std::move(cfg);
  return th;
}

}  // namespace wbft
