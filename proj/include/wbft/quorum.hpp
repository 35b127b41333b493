// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "wbft/common.hpp"

namespace wbft {

enum class WeightScheme : std::uint8_t {
  bimodal,      // 2t high-weight replicas, rest low weight
  egalitarian,  // one unit each, dissemination quorum of ceil((n+t+1)/2)
};

/// Replica voting weights and the quorum threshold, in exact integer units.
///
/// The bimodal scheme is scaled by t_eff: a low replica holds t_eff units and
/// a high replica t_eff + delta units, so the fractional per-replica voting
/// power 1 + delta/t_eff and the quorum bound 2*t_eff*(1 + delta/t_eff) + 1
/// become integers (quorum_units = t_eff * (2*t_eff + 2*delta + 1)) and all
/// threshold comparisons stay exact.
struct WeightConfig {
  WeightScheme scheme = WeightScheme::bimodal;
  std::uint32_t n = 0;
  std::uint32_t t_eff = 0;
  std::uint32_t delta = 0;
  std::uint64_t vmax_units = 0;  // weight of a high-weight replica
  std::uint64_t low_units = 0;
  std::uint64_t quorum_units = 0;
  std::uint64_t total_units = 0;
  std::vector<ReplicaId> roster;        // member ids, ascending
  std::vector<std::uint64_t> weights;   // parallel to roster

  std::uint64_t units_of(ReplicaId id) const;
  bool has_member(ReplicaId id) const;

  bool operator==(const WeightConfig&) const = default;
};

std::uint32_t optimal_threshold(std::uint32_t n);          // floor((n-1)/3)
std::uint32_t fast_threshold(std::uint32_t t);             // ceil(t/2)

/// Builds the bimodal weight distribution for the given effective threshold.
/// `ranking` must be a permutation of the roster, best-connected first; the
/// first 2*t_eff entries receive the high weight. Ties in the caller's
/// ranking metric are expected to already be broken by ascending id.
/// Throws std::invalid_argument when n < 3*t_eff + 1.
WeightConfig compute_weight_config(std::span<const ReplicaId> ranking, std::uint32_t t_eff);

/// All replicas weigh one unit; quorum is the classic dissemination quorum
/// of ceil((n+t+1)/2) replicas. Used for unweighted baseline runs.
WeightConfig egalitarian_config(std::span<const ReplicaId> roster, std::uint32_t t);

bool is_quorum(const WeightConfig& cfg, std::span<const ReplicaId> members);

std::uint32_t min_quorum_cardinality(const WeightConfig& cfg);
std::uint32_t max_quorum_cardinality(const WeightConfig& cfg);

/// Client reply thresholds for one mode of operation.
struct ModeThresholds {
  bool fast = false;
  std::uint32_t t_eff = 0;
  WeightConfig config;
  std::uint64_t weak_units = 0;    // t_eff * V_max + 1 votes, in units
  std::uint64_t strong_units = 0;  // 2 * t_eff * V_max + 1 votes, in units
  std::uint32_t final_count = 0;   // fast mode: n - t_fast - 1 matching replies
};

/// Derives the per-level reply thresholds from a weight config. In
/// conservative mode the final level is reached on strong_units of matching
/// weight; in fast mode it needs final_count matching replies by plain count.
ModeThresholds make_thresholds(WeightConfig cfg, bool fast);

}  // namespace wbft
