// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numeric>

#include "wbft/quorum.hpp"

using namespace wbft;

namespace {

std::vector<ReplicaId> iota_ids(std::uint32_t n) {
  std::vector<ReplicaId> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

// Enumerates all subsets of the roster satisfying is_quorum. Used as the
// brute-force oracle for the quorum-system laws at small n.
std::vector<std::uint32_t> quorum_masks(const WeightConfig& cfg) {
  std::vector<std::uint32_t> out;
  const std::uint32_t n = cfg.n;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<ReplicaId> members;
    for (std::uint32_t i = 0; i < n; ++i)
      if (mask & (1u << i)) members.push_back(cfg.roster[i]);
    if (is_quorum(cfg, members)) out.push_back(mask);
  }
  return out;
}

std::uint64_t mask_units(const WeightConfig& cfg, std::uint32_t mask) {
  std::uint64_t sum = 0;
  for (std::uint32_t i = 0; i < cfg.n; ++i)
    if (mask & (1u << i)) sum += cfg.weights[i];
  return sum;
}

}  // namespace

TEST_CASE("bimodal weights for n=21 t=6") {
  auto ids = iota_ids(21);
  WeightConfig cfg = compute_weight_config(ids, 6);
  CHECK(cfg.delta == 2);
  CHECK(cfg.vmax_units == 8);
  CHECK(cfg.low_units == 6);
  CHECK(cfg.quorum_units == 102);
  CHECK(cfg.total_units == 6u * (21 + 2 * 2));
  std::size_t high = 0;
  for (auto w : cfg.weights)
    if (w == 8) ++high;
  CHECK(high == 12);
  CHECK(min_quorum_cardinality(cfg) == 13);
  CHECK(max_quorum_cardinality(cfg) == 15);
}

TEST_CASE("bimodal weights for n=21 t=3") {
  auto ids = iota_ids(21);
  WeightConfig cfg = compute_weight_config(ids, 3);
  CHECK(cfg.delta == 11);
  CHECK(cfg.vmax_units == 14);
  CHECK(cfg.low_units == 3);
  CHECK(cfg.quorum_units == 87);
  CHECK(min_quorum_cardinality(cfg) == 7);
  CHECK(max_quorum_cardinality(cfg) == 18);

  // 6 high-weight replicas plus one low reach exactly 87 units.
  std::vector<ReplicaId> six_high(ids.begin(), ids.begin() + 6);
  CHECK_FALSE(is_quorum(cfg, six_high));
  std::vector<ReplicaId> seven = six_high;
  seven.push_back(20);
  CHECK(is_quorum(cfg, seven));

  // The whole roster is always a quorum.
  CHECK(is_quorum(cfg, ids));
}

TEST_CASE("egalitarian degeneration n=4 t=1") {
  auto ids = iota_ids(4);
  WeightConfig cfg = compute_weight_config(ids, 1);
  CHECK(cfg.delta == 0);
  CHECK(cfg.vmax_units == cfg.low_units);
  CHECK(min_quorum_cardinality(cfg) == 3);
  CHECK(max_quorum_cardinality(cfg) == 3);
  CHECK(is_quorum(cfg, std::vector<ReplicaId>{0, 2, 3}));
  CHECK_FALSE(is_quorum(cfg, std::vector<ReplicaId>{0, 3}));
}

TEST_CASE("ranking controls who holds the high weight") {
  std::vector<ReplicaId> ranking{4, 2, 0, 1, 3, 5, 6};
  WeightConfig cfg = compute_weight_config(ranking, 2);
  CHECK(cfg.units_of(4) == cfg.vmax_units);
  CHECK(cfg.units_of(2) == cfg.vmax_units);
  CHECK(cfg.units_of(0) == cfg.vmax_units);
  CHECK(cfg.units_of(1) == cfg.vmax_units);
  CHECK(cfg.units_of(3) == cfg.low_units);
  CHECK(cfg.units_of(6) == cfg.low_units);
}

TEST_CASE("infeasible resilience rejected") {
  auto ids = iota_ids(6);
  CHECK_THROWS_AS(compute_weight_config(ids, 2), std::invalid_argument);
  CHECK_THROWS_AS(egalitarian_config(ids, 2), std::invalid_argument);
}

TEST_CASE("egalitarian config uses the dissemination quorum") {
  auto ids = iota_ids(21);
  WeightConfig cfg = egalitarian_config(ids, 6);
  CHECK(cfg.quorum_units == 14);  // ceil((21+6+1)/2)
  CHECK(min_quorum_cardinality(cfg) == 14);
  CHECK(max_quorum_cardinality(cfg) == 14);
}

// Exhaustive quorum-system laws over every feasible (n, t_eff) at small n.
// For both the full and the fast threshold: consistency (every two quorums
// intersect in at least t_eff+1 replicas, so never inside a faulty set),
// availability (any n - t_eff replicas form a quorum), cardinality bounds,
// overlap weight, and the delta = 0 degeneration.
TEST_CASE("quorum laws by exhaustive enumeration, n in [4,10]") {
  for (std::uint32_t n = 4; n <= 10; ++n) {
    for (std::uint32_t t = 1; 3 * t + 1 <= n; ++t) {
      for (std::uint32_t t_eff : {t, fast_threshold(t)}) {
        auto ids = iota_ids(n);
        WeightConfig cfg = compute_weight_config(ids, t_eff);
        auto quorums = quorum_masks(cfg);
        REQUIRE(!quorums.empty());

        std::uint32_t min_card = n, max_minimal_card = 0;
        for (auto q : quorums) {
          std::uint32_t card = __builtin_popcount(q);
          min_card = std::min(min_card, card);
          // A minimal quorum stops being one when any member is removed.
          bool minimal = true;
          for (std::uint32_t i = 0; i < n && minimal; ++i)
            if ((q & (1u << i)) && mask_units(cfg, q & ~(1u << i)) >= cfg.quorum_units)
              minimal = false;
          if (minimal) max_minimal_card = std::max(max_minimal_card, card);
        }
        CHECK(min_card == 2 * t_eff + 1);
        CHECK(min_card == min_quorum_cardinality(cfg));
        CHECK(max_minimal_card == n - t_eff);
        CHECK(max_minimal_card == max_quorum_cardinality(cfg));

        // Availability: every subset of cardinality n - t_eff is a quorum.
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
          if (__builtin_popcount(mask) != static_cast<int>(n - t_eff)) continue;
          CHECK(mask_units(cfg, mask) >= cfg.quorum_units);
        }

        // Consistency and overlap weight.
        std::uint64_t overlap_lb =
            static_cast<std::uint64_t>(t_eff) * (t_eff + cfg.delta + 1);
        for (std::size_t a = 0; a < quorums.size(); ++a) {
          for (std::size_t b = a; b < quorums.size(); ++b) {
            std::uint32_t inter = quorums[a] & quorums[b];
            CHECK(__builtin_popcount(inter) >= static_cast<int>(t_eff + 1));
            CHECK(mask_units(cfg, inter) >= overlap_lb);
          }
        }
        // The adversary's heaviest t_eff replicas weigh strictly less than
        // any intersection.
        CHECK(overlap_lb > static_cast<std::uint64_t>(t_eff) * cfg.vmax_units);

        if (cfg.delta == 0) {
          std::uint32_t expect = (n + t_eff + 2) / 2;  // ceil((n+t+1)/2)
          for (auto q : quorums) {
            bool minimal = true;
            for (std::uint32_t i = 0; i < n && minimal; ++i)
              if ((q & (1u << i)) && mask_units(cfg, q & ~(1u << i)) >= cfg.quorum_units)
                minimal = false;
            if (minimal) CHECK(__builtin_popcount(q) == static_cast<int>(expect));
          }
        }
      }
    }
  }
}

TEST_CASE("mode thresholds carry the client reply rules") {
  auto ids = iota_ids(21);
  ModeThresholds fast = make_thresholds(compute_weight_config(ids, 3), true);
  CHECK(fast.weak_units == 45);    // (t_fast * V_max + 1) votes, scaled
  CHECK(fast.strong_units == 87);  // (2 t_fast * V_max + 1) votes, scaled
  CHECK(fast.final_count == 17);   // n - t_fast - 1 matching replies

  ModeThresholds cons = make_thresholds(compute_weight_config(ids, 6), false);
  CHECK(cons.strong_units == 102);
  CHECK(cons.final_count == 0);  // conservative: final is weight-based
}
