// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "wbft/matrix.hpp"
#include "wbft/quorum.hpp"

namespace wbft {

enum class Pattern : std::uint8_t { three_step = 0, seven_step = 1 };

struct PredictionInput {
  const DelayMatrixNs* matrix = nullptr;
  const WeightConfig* cfg = nullptr;
  ReplicaId leader = 0;
  Pattern pattern = Pattern::three_step;
};

/// Earliest time at which accumulated weight of arrivals reaches
/// quorum_units. arrivals are (time, units) pairs; returns INT64_MAX when
/// the quorum is unreachable.
TimeNs weighted_completion(std::vector<std::pair<TimeNs, std::uint64_t>> arrivals,
                           std::uint64_t quorum_units);

/// Deterministic network-only model of one consensus instance.
///
/// three_step: the leader's proposal reaches replica j after d(L,j); replica
/// i completes its WRITE quorum at the weighted completion of arrivals
/// d(L,j)+d(j,i); the ACCEPT phase repeats the same pattern over the WRITE
/// completion times; the returned latency is the leader's own decision time,
/// which gates its next proposal.
///
/// seven_step: a leader-collects-and-redistributes pattern. Replicas vote as
/// soon as the current-phase broadcast reaches them, the leader completes a
/// phase at the weighted completion of vote round trips, redistributes, and
/// decides after the third vote phase completes at the leader.
TimeNs predict_latency_ns(const PredictionInput& in);

struct AnnealParams {
  std::uint32_t iterations = 10000;
  double cooling = 0.98;
};

struct AnnealResult {
  WeightConfig cfg;
  ReplicaId leader = 0;
  TimeNs predicted_ns = 0;
};

/// Simulated-annealing search over (choice of 2*t_eff high-weight replicas,
/// leader) minimizing predicted latency. Deterministic for a given seed; the
/// result never predicts worse than the id-ordered, lowest-id-leader start.
AnnealResult anneal(const DelayMatrixNs& matrix, std::span<const ReplicaId> roster,
                    std::uint32_t t_eff, Pattern pattern, std::uint64_t seed,
                    const AnnealParams& params = {});

/// Predicted latency of the best conservative-mode configuration; feeds the
/// fast-mode performance watchdog.
TimeNs expectation_threshold_ns(const DelayMatrixNs& matrix, std::span<const ReplicaId> roster,
                                std::uint32_t t, Pattern pattern, std::uint64_t seed);

}  // namespace wbft
