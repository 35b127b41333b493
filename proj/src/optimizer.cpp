// SPDX-License-Identifier: Apache-2.0
#include "wbft/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wbft {

TimeNs weighted_completion(std::vector<std::pair<TimeNs, std::uint64_t>> arrivals,
                           std::uint64_t quorum_units) {
  std::sort(arrivals.begin(), arrivals.end());
  std::uint64_t sum = 0;
  for (const auto& [t, u] : arrivals) {
    sum += u;
    if (sum >= quorum_units) return t;
  }
  return std::numeric_limits<TimeNs>::max();
}

namespace {

TimeNs predict_three_step(const DelayMatrixNs& m, const WeightConfig& cfg, ReplicaId leader) {
  const auto& roster = cfg.roster;
  const std::size_t n = roster.size();

  std::vector<TimeNs> write_done(n);
  std::vector<std::pair<TimeNs, std::uint64_t>> arrivals(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      arrivals[j] = {m.at(leader, roster[j]) + m.at(roster[j], roster[i]), cfg.weights[j]};
    write_done[i] = weighted_completion(arrivals, cfg.quorum_units);
  }

  for (std::size_t j = 0; j < n; ++j)
    arrivals[j] = {write_done[j] + m.at(roster[j], leader), cfg.weights[j]};
  return weighted_completion(arrivals, cfg.quorum_units);
}

TimeNs predict_seven_step(const DelayMatrixNs& m, const WeightConfig& cfg, ReplicaId leader) {
  const auto& roster = cfg.roster;
  const std::size_t n = roster.size();
  std::vector<std::pair<TimeNs, std::uint64_t>> rtts(n);
  for (std::size_t j = 0; j < n; ++j)
    rtts[j] = {m.at(leader, roster[j]) + m.at(roster[j], leader), cfg.weights[j]};
  TimeNs phase = weighted_completion(std::move(rtts), cfg.quorum_units);
  if (phase == std::numeric_limits<TimeNs>::max()) return phase;
  return 3 * phase;  // three vote-collection phases gate the leader's decision
}

}  // namespace

TimeNs predict_latency_ns(const PredictionInput& in) {
  if (in.pattern == Pattern::seven_step) return predict_seven_step(*in.matrix, *in.cfg, in.leader);
  return predict_three_step(*in.matrix, *in.cfg, in.leader);
}

namespace {

WeightConfig config_from_highs(const std::vector<ReplicaId>& highs,
                               std::span<const ReplicaId> roster, std::uint32_t t_eff) {
  std::vector<ReplicaId> ranking(highs);
  for (auto id : roster)
    if (!std::binary_search(highs.begin(), highs.end(), id)) ranking.push_back(id);
  return compute_weight_config(ranking, t_eff);
}

}  // namespace

AnnealResult anneal(const DelayMatrixNs& matrix, std::span<const ReplicaId> roster,
                    std::uint32_t t_eff, Pattern pattern, std::uint64_t seed,
                    const AnnealParams& params) {
  std::vector<ReplicaId> ids(roster.begin(), roster.end());
  std::sort(ids.begin(), ids.end());
  const std::size_t n = ids.size();
  const std::size_t high_count = 2 * static_cast<std::size_t>(t_eff);

  std::vector<ReplicaId> highs(ids.begin(), ids.begin() + high_count);
  ReplicaId leader = ids[0];

  auto energy = [&](const std::vector<ReplicaId>& h, ReplicaId l) {
    WeightConfig cfg = config_from_highs(h, ids, t_eff);
    return predict_latency_ns({&matrix, &cfg, l, pattern});
  };

  TimeNs cur_e = energy(highs, leader);
  std::vector<ReplicaId> best_h = highs;
  ReplicaId best_l = leader;
  TimeNs best_e = cur_e;

  Rng rng(mix_seed(seed, 0x616e6e65616cULL));
  double temp = std::max<double>(static_cast<double>(cur_e) / 2.0, 1.0);

  // Cooling is applied in small epochs so the schedule spans the whole
  // iteration budget instead of freezing within the first few hundred moves.
  constexpr std::uint32_t kCoolEvery = 25;

  for (std::uint32_t it = 0; it < params.iterations; ++it) {
    if (it > 0 && it % kCoolEvery == 0) temp *= params.cooling;
    std::vector<ReplicaId> cand_h = highs;
    ReplicaId cand_l = leader;
    bool move_leader = n > 1 && (high_count == 0 || rng.below(2) == 0);
    if (move_leader) {
      ReplicaId pick = ids[rng.below(n)];
      if (pick == cand_l) pick = ids[(std::find(ids.begin(), ids.end(), pick) - ids.begin() + 1) % n];
      cand_l = pick;
    } else {
      std::vector<ReplicaId> lows;
      for (auto id : ids)
        if (!std::binary_search(cand_h.begin(), cand_h.end(), id)) lows.push_back(id);
      ReplicaId out = cand_h[rng.below(cand_h.size())];
      ReplicaId in = lows[rng.below(lows.size())];
      cand_h.erase(std::find(cand_h.begin(), cand_h.end(), out));
      cand_h.insert(std::lower_bound(cand_h.begin(), cand_h.end(), in), in);
    }

    TimeNs cand_e = energy(cand_h, cand_l);
    TimeNs delta = cand_e - cur_e;
    if (delta <= 0 || std::exp(-static_cast<double>(delta) / temp) > rng.real()) {
      highs = std::move(cand_h);
      leader = cand_l;
      cur_e = cand_e;
      if (cur_e < best_e) {
        best_e = cur_e;
        best_h = highs;
        best_l = leader;
      }
    }
  }

  // Deterministic greedy polish: walk single swaps and leader moves to a
  // local fixpoint. Keeps small instances at the true optimum.
  bool improved = true;
  while (improved) {
    improved = false;
    for (auto id : ids) {
      if (id == best_l) continue;
      TimeNs e = energy(best_h, id);
      if (e < best_e) {
        best_e = e;
        best_l = id;
        improved = true;
      }
    }
    std::vector<ReplicaId> lows;
    for (auto id : ids)
      if (!std::binary_search(best_h.begin(), best_h.end(), id)) lows.push_back(id);
    for (auto out : std::vector<ReplicaId>(best_h)) {
      for (auto in : lows) {
        std::vector<ReplicaId> cand = best_h;
        cand.erase(std::find(cand.begin(), cand.end(), out));
        cand.insert(std::lower_bound(cand.begin(), cand.end(), in), in);
        TimeNs e = energy(cand, best_l);
        if (e < best_e) {
          best_e = e;
          best_h = std::move(cand);
          improved = true;
          break;
        }
      }
      if (improved) break;
    }
  }

  AnnealResult res;
  res.cfg = config_from_highs(best_h, ids, t_eff);
  res.leader = best_l;
  res.predicted_ns = best_e;
  return res;
}

TimeNs expectation_threshold_ns(const DelayMatrixNs& matrix, std::span<const ReplicaId> roster,
                                std::uint32_t t, Pattern pattern, std::uint64_t seed) {
  return anneal(matrix, roster, t, pattern, seed).predicted_ns;
}

}  // namespace wbft
