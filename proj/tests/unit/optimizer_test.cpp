// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "wbft/optimizer.hpp"

using namespace wbft;

namespace {

std::vector<ReplicaId> iota_ids(std::uint32_t n) {
  std::vector<ReplicaId> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

DelayMatrixNs uniform_matrix(std::size_t n, double ms) {
  DelayMatrixNs m;
  m.d.assign(n, std::vector<TimeNs>(n, ms_to_ns(ms)));
  for (std::size_t i = 0; i < n; ++i) m.d[i][i] = 0;
  return m;
}

// Random geometric matrix: nodes at random plane coordinates, delay
// proportional to distance plus a per-node access cost. Satisfies the
// triangle inequality, like real WAN latencies.
DelayMatrixNs random_matrix(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<double, double>> pts(n);
  std::vector<double> access(n);
  for (auto& p : pts) p = {rng.real() * 100.0, rng.real() * 100.0};
  for (auto& a : access) a = 0.5 + rng.real() * 2.0;
  DelayMatrixNs m;
  m.d.assign(n, std::vector<TimeNs>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double dx = pts[i].first - pts[j].first;
      double dy = pts[i].second - pts[j].second;
      m.d[i][j] = ms_to_ns(std::sqrt(dx * dx + dy * dy) + access[i] + access[j]);
    }
  return m;
}

// Exhaustive search over every (high-weight set, leader) choice; the oracle
// the annealer must match at small n.
TimeNs exhaustive_best(const DelayMatrixNs& m, std::uint32_t n, std::uint32_t t_eff,
                       Pattern pattern) {
  auto ids = iota_ids(n);
  TimeNs best = std::numeric_limits<TimeNs>::max();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + 2 * t_eff, true);
  std::sort(pick.begin(), pick.end());
  do {
    std::vector<ReplicaId> ranking;
    for (std::uint32_t i = 0; i < n; ++i)
      if (pick[i]) ranking.push_back(i);
    for (std::uint32_t i = 0; i < n; ++i)
      if (!pick[i]) ranking.push_back(i);
    WeightConfig cfg = compute_weight_config(ranking, t_eff);
    for (ReplicaId leader = 0; leader < n; ++leader)
      best = std::min(best, predict_latency_ns({&m, &cfg, leader, pattern}));
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace

TEST_CASE("zero matrix predicts zero for both patterns") {
  DelayMatrixNs m = uniform_matrix(7, 0.0);
  WeightConfig cfg = compute_weight_config(iota_ids(7), 2);
  CHECK(predict_latency_ns({&m, &cfg, 0, Pattern::three_step}) == 0);
  CHECK(predict_latency_ns({&m, &cfg, 0, Pattern::seven_step}) == 0);
}

TEST_CASE("uniform 10ms matrix, n=4: three steps of 10ms") {
  DelayMatrixNs m = uniform_matrix(4, 10.0);
  WeightConfig cfg = compute_weight_config(iota_ids(4), 1);
  CHECK(predict_latency_ns({&m, &cfg, 0, Pattern::three_step}) == ms_to_ns(30.0));
}

TEST_CASE("seven_step dominates three_step on nonzero matrices") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::uint32_t n = 4 + static_cast<std::uint32_t>(seed % 7);
    std::uint32_t t = optimal_threshold(n);
    DelayMatrixNs m = random_matrix(n, seed);
    WeightConfig cfg = compute_weight_config(iota_ids(n), t);
    for (ReplicaId leader = 0; leader < n; ++leader) {
      TimeNs three = predict_latency_ns({&m, &cfg, leader, Pattern::three_step});
      TimeNs seven = predict_latency_ns({&m, &cfg, leader, Pattern::seven_step});
      CHECK(seven >= three);
    }
  }
}

TEST_CASE("prediction scales exactly with the matrix") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::uint32_t n = 7;
    DelayMatrixNs m = random_matrix(n, seed);
    // Integer-millisecond entries make integer scaling exact.
    for (auto& row : m.d)
      for (auto& v : row) v = (v / kMsNs) * kMsNs;
    WeightConfig cfg = compute_weight_config(iota_ids(n), 2);
    const std::int64_t c = 3;
    DelayMatrixNs scaled = m;
    for (auto& row : scaled.d)
      for (auto& v : row) v *= c;
    for (Pattern p : {Pattern::three_step, Pattern::seven_step}) {
      TimeNs base = predict_latency_ns({&m, &cfg, 1, p});
      TimeNs big = predict_latency_ns({&scaled, &cfg, 1, p});
      CHECK(big == c * base);
    }
    // The optimum is invariant under uniform scaling.
    AnnealResult a = anneal(m, iota_ids(n), 2, Pattern::three_step, 99);
    AnnealResult b = anneal(scaled, iota_ids(n), 2, Pattern::three_step, 99);
    CHECK(b.predicted_ns == c * a.predicted_ns);
  }
}

TEST_CASE("two-cluster matrix: annealing finds the fast cluster") {
  // Replicas 0..4 close together (5 ms), 5..9 close together, 100 ms apart.
  const std::uint32_t n = 10;
  DelayMatrixNs m;
  m.d.assign(n, std::vector<TimeNs>(n, 0));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i == j) continue;
      bool same = (i < 5) == (j < 5);
      m.d[i][j] = ms_to_ns(same ? 5.0 : 100.0);
    }
  // t_eff = 1: quorum needs 2t+1 = 3 replicas, which fit inside one cluster.
  AnnealResult res = anneal(m, iota_ids(n), 1, Pattern::three_step, 7);
  CHECK(res.predicted_ns == exhaustive_best(m, n, 1, Pattern::three_step));
  CHECK(res.predicted_ns == ms_to_ns(15.0));  // three 5 ms steps inside a cluster
  bool leader_high = res.cfg.units_of(res.leader) == res.cfg.vmax_units;
  CHECK(leader_high);
}

TEST_CASE("anneal matches exhaustive search on random matrices") {
  // Modest seed count here; the acceptance suite runs the full 100.
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    std::uint32_t n = 5 + static_cast<std::uint32_t>(seed % 6);
    std::uint32_t t = optimal_threshold(n);
    std::uint32_t t_eff = (seed % 2) ? t : fast_threshold(t);
    DelayMatrixNs m = random_matrix(n, mix_seed(seed, 77));
    AnnealResult res = anneal(m, iota_ids(n), t_eff, Pattern::three_step, seed);
    CHECK(res.predicted_ns == exhaustive_best(m, n, t_eff, Pattern::three_step));
  }
}

TEST_CASE("anneal never returns worse than the identity configuration") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::uint32_t n = 9;
    DelayMatrixNs m = random_matrix(n, seed);
    WeightConfig initial = compute_weight_config(iota_ids(n), 2);
    TimeNs initial_pred = predict_latency_ns({&m, &initial, 0, Pattern::three_step});
    AnnealResult res = anneal(m, iota_ids(n), 2, Pattern::three_step, seed);
    CHECK(res.predicted_ns <= initial_pred);
  }
}

TEST_CASE("uniform matrix: flat landscape returns the initial configuration") {
  DelayMatrixNs m = uniform_matrix(7, 10.0);
  AnnealResult res = anneal(m, iota_ids(7), 2, Pattern::three_step, 3);
  TimeNs expect = predict_latency_ns({&m, &res.cfg, res.leader, Pattern::three_step});
  CHECK(res.predicted_ns == expect);
  WeightConfig initial = compute_weight_config(iota_ids(7), 2);
  CHECK(res.predicted_ns == predict_latency_ns({&m, &initial, 0, Pattern::three_step}));
}

TEST_CASE("expectation threshold equals the annealed conservative prediction") {
  DelayMatrixNs m = uniform_matrix(4, 10.0);
  CHECK(expectation_threshold_ns(m, iota_ids(4), 1, Pattern::three_step, 1) == ms_to_ns(30.0));
  DelayMatrixNs z = uniform_matrix(5, 0.0);
  CHECK(expectation_threshold_ns(z, iota_ids(5), 1, Pattern::three_step, 1) == 0);
}
