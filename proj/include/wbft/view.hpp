// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>

#include "wbft/quorum.hpp"

namespace wbft {

/// One regency: a fixed leader plus the thresholds in force.
struct ViewInfo {
  Regency regency = 0;
  std::uint64_t epoch = 0;  // membership epoch
  bool fast = false;
  ReplicaId leader = 0;
  ModeThresholds thresholds;
};

struct MembershipInfo {
  std::uint64_t epoch = 0;
  std::vector<ReplicaId> roster;
  std::uint32_t t = 0;
  std::uint32_t t_fast = 0;
};

/// Regency and membership bookkeeping shared by every process in a run.
///
/// View transitions are deterministic functions of the decided history, so
/// all correct replicas register identical entries; the registry asserts
/// that. It doubles as the regency -> weight-config lookup used when
/// verifying decision proofs, and stands in for the signed view metadata a
/// deployment would distribute to clients.
class SystemDirectory {
 public:
  void ensure_view(const ViewInfo& v);
  void ensure_epoch(const MembershipInfo& m);

  const ViewInfo* view(Regency r) const;
  const MembershipInfo* epoch(std::uint64_t e) const;
  const ViewInfo& latest_view() const;
  std::uint64_t latest_epoch() const;

  /// Weight config governing proofs formed under regency r (null if unknown).
  const WeightConfig* config_for(Regency r) const;

  std::map<Regency, ViewInfo> const& views() const { return views_; }

 private:
  std::map<Regency, ViewInfo> views_;
  std::map<std::uint64_t, MembershipInfo> epochs_;
};

}  // namespace wbft
