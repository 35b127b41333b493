// SPDX-License-Identifier: Apache-2.0
#include "wbft/view.hpp"

#include <cassert>
#include <stdexcept>

namespace wbft {

void SystemDirectory::ensure_view(const ViewInfo& v) {
  auto [it, inserted] = views_.emplace(v.regency, v);
  if (!inserted) {
    // Correct replicas derive views deterministically; a mismatch here means
    // a protocol bug, not an adversary.
    assert(it->second.fast == v.fast && it->second.leader == v.leader &&
           it->second.thresholds.config == v.thresholds.config);
  }
}

void SystemDirectory::ensure_epoch(const MembershipInfo& m) {
  auto [it, inserted] = epochs_.emplace(m.epoch, m);
  if (!inserted) assert(it->second.roster == m.roster && it->second.t == m.t);
}

const ViewInfo* SystemDirectory::view(Regency r) const {
  auto it = views_.find(r);
  return it == views_.end() ? nullptr : &it->second;
}

const MembershipInfo* SystemDirectory::epoch(std::uint64_t e) const {
  auto it = epochs_.find(e);
  return it == epochs_.end() ? nullptr : &it->second;
}

const ViewInfo& SystemDirectory::latest_view() const {
  if (views_.empty()) throw std::logic_error("no views registered");
  return views_.rbegin()->second;
}

std::uint64_t SystemDirectory::latest_epoch() const {
  return epochs_.empty() ? 0 : epochs_.rbegin()->first;
}

const WeightConfig* SystemDirectory::config_for(Regency r) const {
  auto* v = view(r);
  return v ? &v->thresholds.config : nullptr;
}

}  // namespace wbft
