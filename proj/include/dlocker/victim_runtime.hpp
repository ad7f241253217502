#pragma once

#include <utility>
#include <vector>

#include "dlocker/lock.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

struct PlannedAccess {
  RowAddress addr;
  MemKind op = MemKind::Read;  // Read or Write
  std::vector<std::uint8_t> payload;
};

// Rewrites a legitimate access plan into the trusted instruction stream:
// a target that is currently locked gets the SWAP macro prepended and the
// access redirected to the post-swap home; a target already swapped out is
// redirected without a new swap.
inline std::vector<MemInstr> emit_unlock_requests(
    const std::vector<PlannedAccess>& plan, LockController& controller) {
  std::vector<MemInstr> out;
  // Track homes locally so consecutive plan entries see the effect of
  // swaps emitted earlier in this stream.
  std::map<RowAddress, RowAddress> pending_home;
  for (const PlannedAccess& pa : plan) {
    RowAddress target = pa.addr;
    const auto& entries = controller.table().entries();
    auto it = entries.find(pa.addr);
    if (it != entries.end()) {
      auto ph = pending_home.find(pa.addr);
      if (ph != pending_home.end()) {
        target = ph->second;  // swapped earlier in this plan
      } else if (it->second.state == LockState::Swapped) {
        target = it->second.current_home;
      } else {
        const RowAddress free_row = controller.pick_free_row(pa.addr);
        MemInstr sw;
        sw.kind = MemKind::Swap;
        sw.addr = pa.addr;
        sw.trusted = true;
        sw.swap_free = free_row;
        out.push_back(std::move(sw));
        pending_home[pa.addr] = free_row;
        target = free_row;
      }
    }
    MemInstr mi;
    mi.kind = pa.op;
    mi.addr = target;
    mi.trusted = true;
    mi.payload = pa.payload;
    out.push_back(std::move(mi));
  }
  return out;
}

}  // namespace dlocker
