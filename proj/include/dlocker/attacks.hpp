#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "dlocker/dram.hpp"
#include "dlocker/lock.hpp"
#include "dlocker/model.hpp"
#include "dlocker/page_table.hpp"
#include "dlocker/rng.hpp"
#include "dlocker/types.hpp"
#include "dlocker/weight_map.hpp"

namespace dlocker {

struct HammerResult {
  std::uint64_t activations_issued = 0;
  std::uint64_t activations_allowed = 0;
  bool flip_occurred = false;
};

struct AttackReport {
  std::uint64_t flips_attempted = 0;
  std::uint64_t flips_landed = 0;
  std::uint64_t denied_activations = 0;
  std::vector<std::pair<std::uint64_t, double>> accuracy_curve;  // (flips, acc)
  ns_t wall_model_time = 0;
};

// Double-sided hammer campaign against victim_row: untrusted activates to
// both neighbors until an aggressor accumulates t_rh allowed activations
// in one refresh window, or the attempt budget runs out. At a subarray
// boundary the single existing neighbor is hammered.
inline HammerResult hammer(LockController& controller,
                           const RowAddress& victim_row,
                           std::uint64_t max_attempts = 0) {
  DramState& dram = controller.dram();
  const std::uint64_t t_rh = dram.config().t_rh;
  if (max_attempts == 0) max_attempts = 4 * t_rh;
  std::vector<RowAddress> aggressors = dram.neighbors(victim_row);
  HammerResult res;
  for (std::uint64_t i = 0; i < max_attempts && !res.flip_occurred; ++i) {
    const RowAddress& agg = aggressors[i % aggressors.size()];
    MemInstr mi;
    mi.kind = MemKind::Activate;
    mi.addr = agg;
    mi.trusted = false;
    StepResult sr = controller.process_instruction(mi);
    res.activations_issued += 1;
    if (sr.gate == GateAction::Skip) continue;
    res.activations_allowed += 1;
    for (const auto& [flipped, bits] : sr.flips)
      if (flipped == victim_row) res.flip_occurred = true;
  }
  return res;
}

// Brute-force sensitivity oracle: flip each candidate in place, measure the
// cross-entropy increase on a seeded batch, restore. Descending by loss
// delta with (layer, index, bit) tie-break.
inline std::vector<TargetBit> rank_bits_bruteforce(
    QuantizedModel& model, const Dataset& data,
    const std::vector<TargetBit>& candidates, std::size_t batch,
    std::uint64_t seed) {
  if (candidates.empty()) throw empty_candidate_set("no candidate bits");
  const double base = batch_loss(model, data, batch, seed);
  std::vector<std::pair<double, TargetBit>> scored;
  scored.reserve(candidates.size());
  for (const TargetBit& t : candidates) {
    std::int8_t& w = model.layers.at(t.layer).weights.at(t.weight_index);
    w = static_cast<std::int8_t>(static_cast<std::uint8_t>(w) ^ (1u << t.bit));
    scored.emplace_back(batch_loss(model, data, batch, seed) - base, t);
    w = static_cast<std::int8_t>(static_cast<std::uint8_t>(w) ^ (1u << t.bit));
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) {
                     if (a.first != b.first) return a.first > b.first;
                     return a.second < b.second;
                   });
  std::vector<TargetBit> out;
  out.reserve(scored.size());
  for (const auto& [d, t] : scored) out.push_back(t);
  return out;
}

// Default candidate pool: every bit of the output layer plus the MSB of
// every weight in the hidden layers.
inline std::vector<TargetBit> default_candidates(const QuantizedModel& m) {
  std::vector<TargetBit> out;
  const std::uint32_t last = static_cast<std::uint32_t>(m.layers.size()) - 1;
  for (std::uint32_t li = 0; li < m.layers.size(); ++li) {
    const std::uint32_t n = static_cast<std::uint32_t>(m.layers[li].weights.size());
    for (std::uint32_t wi = 0; wi < n; ++wi) {
      if (li == last)
        for (std::uint8_t b = 0; b < 8; ++b) out.push_back({li, wi, b});
      else
        out.push_back({li, wi, 7});
    }
  }
  return out;
}

struct AttackSettings {
  std::uint64_t budget = 100;       // campaigns / iterations
  std::size_t eval_samples = 128;
  std::size_t rank_batch = 64;
  double chance_accuracy = 0.2;     // [0, 2/classes] band upper edge
  std::uint64_t seed = 1;
  std::uint64_t hammer_attempts = 0;  // 0: 4 * t_rh per campaign
};

namespace detail {

// One ranked- or chosen-target hammer campaign: arm the victim row's flip
// mask at the target bit, hammer, sync, restore the mask.
inline bool campaign(LockController& controller, const WeightMap& map,
                     const TargetBit& target, AttackReport& report,
                     std::uint64_t hammer_attempts) {
  DramState& dram = controller.dram();
  const BitLocation loc = map.locate(target);
  dram.set_flip_mask(loc.row, {loc.byte_offset * 8 + loc.bit});
  HammerResult hr = hammer(controller, loc.row, hammer_attempts);
  dram.clear_flip_mask(loc.row);
  report.flips_attempted += 1;
  report.denied_activations += hr.activations_issued - hr.activations_allowed;
  if (hr.flip_occurred) report.flips_landed += 1;
  return hr.flip_occurred;
}

}  // namespace detail

// Progressive targeted attack: re-rank, hammer the best not-yet-tried bit,
// sync the model from DRAM, record accuracy; stop at the budget or at
// chance-level accuracy.
inline AttackReport bfa_progressive(const QuantizedModel& clean,
                                    const WeightMap& map,
                                    LockController& controller,
                                    const Dataset& data,
                                    const AttackSettings& s) {
  AttackReport report;
  QuantizedModel live = sync_model_from_dram(clean, map, controller.dram());
  double acc = evaluate(live, data, s.eval_samples, s.seed);
  report.accuracy_curve.emplace_back(0, acc);
  std::vector<TargetBit> tried;
  for (std::uint64_t it = 0; it < s.budget && acc > s.chance_accuracy; ++it) {
    std::vector<TargetBit> ranked =
        rank_bits_bruteforce(live, data, default_candidates(live),
                             s.rank_batch, s.seed);
    std::optional<TargetBit> pick;
    for (const TargetBit& t : ranked) {
      if (std::find(tried.begin(), tried.end(), t) == tried.end()) {
        pick = t;
        break;
      }
    }
    if (!pick) break;
    tried.push_back(*pick);
    detail::campaign(controller, map, *pick, report, s.hammer_attempts);
    live = sync_model_from_dram(clean, map, controller.dram());
    acc = evaluate(live, data, s.eval_samples, s.seed);
    report.accuracy_curve.emplace_back(report.flips_landed, acc);
  }
  report.wall_model_time = controller.stats().total_ns;
  return report;
}

// Random baseline: uniformly random weight bits, same hammer mechanism.
inline AttackReport random_attack(const QuantizedModel& clean,
                                  const WeightMap& map,
                                  LockController& controller,
                                  const Dataset& data,
                                  const AttackSettings& s) {
  AttackReport report;
  QuantizedModel live = sync_model_from_dram(clean, map, controller.dram());
  double acc = evaluate(live, data, s.eval_samples, s.seed);
  report.accuracy_curve.emplace_back(0, acc);
  Rng rng(s.seed, /*stream=*/0xA77C);
  const std::uint64_t total_bits = clean.total_weight_bytes() * 8;
  for (std::uint64_t it = 0; it < s.budget && acc > s.chance_accuracy; ++it) {
    const std::uint64_t flat_bit = rng.next_below(total_bits);
    const std::size_t flat_byte = flat_bit / 8;
    std::uint32_t layer = 0;
    while (layer + 1 < map.layer_starts.size() &&
           flat_byte >= map.layer_starts[layer + 1])
      ++layer;
    TargetBit t{layer,
                static_cast<std::uint32_t>(flat_byte - map.layer_starts[layer]),
                static_cast<std::uint8_t>(flat_bit % 8)};
    detail::campaign(controller, map, t, report, s.hammer_attempts);
    live = sync_model_from_dram(clean, map, controller.dram());
    acc = evaluate(live, data, s.eval_samples, s.seed);
    report.accuracy_curve.emplace_back(report.flips_landed, acc);
  }
  report.wall_model_time = controller.stats().total_ns;
  return report;
}

// Page-table attack: hammer the PTE row's neighbors to flip one chosen bit
// of the victim vpn's entry.
inline AttackReport pta_attack(const PageTable& pt, LockController& controller,
                               std::uint32_t vpn, std::uint8_t pte_bit,
                               const AttackSettings& s) {
  AttackReport report;
  DramState& dram = controller.dram();
  auto [row, bitpos] = pt.bit_position(vpn, pte_bit);
  for (std::uint64_t it = 0; it < s.budget && report.flips_landed == 0; ++it) {
    dram.set_flip_mask(row, {bitpos});
    HammerResult hr = hammer(controller, row, s.hammer_attempts);
    dram.clear_flip_mask(row);
    report.flips_attempted += 1;
    report.denied_activations += hr.activations_issued - hr.activations_allowed;
    if (hr.flip_occurred) report.flips_landed += 1;
  }
  report.wall_model_time = controller.stats().total_ns;
  return report;
}

}  // namespace dlocker
