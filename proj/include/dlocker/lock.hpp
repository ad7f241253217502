#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dlocker/dram.hpp"
#include "dlocker/isa.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

enum class LockState : std::uint8_t { Locked, Swapped };

struct LockEntry {
  LockState state = LockState::Locked;
  RowAddress current_home;  // == locked address while Locked
  std::uint64_t rw_since_swap = 0;
};

// SRAM-resident set of protected physical row addresses.
class LockTable {
 public:
  std::uint64_t capacity_bytes = 57344;  // 56KB
  std::uint64_t entry_bytes = 4;         // 22-bit row address padded

  std::uint64_t max_entries() const { return capacity_bytes / entry_bytes; }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t used_bytes() const { return entries_.size() * entry_bytes; }

  void insert(const RowAddress& locked) {
    if (entries_.count(locked)) return;
    if ((entries_.size() + 1) * entry_bytes > capacity_bytes)
      throw capacity_exceeded(
          "lock-table needs " + std::to_string((entries_.size() + 1) * entry_bytes) +
          " bytes, budget is " + std::to_string(capacity_bytes));
    entries_.emplace(locked, LockEntry{LockState::Locked, locked, 0});
  }

  bool contains(const RowAddress& a) const { return entries_.count(a) > 0; }

  LockEntry& entry(const RowAddress& locked) {
    auto it = entries_.find(locked);
    if (it == entries_.end()) throw not_locked("row not in lock-table: " + locked.str());
    return it->second;
  }
  const LockEntry& entry(const RowAddress& locked) const {
    auto it = entries_.find(locked);
    if (it == entries_.end()) throw not_locked("row not in lock-table: " + locked.str());
    return it->second;
  }

  // Locked address whose swapped-out data currently lives at `home`.
  std::optional<RowAddress> locked_for_home(const RowAddress& home) const {
    for (const auto& [locked, e] : entries_)
      if (e.state == LockState::Swapped && e.current_home == home)
        return locked;
    return std::nullopt;
  }

  const std::map<RowAddress, LockEntry>& entries() const { return entries_; }
  std::map<RowAddress, LockEntry>& entries() { return entries_; }

  void dump(std::ostream& out) const {
    for (const auto& [locked, e] : entries_)
      out << locked.str() << " "
          << (e.state == LockState::Locked ? "LOCKED" : "SWAPPED") << " "
          << e.current_home.str() << " " << e.rw_since_swap << "\n";
  }

  static LockTable restore(std::istream& in) {
    LockTable t;
    std::string addr, state, home;
    std::uint64_t rw;
    auto parse_addr = [](const std::string& s) {
      RowAddress a;
      if (std::sscanf(s.c_str(), "%u:%u:%u", &a.bank, &a.subarray, &a.row) != 3)
        throw format_error("bad row address in lock-table file: " + s);
      return a;
    };
    while (in >> addr >> state >> home >> rw) {
      RowAddress locked = parse_addr(addr);
      t.insert(locked);
      LockEntry& e = t.entry(locked);
      if (state == "SWAPPED")
        e.state = LockState::Swapped;
      else if (state != "LOCKED")
        throw format_error("bad lock state: " + state);
      e.current_home = parse_addr(home);
      e.rw_since_swap = rw;
    }
    return t;
  }

 private:
  std::map<RowAddress, LockEntry> entries_;
};

// Locks every in-bounds same-subarray neighbor of each protected row.
inline LockTable build_lock_table(const std::vector<RowAddress>& protected_rows,
                                  const DramConfig& geometry,
                                  std::uint64_t budget = 57344,
                                  std::uint64_t entry_bytes = 4) {
  std::set<RowAddress> locked;
  for (const RowAddress& r : protected_rows) {
    if (r.bank >= geometry.banks || r.subarray >= geometry.subarrays_per_bank ||
        r.row >= geometry.rows_per_subarray)
      throw address_error("protected row out of bounds: " + r.str());
    if (r.row > 0) locked.insert({r.bank, r.subarray, r.row - 1});
    if (r.row + 1 < geometry.rows_per_subarray)
      locked.insert({r.bank, r.subarray, r.row + 1});
  }
  if (locked.size() * entry_bytes > budget)
    throw capacity_exceeded("lock-table needs " +
                            std::to_string(locked.size() * entry_bytes) +
                            " bytes, budget is " + std::to_string(budget));
  LockTable t;
  t.capacity_bytes = budget;
  t.entry_bytes = entry_bytes;
  for (const RowAddress& a : locked) t.insert(a);
  return t;
}

enum class PolicyKind { None, LockTable, BlindSwap };

struct DefensePolicy {
  PolicyKind kind = PolicyKind::LockTable;
  std::uint64_t blind_swap_period = 0;  // activations, BlindSwap only

  void validate() const {
    if (kind == PolicyKind::BlindSwap && blind_swap_period == 0)
      throw config_error("blind_swap_period must be > 0 under BlindSwap");
  }
};

enum class GateAction : std::uint8_t { Allow, AllowRemapped, Skip };

struct GateResult {
  GateAction action = GateAction::Allow;
  RowAddress home;  // set for AllowRemapped
};

// Memory instruction as seen by the controller. Swap is the trusted macro;
// attacker streams carry only Activate/Read/Write.
enum class MemKind : std::uint8_t { Activate, Read, Write, Swap };

struct MemInstr {
  MemKind kind = MemKind::Activate;
  RowAddress addr;           // target (Activate/Read/Write) or locked row (Swap)
  bool trusted = false;
  std::vector<std::uint8_t> payload;       // Write only
  std::optional<RowAddress> swap_free;     // Swap only; picked if absent
};

struct SwapOutcome {
  bool success = false;
  std::array<CopyResult, 3> copies{};
  ns_t latency = 0;
};

struct StepResult {
  GateAction gate = GateAction::Allow;
  ns_t latency = 0;
  std::vector<std::pair<RowAddress, std::vector<std::uint32_t>>> flips;
  std::optional<std::vector<std::uint8_t>> read_data;
  std::vector<SwapOutcome> relocks;  // reverse swaps triggered by this step
};

struct TraceStats {
  ns_t total_ns = 0;
  std::uint64_t activates = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t rowclones = 0;
  std::uint64_t lookups = 0;
  std::uint64_t skips = 0;
  std::uint64_t swaps = 0;  // forward + reverse 3-copy sequences
  std::uint64_t flips_protected = 0;
  std::uint64_t flips_elsewhere = 0;
};

// The DRAM-Locker controller: gates instructions through the lock-table,
// orchestrates SWAP via the reserved buffer/free rows, and re-locks after
// the 1k-R/W window. Also hosts the None/BlindSwap baseline policies.
class LockController {
 public:
  struct Options {
    ns_t lookup_ns = 1;            // SRAM lock-table probe per gated instr
    std::uint64_t relock_window = 1000;
    bool relock_per_row = false;   // false: one global R/W counter semantics
    std::uint32_t free_rows_per_subarray = 2;
  };

  LockController(DramState& dram, LockTable table, DefensePolicy policy,
                 Options opt, std::uint64_t seed)
      : dram_(dram), table_(std::move(table)), policy_(policy), opt_(opt),
        rng_(seed, /*stream=*/0xC0A7) {
    policy_.validate();
    const auto& g = dram_.config();
    if (g.rows_per_subarray < opt_.free_rows_per_subarray + 2)
      throw config_error("subarray too small for reserved buffer/free rows");
  }

  DramState& dram() { return dram_; }
  LockTable& table() { return table_; }
  const TraceStats& stats() const { return stats_; }
  ns_t now() const { return now_; }

  void set_protected_rows(std::vector<RowAddress> rows) {
    protected_rows_.assign(rows.begin(), rows.end());
    std::sort(protected_rows_.begin(), protected_rows_.end());
  }

  bool is_protected(const RowAddress& a) const {
    return std::binary_search(protected_rows_.begin(), protected_rows_.end(), a);
  }

  // Highest row of each subarray is the buffer; the next
  // free_rows_per_subarray below it form the free pool.
  RowAddress buffer_row(std::uint32_t bank, std::uint32_t subarray) const {
    return {bank, subarray, dram_.config().rows_per_subarray - 1};
  }

  std::vector<RowAddress> free_pool(std::uint32_t bank,
                                    std::uint32_t subarray) const {
    std::vector<RowAddress> pool;
    const std::uint32_t top = dram_.config().rows_per_subarray - 1;
    for (std::uint32_t i = 1; i <= opt_.free_rows_per_subarray; ++i)
      pool.push_back({bank, subarray, top - i});
    return pool;
  }

  bool is_reserved(const RowAddress& a) const {
    return a.row + opt_.free_rows_per_subarray + 1 >=
           dram_.config().rows_per_subarray;
  }

  // Picks a free row in the locked row's subarray that is not already the
  // home of some other swapped-out entry.
  RowAddress pick_free_row(const RowAddress& locked) {
    std::vector<RowAddress> pool = free_pool(locked.bank, locked.subarray);
    std::vector<RowAddress> avail;
    for (const RowAddress& f : pool) {
      bool taken = false;
      for (const auto& [l, e] : table_.entries())
        if (e.state == LockState::Swapped && e.current_home == f) taken = true;
      if (!taken) avail.push_back(f);
    }
    if (avail.empty())
      throw resource_exhausted("no free row available in subarray " +
                               std::to_string(locked.subarray));
    return avail[rng_.next_below(avail.size())];
  }

  GateResult gate(const MemInstr& instr) const {
    if (policy_.kind != PolicyKind::LockTable || instr.kind == MemKind::Swap)
      return {GateAction::Allow, {}};
    auto it = table_.entries().find(instr.addr);
    if (it != table_.entries().end()) {
      // Physical address stays denied while Locked or while its data
      // lives elsewhere.
      return {GateAction::Skip, {}};
    }
    if (auto locked = table_.locked_for_home(instr.addr))
      return {GateAction::AllowRemapped, instr.addr};
    return {GateAction::Allow, {}};
  }

  // Three-copy SWAP: locked -> buffer, free -> locked, buffer -> free.
  SwapOutcome swap(const RowAddress& locked, const RowAddress& free_row,
                   const RowAddress& buffer) {
    LockEntry& e = table_.entry(locked);
    if (e.state != LockState::Locked)
      throw not_locked("entry is not in Locked state: " + locked.str());
    if (free_row == locked || buffer == locked || free_row == buffer)
      throw degenerate_swap("swap rows must be distinct");
    if (!locked.same_subarray(free_row) || !locked.same_subarray(buffer))
      throw subarray_mismatch("swap triple must share a subarray");
    SwapOutcome out = run_swap_program(locked, free_row, buffer);
    if (out.success) {
      e.state = LockState::Swapped;
      e.current_home = free_row;
      e.rw_since_swap = 0;
    }
    return out;
  }

  // Reverse swap: data returns to its original physical row, entry re-locks.
  SwapOutcome reverse_swap(const RowAddress& locked) {
    LockEntry& e = table_.entry(locked);
    if (e.state != LockState::Swapped)
      throw not_locked("entry is not swapped: " + locked.str());
    const RowAddress home = e.current_home;
    const RowAddress buffer = buffer_row(locked.bank, locked.subarray);
    SwapOutcome out = run_swap_program(home, locked, buffer);
    if (out.success) {
      e.state = LockState::Locked;
      e.current_home = locked;
    }
    e.rw_since_swap = 0;  // counter restarts either way
    return out;
  }

  StepResult process_instruction(const MemInstr& instr) {
    dram_.refresh_tick(now_);
    StepResult res;
    if (instr.kind == MemKind::Swap) {
      const RowAddress buffer = buffer_row(instr.addr.bank, instr.addr.subarray);
      const RowAddress free_row =
          instr.swap_free ? *instr.swap_free : pick_free_row(instr.addr);
      SwapOutcome so = swap(instr.addr, free_row, buffer);
      res.latency = so.latency;
      advance(res.latency);
      return res;
    }
    GateResult g{GateAction::Allow, {}};
    if (policy_.kind == PolicyKind::LockTable) {
      stats_.lookups += 1;
      res.latency += opt_.lookup_ns;
      g = gate(instr);
    }
    res.gate = g.action;
    if (g.action == GateAction::Skip) {
      stats_.skips += 1;
      advance(res.latency);
      return res;
    }
    switch (instr.kind) {
      case MemKind::Activate: {
        ActivationOutcome ao = dram_.activate(instr.addr, now_);
        res.latency += ao.latency;
        record_flips(ao.flips_applied, res);
        stats_.activates += 1;
        blind_swap_tick(res);
        break;
      }
      case MemKind::Read:
      case MemKind::Write: {
        const bool is_read = instr.kind == MemKind::Read;
        AccessResult ar = dram_.access(
            instr.addr, is_read ? AccessOp::Read : AccessOp::Write,
            is_read ? nullptr : &instr.payload, now_);
        res.latency += ar.latency;
        record_flips(ar.implicit_activate.flips_applied, res);
        if (is_read) {
          res.read_data = std::move(ar.data);
          stats_.reads += 1;
        } else {
          stats_.writes += 1;
        }
        if (!ar.implicit_activate.flips_applied.empty() ||
            ar.implicit_activate.latency > 0)
          stats_.activates += 1;
        tick_relock_counters(instr.addr, res);
        break;
      }
      case MemKind::Swap:
        break;  // handled above
    }
    advance(res.latency);
    return res;
  }

  TraceStats run_sequence(const std::vector<MemInstr>& program) {
    for (const MemInstr& in : program) process_instruction(in);
    return stats_;
  }

 private:
  // Lowers the macro through the ISA: three copy words plus done, executed
  // as a trusted program against DRAM.
  SwapOutcome run_swap_program(const RowAddress& from, const RowAddress& other,
                               const RowAddress& buffer) {
    RegFile regs;
    regs.set_row(0, from);
    regs.set_row(1, other);
    regs.set_row(2, buffer);
    std::vector<word16> words;
    for (const Instruction& in : assemble_swap(0, 1, 2))
      words.push_back(encode(in));
    words.push_back(encode(Instruction::done()));
    ProgramTrace tr = execute_program(words, regs, dram_, rng_);
    SwapOutcome out;
    for (int i = 0; i < 3; ++i) {
      out.copies[i] = {tr.steps[i].copy_success, tr.steps[i].latency};
      out.latency += tr.steps[i].latency;
    }
    out.success = out.copies[0].success && out.copies[1].success &&
                  out.copies[2].success;
    stats_.rowclones += 3;
    stats_.swaps += 1;
    return out;
  }

  void advance(ns_t dt) {
    now_ += dt;
    stats_.total_ns += dt;
  }

  void record_flips(
      const std::vector<std::pair<RowAddress, std::vector<std::uint32_t>>>& flips,
      StepResult& res) {
    for (const auto& [victim, bits] : flips) {
      if (is_protected(victim))
        stats_.flips_protected += 1;
      else
        stats_.flips_elsewhere += 1;
      res.flips.emplace_back(victim, bits);
    }
  }

  // Every executed R/W advances the re-lock counters of swapped entries.
  // Default scope is stream-wide (global); per-row counting only advances
  // the entry whose home the instruction touched.
  void tick_relock_counters(const RowAddress& target, StepResult& res) {
    if (policy_.kind != PolicyKind::LockTable) return;
    std::vector<RowAddress> due;
    for (auto& [locked, e] : table_.entries()) {
      if (e.state != LockState::Swapped) continue;
      if (opt_.relock_per_row && e.current_home != target) continue;
      e.rw_since_swap += 1;
      if (e.rw_since_swap >= opt_.relock_window) due.push_back(locked);
    }
    for (const RowAddress& locked : due) {
      SwapOutcome so = reverse_swap(locked);
      res.relocks.push_back(so);
      res.latency += so.latency;
    }
  }

  void blind_swap_tick(StepResult& res) {
    if (policy_.kind != PolicyKind::BlindSwap) return;
    if (++acts_since_blind_swap_ < policy_.blind_swap_period) return;
    acts_since_blind_swap_ = 0;
    // Unintelligent baseline: swap every candidate row with a random free
    // row in its subarray, regardless of need.
    for (auto& [locked, e] : table_.entries()) {
      const RowAddress buffer = buffer_row(locked.bank, locked.subarray);
      std::vector<RowAddress> pool = free_pool(locked.bank, locked.subarray);
      const RowAddress free_row = pool[rng_.next_below(pool.size())];
      SwapOutcome out;
      out.copies[0] = dram_.row_clone(locked, buffer, rng_);
      out.copies[1] = dram_.row_clone(free_row, locked, rng_);
      out.copies[2] = dram_.row_clone(buffer, free_row, rng_);
      out.latency = 3 * dram_.config().timing.t_rowclone;
      out.success = out.copies[0].success && out.copies[1].success &&
                    out.copies[2].success;
      stats_.rowclones += 3;
      stats_.swaps += 1;
      res.latency += out.latency;
    }
  }

  DramState& dram_;
  LockTable table_;
  DefensePolicy policy_;
  Options opt_;
  Rng rng_;
  ns_t now_ = 0;
  TraceStats stats_;
  std::vector<RowAddress> protected_rows_;
  std::uint64_t acts_since_blind_swap_ = 0;
};

}  // namespace dlocker
