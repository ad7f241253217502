#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dlocker/dram.hpp"
#include "dlocker/lock.hpp"
#include "dlocker/rng.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

// In-subarray clone vs. bulk copy over the memory channel: the channel
// path is modeled as an 11.6x latency constant.
inline double channel_copy_latency_ns(const Timing& t) {
  return 11.6 * static_cast<double>(t.t_rowclone);
}

struct LatencyReport {
  ns_t total_ns = 0;
  ns_t activates_ns = 0;
  ns_t accesses_ns = 0;
  ns_t rowclones_ns = 0;
  ns_t lookups_ns = 0;
  std::uint64_t skips = 0;  // zero DRAM cost beyond the lookup
  std::uint64_t swaps = 0;
};

// Deterministic bill of latency for a trace. Skipped instructions cost
// only the lock-table lookup, which is counted under lookups_ns.
inline LatencyReport account_latency(const TraceStats& trace, const Timing& t,
                                     ns_t lookup_ns = 1) {
  LatencyReport r;
  r.activates_ns = trace.activates * t.t_act_pre;
  r.accesses_ns = trace.reads * t.t_rd + trace.writes * t.t_wr;
  r.rowclones_ns = trace.rowclones * t.t_rowclone;
  r.lookups_ns = trace.lookups * lookup_ns;
  r.skips = trace.skips;
  r.swaps = trace.swaps;
  r.total_ns = r.activates_ns + r.accesses_ns + r.rowclones_ns + r.lookups_ns;
  return r;
}

inline TraceStats concat(const TraceStats& a, const TraceStats& b) {
  TraceStats c = a;
  c.total_ns += b.total_ns;
  c.activates += b.activates;
  c.reads += b.reads;
  c.writes += b.writes;
  c.rowclones += b.rowclones;
  c.lookups += b.lookups;
  c.skips += b.skips;
  c.swaps += b.swaps;
  c.flips_protected += b.flips_protected;
  c.flips_elsewhere += b.flips_elsewhere;
  return c;
}

enum class DurationModel { M1, M2 };

struct DurationModelParams {
  DurationModel model_id = DurationModel::M1;
  double per_copy_error = 0.1;
  std::uint64_t t_rh = 1000;
  ns_t t_ref = 64'000'000;
  double unlock_rate_per_day = 1000.0;  // M2 only
  std::uint64_t relock_window = 1000;   // M2 only

  void validate() const {
    if (per_copy_error < 0.0 || per_copy_error > 1.0)
      throw config_error("per_copy_error must lie in [0,1]");
    if (t_rh == 0 || t_ref == 0) throw config_error("t_rh and t_ref must be > 0");
    if (unlock_rate_per_day <= 0.0)
      throw config_error("unlock_rate_per_day must be > 0");
  }
};

struct DurationEstimate {
  bool unbounded = false;
  double days = 0.0;        // may be +inf when the log-domain value overflows
  double log10_days = 0.0;  // always finite when !unbounded
  double ci_low_days = 0.0;   // Monte Carlo 95% CI, 0 when analytic only
  double ci_high_days = 0.0;
};

namespace duration_detail {

inline double windows_per_day(ns_t t_ref) {
  return 86400.0e9 / static_cast<double>(t_ref);
}

// ln of the per-event "flip lands" probability, or -inf when impossible.
inline double ln_event_probability(const DurationModelParams& p) {
  switch (p.model_id) {
    case DurationModel::M1:
      // A targeted flip within one refresh window needs all t_rh aggressor
      // activations to be erroneously permitted, independently.
      if (p.per_copy_error == 0.0)
        return -std::numeric_limits<double>::infinity();
      return static_cast<double>(p.t_rh) * std::log(p.per_copy_error);
    case DurationModel::M2: {
      // An unlock's 3-copy swap fails with 1-(1-p)^3; the exposed row is
      // flippable only if t_rh activations fit into the re-lock window.
      if (p.per_copy_error == 0.0 || p.t_rh > p.relock_window)
        return -std::numeric_limits<double>::infinity();
      const double fail = 1.0 - std::pow(1.0 - p.per_copy_error, 3.0);
      return std::log(fail);
    }
  }
  throw config_error("unknown duration model");
}

inline double events_per_day(const DurationModelParams& p) {
  return p.model_id == DurationModel::M1 ? windows_per_day(p.t_ref)
                                         : p.unlock_rate_per_day;
}

}  // namespace duration_detail

// Largest horizon T (days) with cumulative targeted-flip probability below
// 1%. Closed form: events are i.i.d. Bernoulli(q) at rate N/day, so
// T = ln(0.99) / ln(1-q) / N, evaluated in log space for tiny q.
inline DurationEstimate estimate_defense_duration_analytic(
    const DurationModelParams& p) {
  p.validate();
  DurationEstimate est;
  const double ln_q = duration_detail::ln_event_probability(p);
  if (std::isinf(ln_q)) {
    est.unbounded = true;
    est.days = std::numeric_limits<double>::infinity();
    est.log10_days = std::numeric_limits<double>::infinity();
    return est;
  }
  const double n = duration_detail::events_per_day(p);
  const double ln_target = -std::log(0.99);  // == -ln(1 - 0.01 threshold)
  double ln_events;
  if (ln_q > -30) {
    const double q = std::exp(ln_q);
    if (q >= 1.0) {
      est.log10_days = -std::numeric_limits<double>::infinity();
      est.days = 0.0;
      return est;
    }
    ln_events = std::log(ln_target / -std::log1p(-q));
  } else {
    // ln(1-q) ~ -q, so events ~ ln_target / q
    ln_events = std::log(ln_target) - ln_q;
  }
  est.log10_days = (ln_events - std::log(n)) / std::log(10.0);
  est.days = std::pow(10.0, est.log10_days);
  return est;
}

// Monte Carlo estimate of the same horizon: sample the geometric time to
// first flip via inverse transform (log domain, so tiny q is exact), take
// the 1st-percentile event count, and bound it with an order-statistic CI.
inline DurationEstimate estimate_defense_duration(
    const DurationModelParams& p, std::uint64_t seed,
    std::size_t trials = 4000) {
  DurationEstimate analytic = estimate_defense_duration_analytic(p);
  if (analytic.unbounded) return analytic;
  const double ln_q = duration_detail::ln_event_probability(p);
  const double n = duration_detail::events_per_day(p);
  const double ln_1mq = (ln_q > -30) ? std::log1p(-std::exp(ln_q)) : -std::exp(ln_q);
  Rng rng(seed, /*stream=*/0xD0A9);
  std::vector<double> log10_first_flip_days(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    double u = rng.next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    // events to first success ~ ln(u)/ln(1-q)
    const double ln_events = std::log(-std::log(u)) - std::log(-ln_1mq);
    log10_first_flip_days[i] = (ln_events - std::log(n)) / std::log(10.0);
  }
  std::sort(log10_first_flip_days.begin(), log10_first_flip_days.end());
  const double k = 0.01 * static_cast<double>(trials);
  const double half = 1.96 * std::sqrt(static_cast<double>(trials) * 0.01 * 0.99);
  auto at = [&](double pos) {
    const auto i = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(trials - 1)));
    return log10_first_flip_days[i];
  };
  DurationEstimate est = analytic;
  est.ci_low_days = std::pow(10.0, at(k - half));
  est.ci_high_days = std::pow(10.0, at(k + half));
  return est;
}

struct OverheadRow {
  std::string framework;
  std::string involved_memory;
  std::string capacity_overhead;
  std::string area_overhead;
};

struct OverheadReport {
  std::uint64_t dram_capacity_overhead = 0;  // bytes
  std::uint64_t sram_capacity_overhead = 0;  // bytes
  std::uint64_t max_entries = 0;
  double area_percent = 0.02;  // reported constant, not computed
  std::vector<OverheadRow> reference_rows;
};

// Static reference data for competing frameworks (reported, not modeled).
inline std::vector<OverheadRow> reference_overhead_rows() {
  return {
      {"Graphene", "CAM-SRAM", "0.53MB+1.12MB", "1 counter"},
      {"Hydra", "SRAM-DRAM", "56KB+4MB", "1 counter"},
      {"TWiCE", "SRAM-CAM", "3.16MB+1.6MB", "1 counter"},
      {"Counter per Row", "DRAM", "32MB", "16384 counters"},
      {"Counter Tree", "DRAM", "2MB", "1024 counters"},
      {"RRS", "DRAM-SRAM", "4MB+NR", "NULL"},
      {"SRS", "DRAM-SRAM", "1.26MB+NR", "NULL"},
      {"SHADOW", "DRAM", "0.16MB", "0.6%"},
      {"P-PIM", "DRAM", "4.125MB", "0.34%"},
      {"DRAM-Locker", "DRAM-SRAM", "0+56KB", "0.02%"},
  };
}

// Reserved rows cost no DRAM capacity in this accounting; only the SRAM
// lock-table budget is charged.
inline OverheadReport overhead_report(const LockTable& table) {
  OverheadReport r;
  r.dram_capacity_overhead = 0;
  r.sram_capacity_overhead = table.capacity_bytes;
  r.max_entries = table.max_entries();
  r.reference_rows = reference_overhead_rows();
  return r;
}

}  // namespace dlocker
