#include <cmath>

#include "doctest.h"

#include "dlocker/analysis.hpp"

using namespace dlocker;

namespace {

TraceStats random_trace(Rng& rng) {
  TraceStats t;
  t.activates = rng.next_below(500);
  t.reads = rng.next_below(500);
  t.writes = rng.next_below(500);
  t.rowclones = rng.next_below(50) * 3;
  t.lookups = rng.next_below(1000);
  t.skips = rng.next_below(200);
  t.swaps = t.rowclones / 3;
  return t;
}

}  // namespace

TEST_CASE("channel copy is a fixed multiple of the in-subarray clone") {
  Timing t;
  CHECK(channel_copy_latency_ns(t) == doctest::Approx(11.6 * 90.0));
  t.t_rowclone = 50;
  CHECK(channel_copy_latency_ns(t) == doctest::Approx(580.0));
}

TEST_CASE("latency bill sums the per-class costs") {
  Timing t;
  TraceStats trace;
  trace.activates = 10;
  trace.reads = 4;
  trace.writes = 6;
  trace.rowclones = 21;  // seven 3-copy swaps
  trace.swaps = 7;
  trace.lookups = 100;
  trace.skips = 30;
  LatencyReport r = account_latency(trace, t);
  CHECK(r.activates_ns == 10 * 45);
  CHECK(r.accesses_ns == 4 * 15 + 6 * 15);
  CHECK(r.rowclones_ns == 21 * 90);
  CHECK(r.rowclones_ns == 1890);
  CHECK(r.lookups_ns == 100);
  CHECK(r.skips == 30);
  CHECK(r.swaps == 7);
  CHECK(r.total_ns == r.activates_ns + r.accesses_ns + r.rowclones_ns +
                          r.lookups_ns);
}

TEST_CASE("latency accounting is additive over trace splits") {
  Timing t;
  Rng rng(11, 0);
  for (int rep = 0; rep < 200; ++rep) {
    TraceStats a = random_trace(rng);
    TraceStats b = random_trace(rng);
    LatencyReport ra = account_latency(a, t);
    LatencyReport rb = account_latency(b, t);
    LatencyReport rc = account_latency(concat(a, b), t);
    CHECK(rc.total_ns == ra.total_ns + rb.total_ns);
    CHECK(rc.activates_ns == ra.activates_ns + rb.activates_ns);
    CHECK(rc.accesses_ns == ra.accesses_ns + rb.accesses_ns);
    CHECK(rc.rowclones_ns == ra.rowclones_ns + rb.rowclones_ns);
    CHECK(rc.lookups_ns == ra.lookups_ns + rb.lookups_ns);
    CHECK(rc.skips == ra.skips + rb.skips);
    CHECK(rc.swaps == ra.swaps + rb.swaps);
  }
}

TEST_CASE("duration model rejects bad parameters") {
  DurationModelParams p;
  p.per_copy_error = -0.1;
  CHECK_THROWS_AS(estimate_defense_duration_analytic(p), config_error);
  p.per_copy_error = 1.5;
  CHECK_THROWS_AS(estimate_defense_duration_analytic(p), config_error);
  p.per_copy_error = 0.1;
  p.t_rh = 0;
  CHECK_THROWS_AS(estimate_defense_duration_analytic(p), config_error);
}

TEST_CASE("per-window model survives far beyond 500 days at the defaults") {
  DurationModelParams p;  // t_rh=1000, p=0.1, t_ref=64ms
  DurationEstimate e = estimate_defense_duration_analytic(p);
  CHECK(!e.unbounded);
  CHECK(e.log10_days > std::log10(500.0));
}

TEST_CASE("zero copy error means an unbounded horizon") {
  DurationModelParams p;
  p.per_copy_error = 0.0;
  DurationEstimate e = estimate_defense_duration_analytic(p);
  CHECK(e.unbounded);
  CHECK(std::isinf(e.days));
}

TEST_CASE("survival horizon grows monotonically with the flip threshold") {
  DurationModelParams p;
  p.per_copy_error = 0.5;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::uint64_t trh : {2, 4, 8, 16, 32}) {
    p.t_rh = trh;
    DurationEstimate e = estimate_defense_duration_analytic(p);
    CHECK(e.log10_days > prev);
    prev = e.log10_days;
  }
}

TEST_CASE("survival horizon shrinks as the copy error grows") {
  DurationModelParams p;
  p.t_rh = 4;
  double prev = std::numeric_limits<double>::infinity();
  for (double err : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    p.per_copy_error = err;
    DurationEstimate e = estimate_defense_duration_analytic(p);
    CHECK(e.log10_days < prev);
    prev = e.log10_days;
  }
}

TEST_CASE("moderate parameters match a hand-computed closed form") {
  DurationModelParams p;
  p.t_rh = 2;
  p.per_copy_error = 0.5;
  const double q = 0.25;
  const double n = 86400.0e9 / 64.0e6;
  const double expect = std::log(0.99) / std::log(1.0 - q) / n;
  DurationEstimate e = estimate_defense_duration_analytic(p);
  CHECK(e.days == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("unlock-event model follows the swap failure probability") {
  DurationModelParams p;
  p.model_id = DurationModel::M2;
  p.per_copy_error = 0.1;
  p.t_rh = 500;  // fits in the 1000-access re-lock window
  const double fail = 1.0 - std::pow(0.9, 3.0);
  const double expect = std::log(0.99) / std::log(1.0 - fail) / 1000.0;
  DurationEstimate e = estimate_defense_duration_analytic(p);
  CHECK(e.days == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("unlock-event model is unbounded when hammering cannot finish") {
  DurationModelParams p;
  p.model_id = DurationModel::M2;
  p.t_rh = 1001;  // more activations than the exposure window allows
  DurationEstimate e = estimate_defense_duration_analytic(p);
  CHECK(e.unbounded);
}

TEST_CASE("Monte Carlo interval brackets the analytic horizon") {
  DurationModelParams p;
  p.t_rh = 2;
  p.per_copy_error = 0.5;
  DurationEstimate analytic = estimate_defense_duration_analytic(p);
  DurationEstimate mc = estimate_defense_duration(p, 42);
  CHECK(mc.ci_low_days > 0.0);
  CHECK(mc.ci_low_days <= analytic.days);
  CHECK(mc.ci_high_days >= analytic.days);
}

TEST_CASE("Monte Carlo estimate is deterministic in the seed") {
  DurationModelParams p;
  p.t_rh = 3;
  p.per_copy_error = 0.4;
  DurationEstimate a = estimate_defense_duration(p, 7);
  DurationEstimate b = estimate_defense_duration(p, 7);
  CHECK(a.ci_low_days == b.ci_low_days);
  CHECK(a.ci_high_days == b.ci_high_days);
  DurationEstimate c = estimate_defense_duration(p, 8);
  CHECK((c.ci_low_days != a.ci_low_days || c.ci_high_days != a.ci_high_days));
}

TEST_CASE("overhead report charges only the SRAM lock-table budget") {
  LockTable t;
  OverheadReport r = overhead_report(t);
  CHECK(r.dram_capacity_overhead == 0);
  CHECK(r.sram_capacity_overhead == 57344);
  CHECK(r.max_entries == 14336);
  CHECK(r.area_percent == doctest::Approx(0.02));
  bool found = false;
  for (const OverheadRow& row : r.reference_rows)
    if (row.framework == "DRAM-Locker") {
      found = true;
      CHECK(row.involved_memory == "DRAM-SRAM");
      CHECK(row.capacity_overhead == "0+56KB");
      CHECK(row.area_overhead == "0.02%");
    }
  CHECK(found);
}
