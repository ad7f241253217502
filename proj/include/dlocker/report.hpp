#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dlocker/analysis.hpp"
#include "dlocker/attacks.hpp"
#include "dlocker/types.hpp"

#include "json.hpp"

namespace dlocker {

enum class ReportFormat { Csv, JsonLines };

// FNV-1a, used to stamp artifacts with their config's identity.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class ReportWriter {
 public:
  ReportWriter(const std::string& path, ReportFormat fmt,
               std::uint64_t config_hash, std::uint64_t seed)
      : out_(path), fmt_(fmt) {
    if (!out_) throw io_error("cannot open report file: " + path);
    out_ << "# config_hash=" << hex64(config_hash) << " seed=" << seed << "\n";
  }

  // columns: flip_count, accuracy, denied, time_ns
  void write_attack(const AttackReport& r) {
    if (fmt_ == ReportFormat::Csv) {
      out_ << "flip_count,accuracy,denied,time_ns\n";
      for (const auto& [flips, acc] : r.accuracy_curve)
        out_ << flips << "," << fmt_double(acc) << "," << r.denied_activations
             << "," << r.wall_model_time << "\n";
    } else {
      for (const auto& [flips, acc] : r.accuracy_curve) {
        nlohmann::ordered_json j;
        j["flip_count"] = flips;
        j["accuracy"] = acc;
        j["denied"] = r.denied_activations;
        j["time_ns"] = r.wall_model_time;
        out_ << j.dump() << "\n";
      }
    }
  }

  // columns: iteration, accuracy, policy
  void write_accuracy_curve(const AttackReport& r, const std::string& policy) {
    out_ << "iteration,accuracy,policy\n";
    std::size_t it = 0;
    for (const auto& [flips, acc] : r.accuracy_curve)
      out_ << it++ << "," << fmt_double(acc) << "," << policy << "\n";
  }

  void write_latency(const LatencyReport& r) {
    if (fmt_ == ReportFormat::Csv) {
      out_ << "total_ns,activates_ns,accesses_ns,rowclones_ns,lookups_ns,"
              "skips,swaps\n";
      out_ << r.total_ns << "," << r.activates_ns << "," << r.accesses_ns << ","
           << r.rowclones_ns << "," << r.lookups_ns << "," << r.skips << ","
           << r.swaps << "\n";
    } else {
      nlohmann::ordered_json j;
      j["total_ns"] = r.total_ns;
      j["activates_ns"] = r.activates_ns;
      j["accesses_ns"] = r.accesses_ns;
      j["rowclones_ns"] = r.rowclones_ns;
      j["lookups_ns"] = r.lookups_ns;
      j["skips"] = r.skips;
      j["swaps"] = r.swaps;
      out_ << j.dump() << "\n";
    }
  }

  // columns: t_rh, days (log10 alongside, since days can overflow)
  void write_duration_sweep(
      const std::vector<std::pair<std::uint64_t, DurationEstimate>>& sweep) {
    out_ << "t_rh,days,log10_days\n";
    for (const auto& [trh, est] : sweep)
      out_ << trh << ","
           << (est.unbounded ? "unbounded" : fmt_double(est.days)) << ","
           << (est.unbounded ? "inf" : fmt_double(est.log10_days)) << "\n";
  }

  void write_overhead(const OverheadReport& r) {
    out_ << "framework,involved_memory,capacity_overhead,area_overhead\n";
    for (const OverheadRow& row : r.reference_rows)
      out_ << row.framework << "," << row.involved_memory << ","
           << row.capacity_overhead << "," << row.area_overhead << "\n";
    out_ << "# dram_overhead_bytes=" << r.dram_capacity_overhead
         << " sram_overhead_bytes=" << r.sram_capacity_overhead
         << " max_entries=" << r.max_entries << "\n";
  }

 private:
  std::ofstream out_;
  ReportFormat fmt_;
};

}  // namespace dlocker
