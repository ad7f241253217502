#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlocker/analysis.hpp"
#include "dlocker/dram.hpp"
#include "dlocker/lock.hpp"
#include "dlocker/types.hpp"

namespace dlocker {

enum class AttackKind { Bfa, Random, Pta };

// Experiment configuration, parsed from a flat `key = value` text file.
// Unknown keys are errors; every piece of randomness flows from `seeds`.
struct ExperimentConfig {
  DramConfig dram;
  DefensePolicy policy;
  LockController::Options controller;
  std::string model_path;
  std::string dataset_path;
  AttackKind attack = AttackKind::Bfa;
  std::uint64_t attack_budget = 100;
  std::size_t eval_samples = 128;
  std::size_t rank_batch = 64;
  std::uint64_t hammer_attempts = 0;
  std::uint32_t pta_vpn = 0;
  std::uint8_t pta_bit = 10;  // lowest frame bit by default
  std::uint64_t locktable_capacity = 57344;
  std::uint64_t locktable_entry_bytes = 4;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  std::string raw_text;  // original file contents, for the artifact hash
};

namespace config_detail {

inline std::map<std::string, std::string> parse_kv(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw config_error("line " + std::to_string(lineno) + ": empty key or value");
    if (kv.count(key))
      throw config_error("duplicate key: " + key);
    kv[key] = val;
  }
  return kv;
}

inline std::uint64_t to_u64(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("key " + k + ": expected integer, got '" + v + "'");
  }
}

inline double to_double(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("key " + k + ": expected number, got '" + v + "'");
  }
}

}  // namespace config_detail

inline ExperimentConfig parse_experiment_config(std::istream& in,
                                                const std::string& raw_text) {
  auto kv = config_detail::parse_kv(in);
  ExperimentConfig cfg;
  cfg.raw_text = raw_text;
  std::set<std::string> seen;
  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    seen.insert(key);
    return &it->second;
  };
  using config_detail::to_double;
  using config_detail::to_u64;

  if (const auto* v = take("dram.preset")) cfg.dram.t_rh = trh_preset(*v);
  if (const auto* v = take("dram.t_rh")) cfg.dram.t_rh = to_u64("dram.t_rh", *v);
  if (const auto* v = take("dram.banks"))
    cfg.dram.banks = static_cast<std::uint32_t>(to_u64("dram.banks", *v));
  if (const auto* v = take("dram.subarrays_per_bank"))
    cfg.dram.subarrays_per_bank =
        static_cast<std::uint32_t>(to_u64("dram.subarrays_per_bank", *v));
  if (const auto* v = take("dram.rows_per_subarray"))
    cfg.dram.rows_per_subarray =
        static_cast<std::uint32_t>(to_u64("dram.rows_per_subarray", *v));
  if (const auto* v = take("dram.row_size"))
    cfg.dram.row_size = static_cast<std::uint32_t>(to_u64("dram.row_size", *v));
  if (const auto* v = take("dram.t_ref_ns")) cfg.dram.t_ref = to_u64("dram.t_ref_ns", *v);
  if (const auto* v = take("dram.copy_error_preset"))
    cfg.dram.copy_error_rate = copy_error_preset(*v);
  if (const auto* v = take("dram.copy_error_rate"))
    cfg.dram.copy_error_rate = to_double("dram.copy_error_rate", *v);
  if (const auto* v = take("dram.repeat_flips"))
    cfg.dram.repeat_flips = (*v == "true");
  if (const auto* v = take("timing.t_act_pre"))
    cfg.dram.timing.t_act_pre = to_u64("timing.t_act_pre", *v);
  if (const auto* v = take("timing.t_rd")) cfg.dram.timing.t_rd = to_u64("timing.t_rd", *v);
  if (const auto* v = take("timing.t_wr")) cfg.dram.timing.t_wr = to_u64("timing.t_wr", *v);
  if (const auto* v = take("timing.t_rowclone"))
    cfg.dram.timing.t_rowclone = to_u64("timing.t_rowclone", *v);

  if (const auto* v = take("policy.kind")) {
    if (*v == "none") cfg.policy.kind = PolicyKind::None;
    else if (*v == "locktable") cfg.policy.kind = PolicyKind::LockTable;
    else if (*v == "blindswap") cfg.policy.kind = PolicyKind::BlindSwap;
    else throw config_error("policy.kind must be none|locktable|blindswap");
  }
  if (const auto* v = take("policy.blind_swap_period"))
    cfg.policy.blind_swap_period = to_u64("policy.blind_swap_period", *v);

  if (const auto* v = take("locktable.capacity_bytes"))
    cfg.locktable_capacity = to_u64("locktable.capacity_bytes", *v);
  if (const auto* v = take("locktable.entry_bytes"))
    cfg.locktable_entry_bytes = to_u64("locktable.entry_bytes", *v);
  if (const auto* v = take("locktable.lookup_ns"))
    cfg.controller.lookup_ns = to_u64("locktable.lookup_ns", *v);
  if (const auto* v = take("relock.window"))
    cfg.controller.relock_window = to_u64("relock.window", *v);
  if (const auto* v = take("relock.scope")) {
    if (*v == "global") cfg.controller.relock_per_row = false;
    else if (*v == "per_row") cfg.controller.relock_per_row = true;
    else throw config_error("relock.scope must be global|per_row");
  }
  if (const auto* v = take("controller.free_rows_per_subarray"))
    cfg.controller.free_rows_per_subarray =
        static_cast<std::uint32_t>(to_u64("controller.free_rows_per_subarray", *v));

  if (const auto* v = take("victim.model")) cfg.model_path = *v;
  if (const auto* v = take("victim.dataset")) cfg.dataset_path = *v;

  if (const auto* v = take("attack.kind")) {
    if (*v == "bfa") cfg.attack = AttackKind::Bfa;
    else if (*v == "random") cfg.attack = AttackKind::Random;
    else if (*v == "pta") cfg.attack = AttackKind::Pta;
    else throw config_error("attack.kind must be bfa|random|pta");
  }
  if (const auto* v = take("attack.budget")) cfg.attack_budget = to_u64("attack.budget", *v);
  if (const auto* v = take("attack.eval_samples"))
    cfg.eval_samples = to_u64("attack.eval_samples", *v);
  if (const auto* v = take("attack.rank_batch"))
    cfg.rank_batch = to_u64("attack.rank_batch", *v);
  if (const auto* v = take("attack.hammer_attempts"))
    cfg.hammer_attempts = to_u64("attack.hammer_attempts", *v);
  if (const auto* v = take("attack.pta_vpn"))
    cfg.pta_vpn = static_cast<std::uint32_t>(to_u64("attack.pta_vpn", *v));
  if (const auto* v = take("attack.pta_bit"))
    cfg.pta_bit = static_cast<std::uint8_t>(to_u64("attack.pta_bit", *v));

  if (const auto* v = take("seeds")) {
    cfg.seeds.clear();
    std::istringstream ss(*v);
    std::string tok;
    while (std::getline(ss, tok, ','))
      cfg.seeds.push_back(config_detail::to_u64("seeds", tok));
    if (cfg.seeds.empty()) throw config_error("seeds must be non-empty");
  }
  if (const auto* v = take("outputs.dir")) cfg.output_dir = *v;

  for (const auto& [key, val] : kv)
    if (!seen.count(key)) throw config_error("unknown config key: " + key);
  cfg.dram.validate();
  cfg.policy.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::istringstream body(buf.str());
  return parse_experiment_config(body, buf.str());
}

}  // namespace dlocker
