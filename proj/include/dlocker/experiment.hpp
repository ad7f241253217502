#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "dlocker/analysis.hpp"
#include "dlocker/attacks.hpp"
#include "dlocker/config.hpp"
#include "dlocker/dram.hpp"
#include "dlocker/lock.hpp"
#include "dlocker/model.hpp"
#include "dlocker/page_table.hpp"
#include "dlocker/report.hpp"
#include "dlocker/weight_map.hpp"

namespace dlocker {

struct TrialResult {
  std::uint64_t seed = 0;
  double clean_accuracy = 0.0;
  double final_accuracy = 0.0;
  AttackReport attack;
  TraceStats trace;
};

inline TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
  DramState dram(cfg.dram);
  QuantizedModel model = load_model(cfg.model_path);
  Dataset dataset = load_dataset(cfg.dataset_path, model.input_dim);

  // Placement needs reservation geometry; a policy-free controller probe
  // answers that without touching state.
  LockTable placeholder;
  LockController probe(dram, placeholder, DefensePolicy{PolicyKind::None, 0},
                       cfg.controller, seed);
  // PTA also stores the page table in DRAM and protects its rows; keep the
  // weight placement away from the PTE row and its neighborhood.
  PageTable pt({{0, 0, 1}}, cfg.dram.row_size);
  std::vector<RowAddress> exclude;
  if (cfg.attack == AttackKind::Pta) exclude = pt.pte_rows();
  WeightMap map = map_weights_to_rows(model, cfg.dram, probe,
                                      PlacementPolicy::Scatter, seed, exclude);
  store_model_to_dram(model, map, dram);

  std::vector<RowAddress> protected_rows = map.rows();
  if (cfg.attack == AttackKind::Pta) {
    for (const RowAddress& r : pt.pte_rows()) protected_rows.push_back(r);
    Pte pte;
    pte.valid = true;
    pte.frame = map.rows().front();
    pt.set_entry(dram, cfg.pta_vpn, pte);
  }

  LockTable table = build_lock_table(protected_rows, cfg.dram,
                                     cfg.locktable_capacity,
                                     cfg.locktable_entry_bytes);
  LockController controller(dram, std::move(table), cfg.policy, cfg.controller,
                            seed);
  controller.set_protected_rows(protected_rows);

  AttackSettings s;
  s.budget = cfg.attack_budget;
  s.eval_samples = cfg.eval_samples;
  s.rank_batch = cfg.rank_batch;
  s.seed = seed;
  s.hammer_attempts = cfg.hammer_attempts;

  TrialResult res;
  res.seed = seed;
  res.clean_accuracy = evaluate(model, dataset, cfg.eval_samples, seed);
  switch (cfg.attack) {
    case AttackKind::Bfa:
      res.attack = bfa_progressive(model, map, controller, dataset, s);
      break;
    case AttackKind::Random:
      res.attack = random_attack(model, map, controller, dataset, s);
      break;
    case AttackKind::Pta:
      res.attack = pta_attack(pt, controller, cfg.pta_vpn, cfg.pta_bit, s);
      break;
  }
  QuantizedModel post = sync_model_from_dram(model, map, dram);
  res.final_accuracy = evaluate(post, dataset, cfg.eval_samples, seed);
  res.trace = controller.stats();
  return res;
}

// Runs every seed's trial, writes the per-trial artifacts, prints a
// one-line summary each. Returns 0 on success.
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::uint64_t cfg_hash = fnv1a(cfg.raw_text);
  const char* policy_name = cfg.policy.kind == PolicyKind::None ? "none"
                            : cfg.policy.kind == PolicyKind::LockTable
                                ? "locktable"
                                : "blindswap";
  for (std::uint64_t seed : cfg.seeds) {
    TrialResult r = run_trial(cfg, seed);
    const std::string base =
        cfg.output_dir + "/trial_" + std::to_string(seed);
    {
      ReportWriter w(base + "_attack.csv", ReportFormat::Csv, cfg_hash, seed);
      w.write_attack(r.attack);
    }
    {
      ReportWriter w(base + "_curve.csv", ReportFormat::Csv, cfg_hash, seed);
      w.write_accuracy_curve(r.attack, policy_name);
    }
    {
      ReportWriter w(base + "_latency.csv", ReportFormat::Csv, cfg_hash, seed);
      w.write_latency(account_latency(r.trace, cfg.dram.timing,
                                      cfg.controller.lookup_ns));
    }
    {
      LockTable t;
      t.capacity_bytes = cfg.locktable_capacity;
      t.entry_bytes = cfg.locktable_entry_bytes;
      ReportWriter w(base + "_overhead.csv", ReportFormat::Csv, cfg_hash, seed);
      w.write_overhead(overhead_report(t));
    }
    {
      DurationModelParams p;
      p.t_rh = cfg.dram.t_rh;
      p.t_ref = cfg.dram.t_ref;
      p.per_copy_error = cfg.dram.copy_error_rate;
      ReportWriter w(base + "_duration.csv", ReportFormat::Csv, cfg_hash, seed);
      w.write_duration_sweep({{p.t_rh, estimate_defense_duration(p, seed)}});
    }
    log << "trial seed=" << seed << " policy=" << policy_name
        << " clean=" << fmt_double(r.clean_accuracy)
        << " final=" << fmt_double(r.final_accuracy)
        << " flips=" << r.attack.flips_landed << "/"
        << r.attack.flips_attempted << " denied="
        << r.attack.denied_activations << " time_ns=" << r.trace.total_ns
        << "\n";
  }
  return 0;
}

}  // namespace dlocker
