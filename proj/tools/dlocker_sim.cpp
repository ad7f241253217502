// Experiment runner for the DRAM-Locker simulator.
//
//   dlocker-sim run      --config exp.cfg [--seed N] [--out DIR] [--policy P]
//   dlocker-sim attack   --config exp.cfg ...        (alias of run)
//   dlocker-sim duration --model M1|M2 --trh N --perr P [--tref NS] [--sweep]
//   dlocker-sim overhead [--capacity BYTES] [--entry-bytes N]
//   dlocker-sim asm      IN.txt OUT.bin
//   dlocker-sim disasm   IN.bin [OUT.txt]
//
// Exit codes: 0 ok, 1 runtime failure, 2 invalid config/arguments.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dlocker/dlocker.hpp"

namespace {

using namespace dlocker;

ExperimentConfig load_cfg(const std::string& path,
                          const std::optional<std::uint64_t>& seed_override,
                          const std::optional<std::string>& out_override,
                          const std::optional<std::string>& policy_override,
                          const std::optional<std::string>& preset_override) {
  ExperimentConfig cfg = load_experiment_config(path);
  if (seed_override) cfg.seeds = {*seed_override};
  if (out_override) cfg.output_dir = *out_override;
  if (policy_override) {
    if (*policy_override == "none") cfg.policy.kind = PolicyKind::None;
    else if (*policy_override == "locktable") cfg.policy.kind = PolicyKind::LockTable;
    else if (*policy_override == "blindswap") cfg.policy.kind = PolicyKind::BlindSwap;
    else throw config_error("--policy must be none|locktable|blindswap");
  }
  if (preset_override) cfg.dram.t_rh = trh_preset(*preset_override);
  return cfg;
}

int cmd_run(const std::string& config_path,
            const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out,
            const std::optional<std::string>& policy,
            const std::optional<std::string>& preset) {
  ExperimentConfig cfg;
  try {
    cfg = load_cfg(config_path, seed, out, policy, preset);
  } catch (const sim_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    return run_experiment(cfg, std::cout);
  } catch (const sim_error& e) {
    std::cerr << "trial failed: " << e.what() << "\n";
    return 1;
  }
}

int cmd_duration(const std::string& model, std::uint64_t trh, double perr,
                 std::uint64_t tref, std::uint64_t seed, bool sweep) {
  DurationModelParams p;
  if (model == "M1") p.model_id = DurationModel::M1;
  else if (model == "M2") p.model_id = DurationModel::M2;
  else {
    std::cerr << "--model must be M1 or M2\n";
    return 2;
  }
  p.per_copy_error = perr;
  p.t_rh = trh;
  p.t_ref = tref;
  try {
    p.validate();
  } catch (const sim_error& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return 2;
  }
  std::vector<std::uint64_t> thresholds = sweep
      ? std::vector<std::uint64_t>{trh, 2 * trh, 4 * trh, 8 * trh, 16 * trh}
      : std::vector<std::uint64_t>{trh};
  std::cout << "t_rh,days,log10_days,ci_low,ci_high\n";
  for (std::uint64_t t : thresholds) {
    p.t_rh = t;
    DurationEstimate est = estimate_defense_duration(p, seed);
    std::cout << t << ",";
    if (est.unbounded)
      std::cout << "unbounded,inf,,";
    else
      std::cout << fmt_double(est.days) << "," << fmt_double(est.log10_days)
                << "," << fmt_double(est.ci_low_days) << ","
                << fmt_double(est.ci_high_days);
    std::cout << "\n";
  }
  return 0;
}

int cmd_overhead(std::uint64_t capacity, std::uint64_t entry_bytes) {
  LockTable t;
  t.capacity_bytes = capacity;
  t.entry_bytes = entry_bytes;
  OverheadReport r = overhead_report(t);
  for (const OverheadRow& row : r.reference_rows)
    std::cout << row.framework << " " << row.involved_memory << " "
              << row.capacity_overhead << " " << row.area_overhead << "\n";
  std::cout << "dram_overhead_bytes=" << r.dram_capacity_overhead
            << " sram_overhead_bytes=" << r.sram_capacity_overhead
            << " max_entries=" << r.max_entries << "\n";
  return 0;
}

int cmd_asm(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) {
    std::cerr << "cannot open " << in_path << "\n";
    return 2;
  }
  try {
    write_program_binary(assemble_text(in), out_path);
  } catch (const sim_error& e) {
    std::cerr << "assembly failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_disasm(const std::string& in_path,
               const std::optional<std::string>& out_path) {
  try {
    std::vector<word16> words = read_program_binary(in_path);
    if (out_path) {
      std::ofstream out(*out_path);
      if (!out) throw io_error("cannot open " + *out_path);
      disassemble_text(words, out);
    } else {
      disassemble_text(words, std::cout);
    }
  } catch (const sim_error& e) {
    std::cerr << "disassembly failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRAM-Locker RowHammer defense simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, policy, preset;
  if (const char* env = std::getenv("DLOCKER_OUT")) out_dir = env;

  auto add_run_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", seed, "override the config's seed list");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--policy", policy, "none|locktable|blindswap");
    sub->add_option("--preset", preset, "t_rh preset, e.g. ddr4-new");
  };
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  add_run_opts(run);
  CLI::App* attack = app.add_subcommand("attack", "run one attack scenario");
  add_run_opts(attack);

  CLI::App* duration =
      app.add_subcommand("duration", "defense-duration estimation");
  std::string dmodel = "M1";
  std::uint64_t trh = 1000, tref = 64'000'000, dseed = 1;
  double perr = 0.1;
  bool sweep = false;
  duration->add_option("--model", dmodel, "M1 or M2");
  duration->add_option("--trh", trh, "RowHammer threshold");
  duration->add_option("--perr", perr, "per-copy error probability");
  duration->add_option("--tref", tref, "refresh interval, ns");
  duration->add_option("--seed", dseed, "Monte Carlo seed");
  duration->add_flag("--sweep", sweep, "5-point threshold sweep");

  CLI::App* overhead = app.add_subcommand("overhead", "hardware overhead table");
  std::uint64_t capacity = 57344, entry_bytes = 4;
  overhead->add_option("--capacity", capacity, "lock-table SRAM bytes");
  overhead->add_option("--entry-bytes", entry_bytes, "bytes per entry");

  CLI::App* asmcmd = app.add_subcommand("asm", "assemble text to binary");
  std::string asm_in, asm_out;
  asmcmd->add_option("input", asm_in, "assembly listing")->required();
  asmcmd->add_option("output", asm_out, "binary program")->required();

  CLI::App* disasm = app.add_subcommand("disasm", "disassemble binary to text");
  std::string dis_in;
  std::optional<std::string> dis_out;
  disasm->add_option("input", dis_in, "binary program")->required();
  disasm->add_option("output", dis_out, "listing (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return cmd_run(config_path, seed, out_dir, policy, preset);
  if (attack->parsed())
    return cmd_run(config_path, seed, out_dir, policy, preset);
  if (duration->parsed())
    return cmd_duration(dmodel, trh, perr, tref, dseed, sweep);
  if (overhead->parsed()) return cmd_overhead(capacity, entry_bytes);
  if (asmcmd->parsed()) return cmd_asm(asm_in, asm_out);
  if (disasm->parsed()) return cmd_disasm(dis_in, dis_out);
  return 2;
}
