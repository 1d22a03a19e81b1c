#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or configuration
// error, 2 runtime failure (including any failed run in a campaign).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acs/harness.hpp"

namespace acs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Modes produced by `ablate` for each configured algorithm.
inline std::vector<AcosMode> ablation_modes() {
  return {AcosMode::no_archive(), AcosMode::fixed(0.0), AcosMode::fixed(0.5), AcosMode::fixed(1.0),
          AcosMode::adaptive()};
}

inline ExperimentConfig expand_ablation(const ExperimentConfig& cfg) {
  ExperimentConfig out = cfg;
  out.algorithms.clear();
  std::set<std::string> seen;
  for (const auto& a : cfg.algorithms) {
    if (!seen.insert(a.label).second) continue;
    for (const auto& m : ablation_modes()) out.algorithms.push_back({a.label, a.spec, m});
  }
  out.validate();
  return out;
}

namespace detail {

inline void print_summary(const std::vector<SummaryRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    out << r.problem << "  " << r.algorithm << '/' << r.mode << "  " << format_sci(r.stats.mean) << " +- "
        << format_sci(r.stats.std_dev) << "  (" << r.runs << " runs)\n";
  }
}

inline int run_campaign(ExperimentConfig cfg, std::ostream& out, std::ostream& err) {
  const auto records = run_experiment(cfg);
  const auto summary = summarize_cells(cfg, records);
  const auto pairs = compare_cells(cfg, records);
  emit_outputs(records, summary, pairs, cfg.out_dir);
  print_summary(summary, out);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok ? 0 : 1;
  out << "results written to " << cfg.out_dir << '\n';
  if (failed) {
    err << failed << " run(s) failed; see " << (std::filesystem::path(cfg.out_dir) / "failures.txt").string() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Adaptive coordinate-system optimizers: experiment runner"};
  app.name("acs");
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;

  auto add_campaign_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides out_dir)");
    sub->add_option("--threads", threads, "worker threads (0: hardware concurrency)");
    sub->add_option("--seed", seed, "master seed (overrides master_seed)");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run every configured (problem, algorithm) cell");
  add_campaign_flags(run_cmd);
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run each algorithm in noarchive/fixed0/fixed0.5/fixed1/adaptive");
  add_campaign_flags(ablate_cmd);

  std::string cell_a, cell_b, results_dir = "results";
  double alpha = 0.05;
  CLI::App* compare_cmd = app.add_subcommand("compare", "rank-sum test between two cells of a finished campaign");
  compare_cmd->add_option("--a", cell_a, "cell problem/algorithm/mode")->required();
  compare_cmd->add_option("--b", cell_b, "cell problem/algorithm/mode")->required();
  compare_cmd->add_option("--alpha", alpha, "significance level")->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("--dir", results_dir, "campaign output directory containing runs.csv");

  CLI::App* list_cmd = app.add_subcommand("list-functions", "print the benchmark catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*list_cmd) {
      out << "name,category,min_dim\n";
      for (const auto& e : suite_catalog()) out << e.name << ',' << e.category << ',' << e.min_dim << '\n';
      return kExitOk;
    }
    if (*compare_cmd) {
      const auto rows = read_runs_csv(std::filesystem::path(results_dir) / "runs.csv");
      const auto a = select_cell(rows, cell_a);
      const auto b = select_cell(rows, cell_b);
      if (a.size() < 3 || b.size() < 3) throw ConfigError("compare: each cell needs at least 3 successful runs");
      const auto sa = summarize(a);
      const auto sb = summarize(b);
      const auto t = wilcoxon_rank_sum(a, b, alpha);
      out << "A " << cell_a << "  " << format_sci(sa.mean) << " +- " << format_sci(sa.std_dev) << "  (" << a.size()
          << " runs)\n";
      out << "B " << cell_b << "  " << format_sci(sb.mean) << " +- " << format_sci(sb.std_dev) << "  (" << b.size()
          << " runs)\n";
      out << "W=" << format_sci(t.W) << " p=" << format_sci(t.p) << " verdict=" << verdict_symbol(t.verdict) << '\n';
      return kExitOk;
    }
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads) cfg.threads = *threads;
    if (seed) cfg.master_seed = *seed;
    if (*ablate_cmd) cfg = expand_ablation(cfg);
    return detail::run_campaign(std::move(cfg), out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace acs
