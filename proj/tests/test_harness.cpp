#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "acs/harness.hpp"
#include "oracles.hpp"

using namespace acs;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("acs_harness_" + name);
  fs::remove_all(p);
  return p;
}

json small_config(const fs::path& out) {
  return json{{"problems", {{{"function", "rotated_elliptic"}, {"dim", 4}}, {{"function", "shifted_rastrigin"}, {"dim", 3}}}},
              {"algorithms", {{{"family", "jde"}, {"mode", "adaptive"}}, {{"family", "pso-w"}, {"mode", "fixed0.5"}}}},
              {"runs", 4},
              {"budget", 2000},
              {"master_seed", 5},
              {"out_dir", out.string()}};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Config, ParsesDefaultsAndOverrides) {
  const json doc{{"problems", {{{"function", "rotated_ackley"}}}},
                 {"algorithms", {{{"family", "jade"}}, {{"family", "pso-cf"}, {"mode", "baseline"}, {"np", 30}, {"eta", 0.2}}}},
                 {"epsilon", 0.05},
                 {"budget", "10000*D"}};
  const auto cfg = parse_config(doc);
  EXPECT_EQ(cfg.runs, 51u);
  EXPECT_EQ(cfg.problems[0].dim, 10u);
  EXPECT_EQ(cfg.problems[0].id(), "rotated_ackley_d10");
  EXPECT_EQ(cfg.budget.resolve(10), 100000u);
  EXPECT_EQ(cfg.algorithms[0].label, "jade");
  EXPECT_EQ(cfg.algorithms[0].mode.kind, AcosMode::Kind::Adaptive);
  EXPECT_EQ(cfg.algorithms[0].spec.coord.selector.epsilon, 0.05);
  EXPECT_EQ(cfg.algorithms[1].spec.np, 30u);
  EXPECT_EQ(cfg.algorithms[1].spec.c1, 2.05);
  EXPECT_EQ(cfg.algorithms[1].spec.coord.selector.eta, 0.2);
  EXPECT_EQ(cfg.algorithms[1].mode.kind, AcosMode::Kind::Baseline);
}

TEST(Config, RejectsBadDocuments) {
  const json base = small_config("x");
  auto with = [&](const char* key, json v) {
    json d = base;
    d[key] = v;
    return d;
  };
  EXPECT_THROW(parse_config(with("bogus", 1)), ConfigError);
  EXPECT_THROW(parse_config(with("runs", 0)), ConfigError);
  EXPECT_THROW(parse_config(with("runs", "many")), ConfigError);
  EXPECT_THROW(parse_config(with("budget", "100*N")), ConfigError);
  EXPECT_THROW(parse_config(with("budget", 10)), ConfigError);  // below NP
  json d = base;
  d["algorithms"][0]["gamma"] = 1;
  EXPECT_THROW(parse_config(d), ConfigError);
  d = base;
  d["algorithms"][0]["family"] = "cmaes";
  EXPECT_THROW(parse_config(d), ConfigError);
  d = base;
  d["algorithms"][1] = d["algorithms"][0];
  EXPECT_THROW(parse_config(d), ConfigError);  // duplicate cell
  d = base;
  d["problems"][0]["function"] = "rotated_sphere";
  EXPECT_THROW(parse_config(d), ConfigError);
  d = base;
  d["algorithms"][0]["eta"] = 1.5;
  EXPECT_THROW(parse_config(d), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch("load");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << small_config(dir / "out").dump(2);
    std::ofstream(dir / "broken.json") << "{ not json";
  }
  EXPECT_EQ(load_config(dir / "ok.json").runs, 4u);
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Seeds, StableAndDistinct) {
  const auto s = derive_seed(1, "rotated_elliptic_d10", "jade", "adaptive", 0);
  EXPECT_EQ(s, derive_seed(1, "rotated_elliptic_d10", "jade", "adaptive", 0));
  EXPECT_NE(s, derive_seed(2, "rotated_elliptic_d10", "jade", "adaptive", 0));
  EXPECT_NE(s, derive_seed(1, "rotated_elliptic_d10", "jade", "adaptive", 1));
  EXPECT_NE(s, derive_seed(1, "rotated_elliptic_d10", "jade", "fixed0.5", 0));
  EXPECT_NE(s, derive_seed(1, "rotated_elliptic_d10", "jde", "adaptive", 0));
}

TEST(Format, ScientificSixDigits) {
  EXPECT_EQ(format_sci(0.0), "0.00000e+00");
  EXPECT_EQ(format_sci(1234.5678), "1.23457e+03");
  EXPECT_EQ(format_sci(2e-8), "2.00000e-08");
}

TEST(Experiment, SingleRunSingleTrace) {
  const auto out = scratch("single");
  json doc = small_config(out);
  doc["runs"] = 1;
  doc["problems"] = {{{"function", "rotated_elliptic"}, {"dim", 4}}};
  doc["algorithms"] = {{{"family", "jde"}, {"mode", "fixed0.5"}}};
  const auto cfg = parse_config(doc);
  const auto records = run_experiment(cfg);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].ok);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out / "traces")) {
    ++files;
    EXPECT_EQ(e.path().filename(), "rotated_elliptic_d4_jde_fixed0.5_r0.csv");
  }
  EXPECT_EQ(files, 1u);
  const auto trace = lines(oracle::slurp(out / "traces" / "rotated_elliptic_d4_jde_fixed0.5_r0.csv"));
  EXPECT_EQ(trace[0], "generation,fes,best_error,p_m");
  const std::regex row(R"(\d+,\d+,\d\.\d{5}e[+-]\d{2},5\.00000e-01)");
  for (std::size_t k = 1; k < trace.size(); ++k) ASSERT_TRUE(std::regex_match(trace[k], row)) << trace[k];
}

TEST(Experiment, OutputsShapeAndMonotoneTraces) {
  const auto out = scratch("shape");
  const auto cfg = parse_config(small_config(out));
  const auto records = run_experiment(cfg);
  ASSERT_EQ(records.size(), 2u * 2u * 4u);
  const auto summary = summarize_cells(cfg, records);
  EXPECT_EQ(summary.size(), 4u);
  const auto pairs = compare_cells(cfg, records);
  EXPECT_EQ(pairs.size(), 2u);
  emit_outputs(records, summary, pairs, out);

  const auto s = lines(oracle::slurp(out / "summary.csv"));
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0], "problem,dim,algorithm,mode,mean_error,std_dev,runs");
  EXPECT_EQ(s[1].substr(0, 33), "rotated_elliptic_d4,4,jde,adaptiv");
  const auto p = lines(oracle::slurp(out / "pairwise.csv"));
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0], "problem,algA,algB,W,p,verdict");
  EXPECT_NE(p[1].find("jde/adaptive,pso-w/fixed0.5"), std::string::npos);
  EXPECT_EQ(oracle::slurp(out / "summary.csv").find('\r'), std::string::npos);

  for (const auto& r : records) {
    for (std::size_t k = 1; k < r.result.trace.size(); ++k)
      ASSERT_LE(r.result.trace[k].best_error, r.result.trace[k - 1].best_error);
  }
  const auto table = read_runs_csv(out / "runs.csv");
  EXPECT_EQ(table.size(), records.size());
  EXPECT_EQ(select_cell(table, "shifted_rastrigin_d3/pso-w/fixed0.5").size(), 4u);
  EXPECT_THROW(select_cell(table, "shifted_rastrigin_d3/pso-w"), ConfigError);
  EXPECT_THROW(select_cell(table, "nope/pso-w/fixed0.5"), ConfigError);
}

TEST(Experiment, ThreadCountDoesNotChangeSummary) {
  std::string first;
  for (std::size_t threads : {1u, 8u, 3u}) {
    const auto out = scratch("threads" + std::to_string(threads));
    auto cfg = parse_config(small_config(out));
    cfg.threads = threads;
    const auto records = run_experiment(cfg);
    emit_outputs(records, summarize_cells(cfg, records), compare_cells(cfg, records), out);
    const auto text = oracle::slurp(out / "summary.csv") + oracle::slurp(out / "pairwise.csv");
    if (first.empty()) first = text;
    EXPECT_EQ(text, first) << "threads=" << threads;
  }
}

TEST(Experiment, FailedRunIsRecordedAndCampaignContinues) {
  const auto out = scratch("failure");
  const auto cfg = parse_config(small_config(out));
  auto flaky = [](const Problem& p, const AlgorithmEntry& a, std::size_t budget, std::uint64_t seed) {
    if (a.label == "jde" && p.dim() == 3) throw EvaluationFailure("injected");
    return default_executor(p, a, budget, seed);
  };
  const auto records = run_experiment(cfg, flaky);
  std::size_t failed = 0;
  for (const auto& r : records) failed += !r.ok;
  EXPECT_EQ(failed, 4u);
  const auto summary = summarize_cells(cfg, records);
  EXPECT_EQ(summary[2].runs, 0u);
  EXPECT_EQ(summary[3].runs, 4u);
  const auto pairs = compare_cells(cfg, records);
  EXPECT_EQ(pairs.size(), 1u);
  emit_outputs(records, summary, pairs, out);
  EXPECT_TRUE(fs::exists(out / "failures.txt"));
  EXPECT_NE(oracle::slurp(out / "summary.csv").find("shifted_rastrigin_d3,3,jde,adaptive,nan,nan,0"),
            std::string::npos);
}

TEST(Experiment, UnwritableOutputFailsBeforeRuns) {
  const auto blocker = scratch("blocker");
  std::ofstream(blocker) << "a file, not a directory";
  auto cfg = parse_config(small_config(blocker / "sub"));
  std::size_t calls = 0;
  auto counting = [&](const Problem& p, const AlgorithmEntry& a, std::size_t budget, std::uint64_t seed) {
    ++calls;
    return default_executor(p, a, budget, seed);
  };
  EXPECT_THROW(run_experiment(cfg, counting), IoError);
  EXPECT_EQ(calls, 0u);
}
