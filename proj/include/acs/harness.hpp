#pragma once

// Experiment campaigns: JSON configuration, seeded multi-run execution on a
// thread pool, per-cell summaries, pairwise rank-sum comparisons and CSV
// output.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "acs/algorithms.hpp"
#include "acs/benchmarks.hpp"
#include "acs/stats.hpp"
#include "json.hpp"

namespace acs {

// ---------------------------------------------------------------------------
// Configuration

struct ProblemSpec {
  std::string function;
  std::size_t dim = 10;
  std::uint64_t instance_seed = 1;

  // Identifier used in every output file; includes the dimension so the same
  // function at two sizes never collides.
  std::string id() const { return function + "_d" + std::to_string(dim); }
};

struct AlgorithmEntry {
  std::string label;  // defaults to the family name
  AlgorithmSpec spec;
  AcosMode mode;
};

struct Budget {
  std::size_t fixed = 0;     // absolute FEs when non-zero
  std::size_t per_dim = 0;   // otherwise per_dim * D

  std::size_t resolve(std::size_t dim) const { return fixed != 0 ? fixed : per_dim * dim; }
};

struct ExperimentConfig {
  std::vector<ProblemSpec> problems;
  std::vector<AlgorithmEntry> algorithms;
  std::size_t runs = 51;
  Budget budget{0, 10000};
  std::uint64_t master_seed = 1;
  std::string out_dir = "results";
  std::size_t threads = 1;
  double alpha = 0.05;
  bool write_traces = true;

  void validate() const;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

template <class T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key \"" + key + "\" has the wrong type");
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

inline std::size_t read_count(const json& obj, const char* key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(where + ": \"" + key + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

inline Budget parse_budget(const json& v) {
  if (v.is_number_integer()) {
    if (v.get<long long>() <= 0) throw ConfigError("budget: must be positive");
    return {v.get<std::size_t>(), 0};
  }
  if (v.is_string()) {
    static const std::regex pattern(R"(\s*(\d+)\s*\*\s*D\s*)");
    std::smatch m;
    const std::string s = v.get<std::string>();
    if (std::regex_match(s, m, pattern) && std::stoull(m[1].str()) > 0) return {0, std::stoull(m[1].str())};
  }
  throw ConfigError("budget: expected a positive integer or a string like \"10000*D\"");
}

inline FrameEstimator parse_estimator(const std::string& s) {
  if (s == "rank_mu") return FrameEstimator::RankMuArchive;
  if (s == "whole_population") return FrameEstimator::WholePopulation;
  if (s == "best_fraction") return FrameEstimator::BestFraction;
  throw ConfigError("estimator: unknown value \"" + s + "\"");
}

}  // namespace detail

/// Parses a configuration document. Unknown keys are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using detail::get_as;
  using detail::read_opt;
  detail::reject_unknown_keys(doc,
                              {"problems", "algorithms", "runs", "budget", "master_seed", "out_dir", "threads",
                               "alpha", "traces", "epsilon", "eta", "archive_factor"},
                              "config");
  ExperimentConfig cfg;
  if (!doc.contains("problems") || !doc["problems"].is_array()) throw ConfigError("config: \"problems\" list required");
  if (!doc.contains("algorithms") || !doc["algorithms"].is_array())
    throw ConfigError("config: \"algorithms\" list required");

  for (const auto& p : doc["problems"]) {
    const std::string where = "problems[" + std::to_string(cfg.problems.size()) + "]";
    detail::reject_unknown_keys(p, {"function", "dim", "instance_seed"}, where);
    if (!p.contains("function")) throw ConfigError(where + ": \"function\" required");
    ProblemSpec ps;
    ps.function = get_as<std::string>(p, "function", where);
    if (p.contains("dim")) ps.dim = detail::read_count(p, "dim", where);
    read_opt(p, "instance_seed", ps.instance_seed, where);
    cfg.problems.push_back(std::move(ps));
  }

  std::optional<double> epsilon, eta, archive_factor;
  if (doc.contains("epsilon")) epsilon = get_as<double>(doc, "epsilon", "config");
  if (doc.contains("eta")) eta = get_as<double>(doc, "eta", "config");
  if (doc.contains("archive_factor")) archive_factor = get_as<double>(doc, "archive_factor", "config");

  for (const auto& a : doc["algorithms"]) {
    const std::string where = "algorithms[" + std::to_string(cfg.algorithms.size()) + "]";
    detail::reject_unknown_keys(a,
                                {"label", "family", "mode", "np", "c1", "c2", "w_start", "w_end", "chi",
                                 "velocity_clamp", "tau1", "tau2", "sade_lp", "jade_p", "jade_c",
                                 "jade_archive_factor", "epsilon", "eta", "archive_factor", "estimator",
                                 "best_fraction"},
                                where);
    if (!a.contains("family")) throw ConfigError(where + ": \"family\" required");
    const auto fam = parse_family(get_as<std::string>(a, "family", where));
    if (!fam) throw ConfigError(where + ": unknown family \"" + a["family"].dump() + "\"");
    AlgorithmEntry e;
    e.spec = AlgorithmSpec::defaults(*fam);
    e.label = std::string(family_name(*fam));
    read_opt(a, "label", e.label, where);
    e.mode = AcosMode::adaptive();
    if (a.contains("mode")) {
      const auto m = parse_mode(get_as<std::string>(a, "mode", where));
      if (!m) throw ConfigError(where + ": unknown mode " + a["mode"].dump());
      e.mode = *m;
    }
    if (a.contains("np")) e.spec.np = detail::read_count(a, "np", where);
    read_opt(a, "c1", e.spec.c1, where);
    read_opt(a, "c2", e.spec.c2, where);
    read_opt(a, "w_start", e.spec.w_start, where);
    read_opt(a, "w_end", e.spec.w_end, where);
    read_opt(a, "chi", e.spec.chi, where);
    read_opt(a, "velocity_clamp", e.spec.velocity_clamp, where);
    read_opt(a, "tau1", e.spec.tau1, where);
    read_opt(a, "tau2", e.spec.tau2, where);
    if (a.contains("sade_lp")) e.spec.sade_lp = detail::read_count(a, "sade_lp", where);
    read_opt(a, "jade_p", e.spec.jade_p, where);
    read_opt(a, "jade_c", e.spec.jade_c, where);
    read_opt(a, "jade_archive_factor", e.spec.jade_archive_factor, where);
    if (epsilon) e.spec.coord.selector.epsilon = *epsilon;
    if (eta) e.spec.coord.selector.eta = *eta;
    if (archive_factor) e.spec.coord.archive_factor = *archive_factor;
    read_opt(a, "epsilon", e.spec.coord.selector.epsilon, where);
    read_opt(a, "eta", e.spec.coord.selector.eta, where);
    read_opt(a, "archive_factor", e.spec.coord.archive_factor, where);
    if (a.contains("estimator")) e.spec.coord.estimator = detail::parse_estimator(get_as<std::string>(a, "estimator", where));
    read_opt(a, "best_fraction", e.spec.coord.best_fraction, where);
    cfg.algorithms.push_back(std::move(e));
  }

  if (doc.contains("runs")) cfg.runs = detail::read_count(doc, "runs", "config");
  if (doc.contains("budget")) cfg.budget = detail::parse_budget(doc["budget"]);
  if (doc.contains("master_seed")) {
    const auto& seed = doc["master_seed"];
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0))
      throw ConfigError("config: \"master_seed\" must be a non-negative integer");
    cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
  }
  read_opt(doc, "out_dir", cfg.out_dir, "config");
  if (doc.contains("threads")) cfg.threads = detail::read_count(doc, "threads", "config");
  read_opt(doc, "alpha", cfg.alpha, "config");
  read_opt(doc, "traces", cfg.write_traces, "config");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

inline void ExperimentConfig::validate() const {
  if (problems.empty()) throw ConfigError("config: at least one problem required");
  if (algorithms.empty()) throw ConfigError("config: at least one algorithm required");
  if (runs < 1) throw ConfigError("config: runs must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must be in (0, 1)");
  std::set<std::string> cells;
  for (const auto& a : algorithms) {
    if (a.label.empty() || a.label.find_first_of(",/\n") != std::string::npos)
      throw ConfigError("config: algorithm label \"" + a.label + "\" is empty or contains ',' or '/'");
    if (!cells.insert(a.label + "/" + a.mode.name()).second)
      throw ConfigError("config: duplicate algorithm " + a.label + "/" + a.mode.name() + "; set distinct labels");
  }
  std::set<std::string> ids;
  for (const auto& p : problems) {
    const SuiteEntry* entry = find_suite_entry(p.function);
    if (!entry) throw ConfigError("config: unknown function \"" + p.function + "\"");
    if (p.dim < std::max<std::size_t>(1, entry->min_dim))
      throw ConfigError("config: " + p.function + " requires dim >= " + std::to_string(std::max<std::size_t>(1, entry->min_dim)));
    if (!ids.insert(p.id()).second) throw ConfigError("config: duplicate problem " + p.id());
    for (const auto& a : algorithms) {
      try {
        a.spec.validate(p.dim);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + a.label + ": " + e.what());
      }
      if (budget.resolve(p.dim) < a.spec.resolved_np(p.dim))
        throw ConfigError("config: budget for " + p.id() + " is smaller than the population of " + a.label);
    }
  }
}

/// Per-run seed: a chained splitmix64 over the master seed, the FNV-1a hashes
/// of the problem, algorithm and mode names, and the run index.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view problem, std::string_view algorithm,
                                 std::string_view mode, std::size_t run_index) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ fnv1a64(problem));
  h = mix64(h ^ fnv1a64(algorithm));
  h = mix64(h ^ fnv1a64(mode));
  return mix64(h ^ static_cast<std::uint64_t>(run_index));
}

// ---------------------------------------------------------------------------
// Execution

struct RunRecord {
  std::string problem;  // ProblemSpec::id()
  std::size_t dim = 0;
  std::string algorithm;
  std::string mode;
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when !ok
  RunResult result;

  double final_error() const { return result.final_error.floored; }
};

/// "%.5e": scientific notation, six significant digits.
inline std::string format_sci(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string trace_file_name(const RunRecord& r) {
  return r.problem + "_" + r.algorithm + "_" + r.mode + "_r" + std::to_string(r.run_index) + ".csv";
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

inline void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe, std::ios::binary);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace detail

inline void write_trace(const RunRecord& r, const std::filesystem::path& path) {
  auto out = detail::open_output(path);
  out << "generation,fes,best_error,p_m\n";
  for (const auto& row : r.result.trace) {
    out << row.generation << ',' << row.fes << ',' << format_sci(row.best_error) << ',' << format_sci(row.p_m)
        << '\n';
  }
  detail::close_output(out, path);
}

/// Executes one run; replaceable so tests can inject failures.
using RunExecutor = std::function<RunResult(const Problem&, const AlgorithmEntry&, std::size_t budget, std::uint64_t seed)>;

inline RunResult default_executor(const Problem& problem, const AlgorithmEntry& alg, std::size_t budget,
                                  std::uint64_t seed) {
  return run(alg.spec, alg.mode, problem, budget, seed);
}

/// Executes every (problem, algorithm, run) job. Results come back in job
/// order whatever the thread count. A failing run is recorded and the
/// campaign continues; an unusable output directory fails before any run.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const RunExecutor& execute = default_executor) {
  cfg.validate();
  const std::filesystem::path out_dir(cfg.out_dir);
  const auto trace_dir = out_dir / "traces";
  detail::ensure_writable_dir(out_dir);
  if (cfg.write_traces) detail::ensure_writable_dir(trace_dir);

  std::vector<Problem> problems;
  for (const auto& p : cfg.problems) problems.push_back(make_problem(p.function, p.dim, p.instance_seed));

  struct Job {
    std::size_t problem, algorithm, run;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < problems.size(); ++p)
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
      for (std::size_t r = 0; r < cfg.runs; ++r) jobs.push_back({p, a, r});

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex write_mutex;
  std::exception_ptr io_failure;

  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      const ProblemSpec& ps = cfg.problems[job.problem];
      const AlgorithmEntry& alg = cfg.algorithms[job.algorithm];
      RunRecord& rec = records[k];
      rec.problem = ps.id();
      rec.dim = ps.dim;
      rec.algorithm = alg.label;
      rec.mode = alg.mode.name();
      rec.run_index = job.run;
      rec.seed = derive_seed(cfg.master_seed, rec.problem, rec.algorithm, rec.mode, rec.run_index);
      try {
        rec.result = execute(problems[job.problem], alg, cfg.budget.resolve(ps.dim), rec.seed);
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.error = e.what();
        continue;
      }
      if (!cfg.write_traces) continue;
      std::lock_guard lock(write_mutex);
      try {
        write_trace(rec, trace_dir / trace_file_name(rec));
      } catch (...) {
        if (!io_failure) io_failure = std::current_exception();
      }
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(
      cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads, 1, std::max<std::size_t>(1, jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (io_failure) std::rethrow_exception(io_failure);
  return records;
}

// ---------------------------------------------------------------------------
// Analysis and output

struct SummaryRow {
  std::string problem;
  std::size_t dim = 0;
  std::string algorithm;
  std::string mode;
  CellSummary stats{std::nan(""), std::nan("")};  // NaN when no run succeeded
  std::size_t runs = 0;                           // successful runs
};

struct PairwiseRow {
  std::string problem;
  std::string a;  // "algorithm/mode"
  std::string b;
  RankSumResult test;
};

namespace detail {

inline std::vector<double> cell_errors(const std::vector<RunRecord>& records, const std::string& problem,
                                       const std::string& algorithm, const std::string& mode) {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.ok && r.problem == problem && r.algorithm == algorithm && r.mode == mode) out.push_back(r.final_error());
  return out;
}

}  // namespace detail

/// One row per (problem, algorithm) in configuration order.
inline std::vector<SummaryRow> summarize_cells(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  std::vector<SummaryRow> rows;
  for (const auto& p : cfg.problems) {
    for (const auto& a : cfg.algorithms) {
      SummaryRow row{p.id(), p.dim, a.label, a.mode.name()};
      const auto errors = detail::cell_errors(records, row.problem, row.algorithm, row.mode);
      row.runs = errors.size();
      if (!errors.empty()) row.stats = summarize(errors);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Rank-sum test for every unordered pair of algorithms on each problem.
/// Pairs where either cell has fewer than three successful runs are skipped.
inline std::vector<PairwiseRow> compare_cells(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  std::vector<PairwiseRow> rows;
  for (const auto& p : cfg.problems) {
    for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
      for (std::size_t j = i + 1; j < cfg.algorithms.size(); ++j) {
        const auto& a = cfg.algorithms[i];
        const auto& b = cfg.algorithms[j];
        const auto ea = detail::cell_errors(records, p.id(), a.label, a.mode.name());
        const auto eb = detail::cell_errors(records, p.id(), b.label, b.mode.name());
        if (ea.size() < 3 || eb.size() < 3) continue;
        rows.push_back({p.id(), a.label + "/" + a.mode.name(), b.label + "/" + b.mode.name(),
                        wilcoxon_rank_sum(ea, eb, cfg.alpha)});
      }
    }
  }
  return rows;
}

/// Writes summary.csv, pairwise.csv and runs.csv (per-run final errors).
inline void emit_outputs(const std::vector<RunRecord>& records, const std::vector<SummaryRow>& summary,
                         const std::vector<PairwiseRow>& pairs, const std::filesystem::path& out_dir) {
  detail::ensure_writable_dir(out_dir);
  {
    const auto path = out_dir / "summary.csv";
    auto out = detail::open_output(path);
    out << "problem,dim,algorithm,mode,mean_error,std_dev,runs\n";
    for (const auto& r : summary) {
      out << r.problem << ',' << r.dim << ',' << r.algorithm << ',' << r.mode << ',' << format_sci(r.stats.mean)
          << ',' << format_sci(r.stats.std_dev) << ',' << r.runs << '\n';
    }
    detail::close_output(out, path);
  }
  {
    const auto path = out_dir / "pairwise.csv";
    auto out = detail::open_output(path);
    out << "problem,algA,algB,W,p,verdict\n";
    for (const auto& r : pairs) {
      out << r.problem << ',' << r.a << ',' << r.b << ',' << format_sci(r.test.W) << ',' << format_sci(r.test.p)
          << ',' << verdict_symbol(r.test.verdict) << '\n';
    }
    detail::close_output(out, path);
  }
  {
    const auto path = out_dir / "runs.csv";
    auto out = detail::open_output(path);
    out << "problem,dim,algorithm,mode,run,seed,status,final_error,fes_used\n";
    for (const auto& r : records) {
      out << r.problem << ',' << r.dim << ',' << r.algorithm << ',' << r.mode << ',' << r.run_index << ',' << r.seed
          << ',' << (r.ok ? "ok" : "failed") << ',' << (r.ok ? format_sci(r.final_error()) : "nan") << ','
          << (r.ok ? r.result.fes_used : 0) << '\n';
    }
    detail::close_output(out, path);
  }
  const bool any_failed = std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return !r.ok; });
  if (any_failed) {
    const auto path = out_dir / "failures.txt";
    auto out = detail::open_output(path);
    for (const auto& r : records)
      if (!r.ok) out << r.problem << ' ' << r.algorithm << '/' << r.mode << " r" << r.run_index << ": " << r.error << '\n';
    detail::close_output(out, path);
  }
}

// ---------------------------------------------------------------------------
// Reading runs.csv back

struct RunsTableRow {
  std::string problem, algorithm, mode;
  bool ok = false;
  double final_error = 0.0;
};

inline std::vector<RunsTableRow> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<RunsTableRow> rows;
  std::string line;
  std::getline(in, line);  // header
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 9) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    RunsTableRow r{cols[0], cols[2], cols[3], cols[6] == "ok", 0.0};
    if (r.ok) r.final_error = std::stod(cols[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Final errors of the cell "problem/algorithm/mode" from a runs table.
inline std::vector<double> select_cell(const std::vector<RunsTableRow>& rows, std::string_view cell) {
  const auto first = cell.find('/');
  const auto last = cell.rfind('/');
  if (first == std::string_view::npos || first == last)
    throw ConfigError("cell spec must be problem/algorithm/mode: " + std::string(cell));
  const std::string problem(cell.substr(0, first));
  const std::string algorithm(cell.substr(first + 1, last - first - 1));
  const std::string mode(cell.substr(last + 1));
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.ok && r.problem == problem && r.algorithm == algorithm && r.mode == mode) out.push_back(r.final_error);
  if (out.empty()) throw ConfigError("no successful runs for cell " + std::string(cell));
  return out;
}

}  // namespace acs
