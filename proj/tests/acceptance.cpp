// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Each criterion includes its wall-clock
// limit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "acs/acs.hpp"
#include "oracles.hpp"

using namespace acs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector random_vector(std::size_t n, Rng& rng, double lo = -10, double hi = 10) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

Particle random_particle(std::size_t n, Rng& rng) {
  return Particle{random_vector(n, rng), random_vector(n, rng, -3, 3), random_vector(n, rng), 0.0, 0.0};
}

VelocityScheme random_scheme(Rng& rng) {
  if (rng.uniform() < 0.5) return InertiaWeight{rng.uniform(0.4, 0.9)};
  return Constriction{constriction_factor(2.05, 2.05)};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("acs_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

AlgorithmEntry entry(Family f, AcosMode mode) {
  return AlgorithmEntry{std::string(family_name(f)), AlgorithmSpec::defaults(f), mode};
}

ExperimentConfig campaign(const std::string& function, std::vector<AlgorithmEntry> algs, std::size_t budget,
                          std::size_t runs, const std::string& tag) {
  ExperimentConfig cfg;
  cfg.problems = {ProblemSpec{function, 10, 1}};
  cfg.algorithms = std::move(algs);
  cfg.runs = runs;
  cfg.budget = Budget{budget, 0};
  cfg.master_seed = 1;
  cfg.out_dir = scratch(tag).string();
  cfg.threads = 0;
  cfg.write_traces = false;
  return cfg;
}

// Final errors for one cell, in run order. Floored unless raw is set.
std::vector<double> cell_errors(const std::vector<RunRecord>& records, const std::string& label, const AcosMode& mode,
                                bool raw = false) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.algorithm == label && r.mode == mode.name()) {
      if (!r.ok) throw std::runtime_error("run failed: " + r.error);
      out.push_back(raw ? r.result.final_error.raw : r.final_error());
    }
  }
  return out;
}

// 1. With B = I the Eigen operators reduce to the original ones bit for bit.
Outcome identity_reduction() {
  Rng rng(101);
  std::size_t mismatches = 0;
  const std::size_t trials = 10000;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.index(30);
    const auto id = SquareMatrix::identity(n);
    const auto p = random_particle(n, rng);
    const Vector g = random_vector(n, rng);
    const Vector r1 = random_vector(n, rng, 0, 1), r2 = random_vector(n, rng, 0, 1);
    const auto scheme = random_scheme(rng);
    const Vector vmax = t % 2 ? Vector(n, rng.uniform(0.5, 5.0)) : Vector{};
    if (pso_velocity_eigen(p, g, scheme, 2.0, 2.0, r1, r2, id, vmax) !=
        pso_velocity_original(p, g, scheme, 2.0, 2.0, r1, r2, vmax))
      ++mismatches;
    const Vector x = random_vector(n, rng), v = random_vector(n, rng);
    const auto mask = make_crossover_mask(rng.uniform(), n, rng);
    if (binomial_crossover_eigen(x, v, mask, id) != binomial_crossover_original(x, v, mask)) ++mismatches;
  }
  return {mismatches == 0, fmt("%zu random inputs per operator, %zu bitwise mismatches", trials, mismatches)};
}

// 2. Eigen operators with basis Q equal Q applied to the original operator
// evaluated in the rotated frame.
Outcome rotation_equivariance() {
  Rng rng(202);
  double worst = 0;
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.index(10);
    const auto q = random_rotation(n, rng);
    const auto p = random_particle(n, rng);
    const Vector g = random_vector(n, rng);
    const Vector r1 = random_vector(n, rng, 0, 1), r2 = random_vector(n, rng, 0, 1);
    const auto scheme = random_scheme(rng);
    const auto eig = pso_velocity_eigen(p, g, scheme, 2.0, 2.0, r1, r2, q);
    const Particle rotated{multiply_transposed(q, p.position), multiply_transposed(q, p.velocity),
                           multiply_transposed(q, p.pbest_position), 0.0, 0.0};
    const auto ref = multiply(q, pso_velocity_original(rotated, multiply_transposed(q, g), scheme, 2.0, 2.0, r1, r2));
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(eig[j] - ref[j]));

    const Vector x = random_vector(n, rng), v = random_vector(n, rng);
    const auto mask = make_crossover_mask(rng.uniform(), n, rng);
    const auto ceig = binomial_crossover_eigen(x, v, mask, q);
    const auto cref =
        multiply(q, binomial_crossover_original(multiply_transposed(q, x), multiply_transposed(q, v), mask));
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(ceig[j] - cref[j]));
  }
  return {worst <= 1e-12, fmt("%zu rotations, max deviation %.3e (tol 1e-12)", trials, worst)};
}

// 3. Every refreshed frame of a 500-generation run stays orthonormal and PSD.
Outcome frame_integrity() {
  const auto prob = make_problem("rotated_elliptic", 10);
  const auto spec = AlgorithmSpec::defaults(Family::Jade);
  const std::size_t np = spec.resolved_np(10);
  const std::size_t generations = 500;
  std::size_t frames = 0;
  double worst_orth = 0, min_eig = INFINITY;
  const auto res = run(spec, AcosMode::adaptive(), prob, np * (generations + 1), 3, [&](const GenerationView& v) {
    ++frames;
    worst_orth = std::max(worst_orth, orthonormality_error(v.frame.basis));
    min_eig = std::min(min_eig, symmetric_eigendecompose(v.frame.covariance).eigenvalues.back());
  });
  const bool ok = res.generations == generations && frames == generations && worst_orth <= 1e-9 && min_eig >= -1e-9;
  return {ok, fmt("%zu frames, max |B^T B - I| %.3e, min eigenvalue %.3e", frames, worst_orth, min_eig)};
}

// 4. Recombination weights, effective mass and learning rate.
Outcome weight_algebra() {
  double worst_sum = 0;
  bool decreasing = true, mass_ok = true;
  for (std::size_t mu = 1; mu <= 200; ++mu) {
    const auto w = compute_weights(mu);
    double sum = 0;
    for (std::size_t i = 0; i < mu; ++i) {
      sum += w[i];
      if (i && !(w[i] < w[i - 1])) decreasing = false;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    const double m = effective_mass(w);
    if (!(m >= 1.0 - 1e-12 && m <= static_cast<double>(mu) + 1e-12)) mass_ok = false;
  }
  // Independent hand computation for mu = 2, D = 10.
  const double a = std::log(2.5), b = std::log(2.5) - std::log(2.0);
  const double w0 = a / (a + b), w1 = b / (a + b);
  const double mu_eff_hand = 1.0 / (w0 * w0 + w1 * w1);
  const double mu_eff = effective_mass(compute_weights(2));
  const double c_mu = learning_rate(mu_eff, 10);
  bool rate_ok = std::abs(mu_eff - mu_eff_hand) <= 1e-12 && std::abs(mu_eff - 1.4597) <= 1e-4 &&
                 std::abs(c_mu - 0.004866) <= 1e-6 && learning_rate(1e9, 3) == 1.0;
  for (std::size_t d = 1; d <= 50; ++d) {
    for (double m : {1.0, 2.5, 7.0, 30.0}) rate_ok = rate_ok && learning_rate(m, d) == std::min(1.0, m / (3.0 * d * d));
  }
  const bool ok = worst_sum <= 1e-12 && decreasing && mass_ok && rate_ok;
  return {ok, fmt("max |sum - 1| %.2e, decreasing=%d, mass in [1, mu]=%d, mu_eff %.4f, c_mu %.6f", worst_sum,
                  decreasing, mass_ok, mu_eff, c_mu)};
}

// 5. Probability updates stay in [0, 1]; the punishment step is eta times the
// reward magnitude.
Outcome probability_closure() {
  const SelectorParams params{0.1, 0.1};
  Rng rng(505);
  const std::size_t sequences = 1000000, length = 100;
  std::size_t out_of_range = 0, worse_steps = 0, asym_violations = 0, clamped = 0;
  double worst_asym = 0;
  for (std::size_t s = 0; s < sequences; ++s) {
    double p = 0.5;
    for (std::size_t k = 0; k < length; ++k) {
      const auto sys = choose_system(p, rng.uniform());
      const bool improved = rng.uniform() < 0.5;
      const double next = update_probability(p, {sys, improved}, params);
      if (!(next >= 0.0 && next <= 1.0)) ++out_of_range;
      if (!improved) {
        ++worse_steps;
        // Reward magnitude recomputed by hand.
        const double x = sys == CoordinateSystem::Eigen ? p : 1.0 - p;
        const double r = params.epsilon * (1.0 - x) * std::exp(-2.0 * x);
        const double raw = sys == CoordinateSystem::Eigen ? p - params.eta * r : p + params.eta * r;
        if (raw < 0.0 || raw > 1.0) {
          ++clamped;
          if (std::abs(next - p) > params.eta * r) ++asym_violations;
        } else {
          const double dev = std::abs(std::abs(next - p) - params.eta * r);
          worst_asym = std::max(worst_asym, dev);
          if (dev > 1e-15) ++asym_violations;
        }
      }
      p = next;
    }
  }
  const bool ok = out_of_range == 0 && asym_violations == 0;
  return {ok, fmt("%zu sequences x %zu steps, %zu outside [0,1], %zu worse steps, max ||dp| - eta r| %.2e, "
                  "%zu clamped",
                  sequences, length, out_of_range, worse_steps, worst_asym, clamped)};
}

// 6. Adaptive frames improve both PSO variants on the rotated elliptic.
Outcome pso_improvement() {
  const auto cfg = campaign("rotated_elliptic",
                            {entry(Family::PsoW, AcosMode::adaptive()), entry(Family::PsoW, AcosMode::baseline()),
                             entry(Family::PsoCf, AcosMode::adaptive()), entry(Family::PsoCf, AcosMode::baseline())},
                            50000, 25, "pso");
  const auto records = run_experiment(cfg);
  std::string detail;
  bool ok = true;
  for (const char* label : {"pso-w", "pso-cf"}) {
    const auto acos = cell_errors(records, label, AcosMode::adaptive());
    const auto base = cell_errors(records, label, AcosMode::baseline());
    const double ma = median(acos), mb = median(base);
    const double p = rank_sum_less_p(acos, base);
    ok = ok && ma < mb && p < 0.05;
    if (!detail.empty()) detail += "; ";
    detail += fmt("%s median %.3e vs %.3e, one-sided p %.2e", label, ma, mb, p);
  }
  return {ok, detail};
}

// 7. ACoS-JADE solves the shifted sphere.
Outcome sphere_solved() {
  const auto cfg = campaign("shifted_sphere", {entry(Family::Jade, AcosMode::adaptive())}, 100000, 25, "sphere");
  const auto errors = cell_errors(run_experiment(cfg), "jade", AcosMode::adaptive());
  std::size_t zero = 0;
  double worst = 0;
  for (double e : errors) {
    zero += e == 0.0;
    worst = std::max(worst, e);
  }
  return {zero >= 24, fmt("%zu of %zu runs at floored error 0, worst %.3e", zero, errors.size(), worst)};
}

// 8. Adaptive mode beats the ablated variants.
Outcome ablation_ordering() {
  const std::vector<AcosMode> others{AcosMode::no_archive(), AcosMode::fixed(0.5), AcosMode::fixed(0.0),
                                     AcosMode::fixed(1.0)};
  std::vector<AlgorithmEntry> algs{entry(Family::Jade, AcosMode::adaptive())};
  for (const auto& m : others) algs.push_back(entry(Family::Jade, m));
  const auto records = run_experiment(campaign("rotated_elliptic", algs, 50000, 25, "ablation"));
  const double adaptive = median(cell_errors(records, "jade", AcosMode::adaptive()));
  std::size_t inversions = 0;
  std::string detail = fmt("adaptive %.3e (raw %.2e);", adaptive,
                           median(cell_errors(records, "jade", AcosMode::adaptive(), true)));
  for (const auto& m : others) {
    const double med = median(cell_errors(records, "jade", m));
    inversions += adaptive > med;
    detail += fmt(" %s %.3e (raw %.2e);", m.name().c_str(), med, median(cell_errors(records, "jade", m, true)));
  }
  detail += fmt(" inversions %zu", inversions);
  return {inversions <= 1, detail};
}

// 9. The Eigen probability rises on a rotated landscape and falls on a
// separable one.
Outcome pm_direction() {
  double medians[2];
  const char* functions[2] = {"rotated_elliptic", "shifted_rastrigin"};
  for (int k = 0; k < 2; ++k) {
    const auto cfg = campaign(functions[k], {entry(Family::Jade, AcosMode::adaptive())}, 100000, 25, functions[k]);
    std::vector<double> late;
    for (const auto& r : run_experiment(cfg)) {
      if (!r.ok) throw std::runtime_error("run failed: " + r.error);
      const auto& trace = r.result.trace;
      const std::size_t gens = trace.size() - 1;  // row 0 is the initial population
      const std::size_t tail = std::max<std::size_t>(1, gens / 10);
      double sum = 0;
      for (std::size_t g = trace.size() - tail; g < trace.size(); ++g) sum += trace[g].p_m;
      late.push_back(sum / static_cast<double>(tail));
    }
    medians[k] = median(late);
  }
  const bool ok = medians[0] > 0.55 && medians[1] < 0.50;
  return {ok, fmt("late p_m median %.4f on rotated_elliptic (> 0.55), %.4f on shifted_rastrigin (< 0.50)",
                  medians[0], medians[1])};
}

// 10. Rank-sum p-values against exhaustive enumeration.
Outcome rank_sum_oracle() {
  Rng rng(1010);
  double worst = 0, worst_normal = 0;
  std::size_t cases = 0;
  for (std::size_t n1 = 1; n1 < 10; ++n1) {
    for (std::size_t n2 = 1; n1 + n2 <= 10; ++n2) {
      for (int t = 0; t < 200; ++t) {
        std::vector<double> a(n1), b(n2);
        // Few levels force ties; some trials use continuous data.
        const double levels = t % 4 == 0 ? 0.0 : static_cast<double>(1 + rng.index(5));
        auto draw = [&](double shift) { return levels == 0.0 ? rng.uniform() + shift : std::floor(rng.uniform(0, levels)); };
        const double shift = rng.uniform(0, 1);
        for (double& v : a) v = draw(0.0);
        for (double& v : b) v = draw(shift);
        const double truth = oracle::enumerate_rank_sum_p(a, b);
        worst = std::max(worst, std::abs(rank_sum_exact_p(a, b) - truth));
        if (n1 >= 3 && n2 >= 3) worst = std::max(worst, std::abs(wilcoxon_rank_sum(a, b).p - truth));
        worst_normal = std::max(worst_normal, std::abs(rank_sum_normal_p(a, b) - truth));
        ++cases;
      }
    }
  }
  return {worst <= 0.03, fmt("%zu samples, max |p - enumeration| %.3e (tol 0.03); normal approximation alone %.3e",
                             cases, worst, worst_normal)};
}

// 11. Thread count never changes the summary, and FE accounting is exact.
Outcome determinism_and_accounting() {
  std::string texts[2];
  const std::size_t threads[2] = {1, 8};
  for (int k = 0; k < 2; ++k) {
    auto cfg = campaign("rotated_rastrigin",
                        {entry(Family::Jade, AcosMode::adaptive()), entry(Family::PsoW, AcosMode::fixed(0.5)),
                         entry(Family::Sade, AcosMode::no_archive())},
                        5000, 5, "threads" + std::to_string(threads[k]));
    cfg.problems.push_back(ProblemSpec{"rotated_elliptic", 5, 1});
    cfg.threads = threads[k];
    const auto records = run_experiment(cfg);
    emit_outputs(records, summarize_cells(cfg, records), compare_cells(cfg, records), cfg.out_dir);
    texts[k] = oracle::slurp(fs::path(cfg.out_dir) / "summary.csv");
  }
  const bool identical = !texts[0].empty() && texts[0] == texts[1];

  std::size_t runs = 0, mismatches = 0;
  const auto prob = make_problem("rotated_ackley", 10);
  for (Family f : {Family::PsoW, Family::PsoCf, Family::Jde, Family::Sade, Family::Jade}) {
    for (const auto& mode : {AcosMode::adaptive(), AcosMode::baseline(), AcosMode::no_archive(), AcosMode::fixed(1.0)}) {
      for (std::size_t budget : {100u, 999u, 4321u, 20000u}) {
        oracle::CountingObjective obj{prob};
        const auto res = run(AlgorithmSpec::defaults(f), mode, obj, budget, 11);
        ++runs;
        mismatches += res.fes_used != obj.calls || res.fes_used != budget;
      }
    }
  }
  return {identical && mismatches == 0,
          fmt("summary.csv identical at 1 and 8 threads: %s (%zu bytes); %zu counted runs, %zu FE mismatches",
              identical ? "yes" : "no", texts[0].size(), runs, mismatches)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "identity-basis reduction", 5, identity_reduction},
      {2, "rotation equivariance", 10, rotation_equivariance},
      {3, "eigen-frame integrity", 30, frame_integrity},
      {4, "weight and learning-rate algebra", 1, weight_algebra},
      {5, "probability closure and asymmetry", 10, probability_closure},
      {6, "ACoS improves PSO", 120, pso_improvement},
      {7, "unimodal solvability", 60, sphere_solved},
      {8, "ablation ordering", 300, ablation_ordering},
      {9, "p_m adaptation direction", 180, pm_direction},
      {10, "rank-sum oracle equivalence", 10, rank_sum_oracle},
      {11, "determinism and FE accounting", 60, determinism_and_accounting},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s [%d] %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.limit_s, in_time ? "" : ", over time");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
