#pragma once

// Baseline PSO/DE variants and the adaptive coordinate-system wrapper.
//
// A run owns its population, eigen frame, offspring archive, probability
// vector and RNG stream. Each generation:
//   1. per individual (index order): coordinate draw, operator draws, offspring
//   2. evaluate offspring
//   3. selection (DE) or pbest/gbest update (PSO, gbest synchronous)
//   4. archive push + frame refresh
//   5. probability updates
// AcosMode selects adaptive p, a fixed p, the archive-free ablation, or the
// plain baseline (no frame, no coordinate draw).

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acs/benchmarks.hpp"
#include "acs/coordinate.hpp"
#include "acs/errors.hpp"
#include "acs/linalg.hpp"
#include "acs/operators.hpp"
#include "acs/rng.hpp"
#include "acs/selector.hpp"

namespace acs {

template <class P>
concept Objective = requires(const P& p, std::span<const double> x) {
  { p.evaluate(x) } -> std::convertible_to<double>;
  { p.dim() } -> std::convertible_to<std::size_t>;
  { p.bounds() } -> std::convertible_to<const SearchBounds&>;
  { p.f_opt() } -> std::convertible_to<double>;
};

enum class Family { PsoW, PsoCf, Jde, Sade, Jade };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::PsoW: return "pso-w";
    case Family::PsoCf: return "pso-cf";
    case Family::Jde: return "jde";
    case Family::Sade: return "sade";
    case Family::Jade: return "jade";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
  for (Family f : {Family::PsoW, Family::PsoCf, Family::Jde, Family::Sade, Family::Jade})
    if (family_name(f) == s) return f;
  return std::nullopt;
}

inline bool is_pso(Family f) noexcept { return f == Family::PsoW || f == Family::PsoCf; }

// Source of the covariance behind the eigen frame.
enum class FrameEstimator {
  RankMuArchive,    // cumulative rank-mu update over the FIFO offspring archive
  WholePopulation,  // sample covariance of the current population
  BestFraction,     // sample covariance of the best fraction of the population
};

struct AcosParams {
  SelectorParams selector;
  double archive_factor = 3.0;  // archive capacity = factor * NP
  FrameEstimator estimator = FrameEstimator::RankMuArchive;
  double best_fraction = 0.5;   // BestFraction only
};

struct AlgorithmSpec {
  Family family = Family::Jade;
  std::size_t np = 0;  // 0: family default for the problem dimension

  // PSO
  double c1 = 2.0;
  double c2 = 2.0;
  double w_start = 0.9;
  double w_end = 0.4;
  double chi = 0.729;
  double velocity_clamp = 0.5;  // |v_j| <= velocity_clamp * (ub_j - lb_j)

  // jDE
  double tau1 = 0.1;
  double tau2 = 0.1;

  // SaDE
  std::size_t sade_lp = 50;

  // JADE
  double jade_p = 0.05;
  double jade_c = 0.1;
  double jade_archive_factor = 1.0;

  AcosParams coord;

  static AlgorithmSpec defaults(Family f) {
    AlgorithmSpec s;
    s.family = f;
    if (f == Family::PsoCf) s.c1 = s.c2 = 2.05;
    return s;
  }

  std::size_t resolved_np(std::size_t dim) const {
    if (np != 0) return np;
    return is_pso(family) ? std::max<std::size_t>(40, 2 * dim) : 100;
  }

  void validate(std::size_t dim) const {
    const std::size_t n = resolved_np(dim);
    if (n < 6) throw InvalidArgument("AlgorithmSpec: np must be >= 6");
    coord.selector.validate();
    if (!(coord.archive_factor > 0.0)) throw InvalidArgument("AlgorithmSpec: archive_factor must be positive");
    if (!(coord.best_fraction > 0.0 && coord.best_fraction <= 1.0))
      throw InvalidArgument("AlgorithmSpec: best_fraction must be in (0, 1]");
    if (!(tau1 >= 0.0 && tau1 <= 1.0 && tau2 >= 0.0 && tau2 <= 1.0))
      throw InvalidArgument("AlgorithmSpec: tau1/tau2 must be in [0, 1]");
    if (!(jade_p > 0.0 && jade_p <= 1.0)) throw InvalidArgument("AlgorithmSpec: jade_p must be in (0, 1]");
    if (!(jade_c >= 0.0 && jade_c <= 1.0)) throw InvalidArgument("AlgorithmSpec: jade_c must be in [0, 1]");
    if (jade_archive_factor < 0.0) throw InvalidArgument("AlgorithmSpec: jade_archive_factor must be >= 0");
    if (sade_lp == 0) throw InvalidArgument("AlgorithmSpec: sade_lp must be >= 1");
    if (!(velocity_clamp > 0.0)) throw InvalidArgument("AlgorithmSpec: velocity_clamp must be positive");
    if (family == Family::PsoCf && !(chi > 0.0)) throw InvalidArgument("AlgorithmSpec: chi must be positive");
  }
};

struct AcosMode {
  enum class Kind { Adaptive, FixedP, NoArchive, Baseline };
  Kind kind = Kind::Adaptive;
  double p = 0.5;  // FixedP only

  static AcosMode adaptive() { return {Kind::Adaptive, 0.5}; }
  static AcosMode no_archive() { return {Kind::NoArchive, 0.5}; }
  static AcosMode baseline() { return {Kind::Baseline, 0.0}; }
  static AcosMode fixed(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("AcosMode::fixed: p must be in [0, 1]");
    return {Kind::FixedP, p};
  }

  bool adapts() const noexcept { return kind == Kind::Adaptive || kind == Kind::NoArchive; }

  std::string name() const {
    switch (kind) {
      case Kind::Adaptive: return "adaptive";
      case Kind::NoArchive: return "noarchive";
      case Kind::Baseline: return "baseline";
      case Kind::FixedP: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "fixed%g", p);
        return buf;
      }
    }
    return "?";
  }
};

inline std::optional<AcosMode> parse_mode(std::string_view s) {
  if (s == "adaptive") return AcosMode::adaptive();
  if (s == "noarchive") return AcosMode::no_archive();
  if (s == "baseline") return AcosMode::baseline();
  if (s.starts_with("fixed")) {
    const std::string rest(s.substr(5));
    char* end = nullptr;
    const double p = std::strtod(rest.c_str(), &end);
    if (rest.empty() || end != rest.c_str() + rest.size() || !(p >= 0.0 && p <= 1.0)) return std::nullopt;
    return AcosMode::fixed(p);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parameter control of the DE baselines

struct JdeControl {
  double F = 0.5;
  double CR = 0.9;
};

/// With probability tau1, F <- U[0.1, 0.9]; with probability tau2, CR <- U[0, 1].
inline JdeControl jde_regenerate(JdeControl current, double tau1, double tau2, Rng& rng) {
  if (rng.uniform() < tau1) current.F = 0.1 + 0.8 * rng.uniform();
  if (rng.uniform() < tau2) current.CR = rng.uniform();
  return current;
}

inline double lehmer_mean(std::span<const double> v) {
  double num = 0.0;
  double den = 0.0;
  for (double x : v) {
    num += x * x;
    den += x;
  }
  return num / den;
}

class JadeAdaptation {
 public:
  explicit JadeAdaptation(double c = 0.1) : c_(c) {}

  /// Cauchy(mu_F, 0.1), redrawn while <= 0, truncated at 1.
  double sample_F(Rng& rng) const {
    for (int i = 0; i < 1000; ++i) {
      const double f = rng.cauchy(mu_F_, 0.1);
      if (f > 0.0) return std::min(f, 1.0);
    }
    return std::clamp(mu_F_, 1e-3, 1.0);
  }

  /// Normal(mu_CR, 0.1) clamped to [0, 1].
  double sample_CR(Rng& rng) const { return std::clamp(rng.normal(mu_CR_, 0.1), 0.0, 1.0); }

  void record_success(double F, double CR) {
    success_F_.push_back(F);
    success_CR_.push_back(CR);
  }

  void end_generation() {
    if (success_F_.empty()) return;
    mu_F_ = (1.0 - c_) * mu_F_ + c_ * lehmer_mean(success_F_);
    const double mean_cr =
        std::accumulate(success_CR_.begin(), success_CR_.end(), 0.0) / static_cast<double>(success_CR_.size());
    mu_CR_ = (1.0 - c_) * mu_CR_ + c_ * mean_cr;
    success_F_.clear();
    success_CR_.clear();
  }

  double mu_F() const noexcept { return mu_F_; }
  double mu_CR() const noexcept { return mu_CR_; }

 private:
  double c_;
  double mu_F_ = 0.5;
  double mu_CR_ = 0.5;
  std::vector<double> success_F_;
  std::vector<double> success_CR_;
};

/// JADE's archive of replaced parents; a full archive overwrites a random slot.
class ExternalArchive {
 public:
  explicit ExternalArchive(std::size_t capacity) : capacity_(capacity) {}

  void insert(const Vector& x, Rng& rng) {
    if (capacity_ == 0) return;
    if (items_.size() < capacity_) {
      items_.push_back(x);
    } else {
      items_[rng.index(capacity_)] = x;
    }
  }

  std::span<const Vector> items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::vector<Vector> items_;
};

/// SaDE strategy pool with success/failure learning over a sliding window.
class SadeMemory {
 public:
  static constexpr std::size_t kPoolSize = 4;
  static constexpr std::array<MutationStrategy, kPoolSize> kPool = {
      MutationStrategy::Rand1, MutationStrategy::RandToBest2, MutationStrategy::Rand2,
      MutationStrategy::CurrentToRand1};

  explicit SadeMemory(std::size_t learning_period) : lp_(learning_period) { crm_.fill(0.5); }

  std::array<double, kPoolSize> probabilities() const {
    std::array<double, kPoolSize> p;
    if (completed_ < lp_) {
      p.fill(1.0 / kPoolSize);
      return p;
    }
    std::array<double, kPoolSize> ns{}, nf{};
    for (const auto& g : success_window_)
      for (std::size_t k = 0; k < kPoolSize; ++k) ns[k] += static_cast<double>(g[k]);
    for (const auto& g : failure_window_)
      for (std::size_t k = 0; k < kPoolSize; ++k) nf[k] += static_cast<double>(g[k]);
    double total = 0.0;
    for (std::size_t k = 0; k < kPoolSize; ++k) {
      p[k] = (ns[k] + nf[k] > 0.0 ? ns[k] / (ns[k] + nf[k]) : 0.0) + 0.01;
      total += p[k];
    }
    for (double& v : p) v /= total;
    return p;
  }

  std::size_t sample_strategy(Rng& rng) const {
    const auto p = probabilities();
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < kPoolSize; ++k) {
      acc += p[k];
      if (u < acc) return k;
    }
    return kPoolSize - 1;
  }

  /// Normal(0.5, 0.3) restricted to (0, 2].
  static double sample_F(Rng& rng) {
    for (int i = 0; i < 100; ++i) {
      const double f = rng.normal(0.5, 0.3);
      if (f > 0.0 && f <= 2.0) return f;
    }
    return 0.5;
  }

  /// Normal(CRm_k, 0.1) redrawn until inside [0, 1]; clamped after 100 tries.
  double sample_CR(std::size_t k, Rng& rng) const {
    double cr = 0.0;
    for (int i = 0; i < 100; ++i) {
      cr = rng.normal(crm_[k], 0.1);
      if (cr >= 0.0 && cr <= 1.0) return cr;
    }
    return std::clamp(cr, 0.0, 1.0);
  }

  void record(std::size_t k, bool success, double cr) {
    if (success) {
      ++cur_success_[k];
      cur_cr_[k].push_back(cr);
    } else {
      ++cur_failure_[k];
    }
  }

  void end_generation() {
    success_window_.push_back(cur_success_);
    failure_window_.push_back(cur_failure_);
    cr_window_.push_back(cur_cr_);
    while (success_window_.size() > lp_) {
      success_window_.pop_front();
      failure_window_.pop_front();
      cr_window_.pop_front();
    }
    cur_success_.fill(0);
    cur_failure_.fill(0);
    for (auto& v : cur_cr_) v.clear();
    ++completed_;
    for (std::size_t k = 0; k < kPoolSize; ++k) {
      std::vector<double> all;
      for (const auto& g : cr_window_) all.insert(all.end(), g[k].begin(), g[k].end());
      if (all.empty()) continue;
      std::sort(all.begin(), all.end());
      const std::size_t m = all.size();
      crm_[k] = m % 2 ? all[m / 2] : 0.5 * (all[m / 2 - 1] + all[m / 2]);
    }
  }

  double cr_median(std::size_t k) const { return crm_[k]; }
  std::size_t completed_generations() const noexcept { return completed_; }

 private:
  std::size_t lp_;
  std::size_t completed_ = 0;
  std::array<double, kPoolSize> crm_{};
  std::array<std::size_t, kPoolSize> cur_success_{}, cur_failure_{};
  std::array<std::vector<double>, kPoolSize> cur_cr_;
  std::deque<std::array<std::size_t, kPoolSize>> success_window_, failure_window_;
  std::deque<std::array<std::vector<double>, kPoolSize>> cr_window_;
};

// ---------------------------------------------------------------------------
// Runs

struct TraceRow {
  std::size_t generation = 0;
  std::size_t fes = 0;
  double best_error = 0.0;  // floored
  double p_m = 0.0;
  std::size_t eigen_calls = 0;  // offspring produced in the Eigen frame this generation
};

struct RunResult {
  std::uint64_t seed = 0;
  std::size_t fes_used = 0;
  std::size_t generations = 0;
  double best_fitness = 0.0;
  Vector best_position;
  ErrorValue final_error;
  std::vector<TraceRow> trace;
  std::size_t eigen_calls = 0;
  std::size_t original_calls = 0;
};

struct GenerationView {
  std::size_t generation;
  std::size_t fes;
  const EigenFrame& frame;
  const Archive& archive;
  std::span<const double> probabilities;
  std::size_t eigen_calls;
};

using GenerationObserver = std::function<void(const GenerationView&)>;

template <Objective P>
class AcosRunner {
 public:
  AcosRunner(const AlgorithmSpec& spec, AcosMode mode, const P& problem, std::size_t budget, std::uint64_t seed)
      : spec_(spec),
        mode_(mode),
        problem_(problem),
        dim_(problem.dim()),
        np_(spec.resolved_np(problem.dim())),
        budget_(budget),
        seed_(seed),
        rng_(seed),
        archive_(mode.kind == AcosMode::Kind::NoArchive
                     ? np_
                     : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                    std::llround(spec.coord.archive_factor * static_cast<double>(np_))))),
        p_(np_, mode.kind == AcosMode::Kind::FixedP ? mode.p : 0.5),
        jade_(spec.jade_c),
        jade_archive_(static_cast<std::size_t>(std::llround(spec.jade_archive_factor * static_cast<double>(np_)))),
        sade_(spec.sade_lp) {
    spec_.validate(dim_);
    problem_.bounds().validate();
    if (budget_ < np_) throw InvalidArgument("run: budget must cover at least one population evaluation");

    const SearchBounds& b = problem_.bounds();
    Vector m0(dim_);
    for (std::size_t j = 0; j < dim_; ++j) m0[j] = rng_.uniform(b.lower[j], b.upper[j]);
    frame_ = EigenFrame::initial(std::move(m0));

    vmax_.resize(dim_);
    for (std::size_t j = 0; j < dim_; ++j) vmax_[j] = spec_.velocity_clamp * (b.upper[j] - b.lower[j]);

    x_.resize(np_);
    for (auto& x : x_) {
      x.resize(dim_);
      for (std::size_t j = 0; j < dim_; ++j) x[j] = rng_.uniform(b.lower[j], b.upper[j]);
    }
    f_.resize(np_);
    for (std::size_t i = 0; i < np_; ++i) f_[i] = evaluate(x_[i]);

    if (is_pso(spec_.family)) {
      swarm_.resize(np_);
      for (std::size_t i = 0; i < np_; ++i) {
        swarm_[i] = Particle{x_[i], Vector(dim_, 0.0), x_[i], f_[i], f_[i]};
      }
      update_gbest();
    } else {
      jde_.assign(np_, JdeControl{});
    }
    record_trace(0);
  }

  bool done() const noexcept { return fes_ >= budget_; }

  void set_observer(GenerationObserver obs) { observer_ = std::move(obs); }

  /// One generation; evaluates at most min(NP, remaining budget) offspring.
  void step() {
    if (done()) throw ContractViolation("step: evaluation budget exhausted");
    std::size_t eigen = 0;
    if (is_pso(spec_.family)) {
      eigen = step_pso();
    } else {
      eigen = step_de();
    }
    ++generation_;
    record_trace(eigen);
    if (observer_) observer_(GenerationView{generation_, fes_, frame_, archive_, p_.values(), eigen});
  }

  RunResult finish() const {
    RunResult r;
    r.seed = seed_;
    r.fes_used = fes_;
    r.generations = generation_;
    r.best_fitness = best_f_;
    r.best_position = best_x_;
    r.final_error = function_error(best_f_, problem_.f_opt());
    r.trace = trace_;
    r.eigen_calls = eigen_calls_;
    r.original_calls = original_calls_;
    return r;
  }

  const EigenFrame& frame() const noexcept { return frame_; }
  const Archive& archive() const noexcept { return archive_; }
  const ProbabilityVector& probabilities() const noexcept { return p_; }
  std::span<const Vector> positions() const noexcept { return x_; }
  std::span<const double> fitness() const noexcept { return f_; }
  std::span<const JdeControl> jde_controls() const noexcept { return jde_; }
  const ExternalArchive& jade_archive() const noexcept { return jade_archive_; }
  const JadeAdaptation& jade_adaptation() const noexcept { return jade_; }
  const SadeMemory& sade_memory() const noexcept { return sade_; }
  std::size_t fes_used() const noexcept { return fes_; }
  std::size_t generation() const noexcept { return generation_; }
  std::size_t np() const noexcept { return np_; }
  double best_fitness() const noexcept { return best_f_; }

 private:
  double evaluate(std::span<const double> x) {
    if (fes_ >= budget_) throw ContractViolation("evaluate: budget exhausted");
    const double f = problem_.evaluate(x);
    ++fes_;
    if (!std::isfinite(f)) throw EvaluationFailure("objective returned a non-finite value");
    if (f < best_f_) {
      best_f_ = f;
      best_x_.assign(x.begin(), x.end());
    }
    return f;
  }

  // Coordinate draw for individual i. Baseline never draws.
  std::optional<CoordinateSystem> decide(std::size_t i) {
    switch (mode_.kind) {
      case AcosMode::Kind::Baseline:
        return CoordinateSystem::Original;
      case AcosMode::Kind::FixedP: {
        const double u = rng_.uniform();
        if (mode_.p <= 0.0) return CoordinateSystem::Original;
        return choose_system(mode_.p, u);
      }
      case AcosMode::Kind::Adaptive:
      case AcosMode::Kind::NoArchive:
        return choose_system(p_[i], rng_.uniform());
    }
    return CoordinateSystem::Original;
  }

  std::size_t offspring_budget() const { return std::min(np_, budget_ - fes_); }

  std::size_t step_pso() {
    const std::size_t count = offspring_budget();
    VelocityScheme scheme = spec_.family == Family::PsoW
                                ? VelocityScheme{InertiaWeight{inertia_weight(static_cast<double>(fes_),
                                                                              static_cast<double>(budget_),
                                                                              spec_.w_start, spec_.w_end)}}
                                : VelocityScheme{Constriction{spec_.chi}};
    std::vector<std::optional<CoordinateSystem>> systems(count);
    Vector r1(dim_), r2(dim_);
    for (std::size_t i = 0; i < count; ++i) {
      systems[i] = decide(i);
      for (double& r : r1) r = rng_.uniform();
      for (double& r : r2) r = rng_.uniform();
      Particle& p = swarm_[i];
      p.velocity = *systems[i] == CoordinateSystem::Eigen
                       ? pso_velocity_eigen(p, gbest_, scheme, spec_.c1, spec_.c2, r1, r2, frame_.basis, vmax_)
                       : pso_velocity_original(p, gbest_, scheme, spec_.c1, spec_.c2, r1, r2, vmax_);
      pso_position_update(p, problem_.bounds());
    }

    std::vector<ArchiveEntry> offspring(count);
    std::vector<std::optional<OutcomeRecord>> outcomes(count);
    for (std::size_t i = 0; i < count; ++i) {
      Particle& p = swarm_[i];
      p.fitness = evaluate(p.position);
      const bool improved = classify_outcome_pso(p.fitness, p.pbest_fitness);
      if (improved) {
        p.pbest_fitness = p.fitness;
        p.pbest_position = p.position;
      }
      x_[i] = p.position;
      f_[i] = p.fitness;
      offspring[i] = ArchiveEntry{p.position, p.fitness};
      outcomes[i] = OutcomeRecord{*systems[i], improved};
    }
    update_gbest();
    return finish_generation(offspring, outcomes);
  }

  std::size_t step_de() {
    const std::size_t count = offspring_budget();
    const std::size_t best = static_cast<std::size_t>(std::min_element(f_.begin(), f_.end()) - f_.begin());

    std::vector<std::size_t> pbest_pool;
    if (spec_.family == Family::Jade) {
      std::vector<std::size_t> order(np_);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f_[a] < f_[b]; });
      const auto top = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(spec_.jade_p * static_cast<double>(np_))));
      pbest_pool.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(top, np_)));
    }

    std::vector<Vector> trials(count);
    std::vector<std::optional<CoordinateSystem>> systems(count);
    std::vector<double> used_F(count), used_CR(count);
    std::vector<std::size_t> used_strategy(count, 0);

    for (std::size_t i = 0; i < count; ++i) {
      systems[i] = decide(i);
      MutationStrategy strategy = MutationStrategy::Rand1;
      bool crossover = true;
      double F = 0.5;
      double CR = 0.9;
      switch (spec_.family) {
        case Family::Jde: {
          const JdeControl c = jde_regenerate(jde_[i], spec_.tau1, spec_.tau2, rng_);
          F = c.F;
          CR = c.CR;
          break;
        }
        case Family::Sade: {
          const std::size_t k = sade_.sample_strategy(rng_);
          used_strategy[i] = k;
          strategy = SadeMemory::kPool[k];
          F = SadeMemory::sample_F(rng_);
          if (strategy == MutationStrategy::CurrentToRand1) {
            crossover = false;
          } else {
            CR = sade_.sample_CR(k, rng_);
          }
          break;
        }
        case Family::Jade:
          strategy = MutationStrategy::CurrentToPBest1;
          F = jade_.sample_F(rng_);
          CR = jade_.sample_CR(rng_);
          break;
        default:
          break;
      }
      used_F[i] = F;
      used_CR[i] = CR;

      MutationInput in;
      in.population = x_;
      in.target = i;
      in.F = F;
      in.best = best;
      in.pbest_pool = pbest_pool;
      in.ext_archive = jade_archive_.items();
      const Vector mutant = de_mutate(strategy, in, rng_);

      Vector trial;
      if (crossover) {
        const CrossoverMask mask = make_crossover_mask(CR, dim_, rng_);
        trial = *systems[i] == CoordinateSystem::Eigen ? binomial_crossover_eigen(x_[i], mutant, mask, frame_.basis)
                                                       : binomial_crossover_original(x_[i], mutant, mask);
      } else {
        trial = mutant;
        systems[i].reset();
      }
      trials[i] = repair_bounds(trial, x_[i], problem_.bounds(), RepairMode::MidpointToParent);
    }

    std::vector<double> trial_f(count);
    for (std::size_t i = 0; i < count; ++i) trial_f[i] = evaluate(trials[i]);

    std::vector<ArchiveEntry> offspring(count);
    std::vector<std::optional<OutcomeRecord>> outcomes(count);
    for (std::size_t i = 0; i < count; ++i) {
      const bool improved = classify_outcome_de(trial_f[i], f_[i]);
      if (spec_.family == Family::Sade) sade_.record(used_strategy[i], improved, used_CR[i]);
      if (spec_.family == Family::Jade && improved) jade_.record_success(used_F[i], used_CR[i]);

      const DeIndividual target{x_[i], f_[i], jde_.empty() ? 0.0 : jde_[i].F, jde_.empty() ? 0.0 : jde_[i].CR};
      const DeIndividual trial{trials[i], trial_f[i], used_F[i], used_CR[i]};
      const DeIndividual& survivor = de_select(target, trial);
      if (&survivor == &trial) {
        if (spec_.family == Family::Jade) jade_archive_.insert(x_[i], rng_);
        x_[i] = trial.position;
        f_[i] = trial.fitness;
        if (!jde_.empty()) jde_[i] = JdeControl{trial.self_F, trial.self_CR};
      }
      offspring[i] = ArchiveEntry{trials[i], trial_f[i]};
      if (systems[i]) outcomes[i] = OutcomeRecord{*systems[i], improved};
    }
    if (spec_.family == Family::Jade) jade_.end_generation();
    if (spec_.family == Family::Sade) sade_.end_generation();
    return finish_generation(offspring, outcomes);
  }

  std::size_t finish_generation(std::span<const ArchiveEntry> offspring,
                                std::span<const std::optional<OutcomeRecord>> outcomes) {
    std::size_t eigen = 0;
    for (const auto& o : outcomes) {
      if (!o) continue;
      if (o->system == CoordinateSystem::Eigen) {
        ++eigen;
      } else {
        ++original_calls_;
      }
    }
    eigen_calls_ += eigen;

    if (mode_.kind != AcosMode::Kind::Baseline) {
      switch (spec_.coord.estimator) {
        case FrameEstimator::RankMuArchive:
          if (mode_.kind == AcosMode::Kind::NoArchive) archive_.clear();
          archive_.push(offspring);
          frame_ = refresh_frame(frame_, archive_);
          break;
        case FrameEstimator::WholePopulation:
          frame_ = install_covariance(frame_, estimate_covariance_whole_population(x_), frame_.mean);
          break;
        case FrameEstimator::BestFraction:
          frame_ = install_covariance(frame_, estimate_covariance_best_fraction(x_, f_, spec_.coord.best_fraction),
                                      frame_.mean);
          break;
      }
    }

    if (mode_.adapts()) {
      for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (outcomes[i]) p_.apply(i, *outcomes[i], spec_.coord.selector);
    }
    return eigen;
  }

  void update_gbest() {
    std::size_t best = 0;
    for (std::size_t i = 1; i < swarm_.size(); ++i)
      if (swarm_[i].pbest_fitness < swarm_[best].pbest_fitness) best = i;
    gbest_ = swarm_[best].pbest_position;
  }

  double current_pm() const {
    switch (mode_.kind) {
      case AcosMode::Kind::Baseline: return 0.0;
      case AcosMode::Kind::FixedP: return mode_.p;
      default: return p_.mean();
    }
  }

  void record_trace(std::size_t eigen) {
    trace_.push_back(TraceRow{generation_, fes_, function_error(best_f_, problem_.f_opt()).floored, current_pm(), eigen});
  }

  AlgorithmSpec spec_;
  AcosMode mode_;
  const P& problem_;
  std::size_t dim_;
  std::size_t np_;
  std::size_t budget_;
  std::uint64_t seed_;
  Rng rng_;

  EigenFrame frame_;
  Archive archive_;
  ProbabilityVector p_;
  Vector vmax_;

  std::vector<Vector> x_;
  std::vector<double> f_;
  std::vector<Particle> swarm_;
  Vector gbest_;
  std::vector<JdeControl> jde_;
  JadeAdaptation jade_;
  ExternalArchive jade_archive_;
  SadeMemory sade_;

  std::size_t fes_ = 0;
  std::size_t generation_ = 0;
  double best_f_ = std::numeric_limits<double>::infinity();
  Vector best_x_;
  std::vector<TraceRow> trace_;
  std::size_t eigen_calls_ = 0;
  std::size_t original_calls_ = 0;
  GenerationObserver observer_;
};

/// Initializes a run and iterates generations until the budget is spent.
template <Objective P>
RunResult run(const AlgorithmSpec& spec, AcosMode mode, const P& problem, std::size_t budget, std::uint64_t seed,
              GenerationObserver observer = {}) {
  AcosRunner<P> runner(spec, mode, problem, budget, seed);
  runner.set_observer(std::move(observer));
  while (!runner.done()) runner.step();
  return runner.finish();
}

}  // namespace acs
