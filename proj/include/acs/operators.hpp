#pragma once

// PSO and DE variation operators in both coordinate systems.
//
// The original-frame operators are written in their diagonal-matrix form
// (x + S (v - x), c * (R d)) so that the Eigen-frame versions, which replace
// each diagonal W by B W B^T, reduce to them bit for bit when B = I.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "acs/errors.hpp"
#include "acs/linalg.hpp"
#include "acs/rng.hpp"

namespace acs {

struct SearchBounds {
  Vector lower;
  Vector upper;

  static SearchBounds box(std::size_t dim, double lo, double hi) { return {Vector(dim, lo), Vector(dim, hi)}; }

  std::size_t dim() const noexcept { return lower.size(); }

  void validate() const {
    detail::require_same(lower.size(), upper.size(), "SearchBounds");
    for (std::size_t j = 0; j < lower.size(); ++j)
      if (!(lower[j] < upper[j])) throw InvalidArgument("SearchBounds: lower must be < upper");
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t j = 0; j < x.size(); ++j)
      if (x[j] < lower[j] || x[j] > upper[j]) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// PSO

struct Particle {
  Vector position;
  Vector velocity;
  Vector pbest_position;
  double pbest_fitness = 0.0;
  double fitness = 0.0;
};

struct InertiaWeight {
  double w;
};
struct Constriction {
  double chi;
};
using VelocityScheme = std::variant<InertiaWeight, Constriction>;

/// chi = 2 / |2 - phi - sqrt(phi^2 - 4 phi)|, phi = c1 + c2 (> 4).
inline double constriction_factor(double c1, double c2) {
  const double phi = c1 + c2;
  if (!(phi > 4.0)) throw InvalidArgument("constriction_factor: c1 + c2 must exceed 4");
  return 2.0 / std::abs(2.0 - phi - std::sqrt(phi * phi - 4.0 * phi));
}

/// Linear inertia schedule from w_start to w_end over the evaluation budget.
inline double inertia_weight(double fes_used, double fes_max, double w_start = 0.9, double w_end = 0.4) {
  return w_start - (w_start - w_end) * (fes_used / fes_max);
}

/// |v_j| <= vmax_j; an empty vmax disables the clamp.
inline void clamp_velocity(Vector& v, std::span<const double> vmax) {
  if (vmax.empty()) return;
  detail::require_same(v.size(), vmax.size(), "clamp_velocity");
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::clamp(v[j], -vmax[j], vmax[j]);
}

namespace detail {

inline Vector combine_velocity(const Particle& p, const VelocityScheme& scheme, double c1, double c2,
                               std::span<const double> cognitive, std::span<const double> social,
                               std::span<const double> vmax) {
  const std::size_t n = p.velocity.size();
  Vector v(n);
  if (const auto* iw = std::get_if<InertiaWeight>(&scheme)) {
    for (std::size_t j = 0; j < n; ++j) v[j] = iw->w * p.velocity[j] + c1 * cognitive[j] + c2 * social[j];
  } else {
    const double chi = std::get<Constriction>(scheme).chi;
    for (std::size_t j = 0; j < n; ++j) v[j] = chi * (p.velocity[j] + c1 * cognitive[j] + c2 * social[j]);
  }
  clamp_velocity(v, vmax);
  return v;
}

inline void check_particle(const Particle& p, std::span<const double> gbest, std::span<const double> r1,
                           std::span<const double> r2) {
  const std::size_t n = p.position.size();
  require_same(p.velocity.size(), n, "particle velocity");
  require_same(p.pbest_position.size(), n, "particle pbest");
  require_same(gbest.size(), n, "gbest");
  require_same(r1.size(), n, "r1");
  require_same(r2.size(), n, "r2");
}

inline Vector difference(std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
  return d;
}

}  // namespace detail

/// Velocity update in the original frame:
///   inertia:      v' = w v + c1 R1 (pbest - x) + c2 R2 (gbest - x)
///   constriction: v' = chi [v + c1 R1 (pbest - x) + c2 R2 (gbest - x)]
inline Vector pso_velocity_original(const Particle& p, std::span<const double> gbest, const VelocityScheme& scheme,
                                    double c1, double c2, std::span<const double> r1, std::span<const double> r2,
                                    std::span<const double> vmax = {}) {
  detail::check_particle(p, gbest, r1, r2);
  Vector cog = detail::difference(p.pbest_position, p.position);
  Vector soc = detail::difference(gbest, p.position);
  for (std::size_t j = 0; j < cog.size(); ++j) {
    cog[j] = r1[j] * cog[j];
    soc[j] = r2[j] * soc[j];
  }
  return detail::combine_velocity(p, scheme, c1, c2, cog, soc, vmax);
}

/// Same update with each R_k replaced by B R_k B^T. The inertia term is untouched.
inline Vector pso_velocity_eigen(const Particle& p, std::span<const double> gbest, const VelocityScheme& scheme,
                                 double c1, double c2, std::span<const double> r1, std::span<const double> r2,
                                 const OrthonormalBasis& b, std::span<const double> vmax = {}) {
  detail::check_particle(p, gbest, r1, r2);
  const Vector cog = eigen_transform(r1, b, detail::difference(p.pbest_position, p.position));
  const Vector soc = eigen_transform(r2, b, detail::difference(gbest, p.position));
  return detail::combine_velocity(p, scheme, c1, c2, cog, soc, vmax);
}

// ---------------------------------------------------------------------------
// Bound handling

enum class RepairMode { ClampZeroVelocity, MidpointToParent };

/// MidpointToParent: a violated coordinate moves halfway from the parent to
/// the bound. ClampZeroVelocity: clamp to the bound (callers zero velocity).
inline Vector repair_bounds(std::span<const double> x, std::span<const double> parent, const SearchBounds& bounds,
                            RepairMode mode) {
  detail::require_same(x.size(), bounds.dim(), "repair_bounds");
  Vector out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double lb = bounds.lower[j];
    const double ub = bounds.upper[j];
    if (out[j] >= lb && out[j] <= ub) continue;
    if (mode == RepairMode::ClampZeroVelocity) {
      out[j] = std::clamp(out[j], lb, ub);
    } else {
      out[j] = out[j] < lb ? 0.5 * (parent[j] + lb) : 0.5 * (parent[j] + ub);
    }
  }
  return out;
}

/// x' = x + v', clamped to the box; clamped velocity components are zeroed.
inline Vector pso_position_update(Particle& p, const SearchBounds& bounds) {
  detail::require_same(p.position.size(), p.velocity.size(), "pso_position_update");
  Vector moved(p.position.size());
  for (std::size_t j = 0; j < moved.size(); ++j) moved[j] = p.position[j] + p.velocity[j];
  Vector repaired = repair_bounds(moved, p.position, bounds, RepairMode::ClampZeroVelocity);
  for (std::size_t j = 0; j < moved.size(); ++j)
    if (repaired[j] != moved[j]) p.velocity[j] = 0.0;
  p.position = repaired;
  return repaired;
}

// ---------------------------------------------------------------------------
// DE

struct DeIndividual {
  Vector position;
  double fitness = 0.0;
  double self_F = 0.5;   // jDE-managed
  double self_CR = 0.9;  // jDE-managed
};

enum class MutationStrategy {
  Rand1,
  Rand2,
  CurrentToBest1,
  RandToBest1,
  CurrentToPBest1,
  RandToBest2,     // x_i + F(x_best - x_i) + F(x_r1 - x_r2) + F(x_r3 - x_r4)
  CurrentToRand1,  // x_i + K(x_r1 - x_i) + F(x_r2 - x_r3), K ~ U[0,1); no crossover
};

struct MutationInput {
  std::span<const Vector> population;
  std::size_t target = 0;
  double F = 0.5;
  std::size_t best = 0;                      // CurrentToBest1 / RandToBest*
  std::span<const std::size_t> pbest_pool{};  // CurrentToPBest1
  std::span<const Vector> ext_archive{};      // CurrentToPBest1 second difference vector
};

/// Smallest population for which a strategy can draw its distinct indices.
inline std::size_t min_population(MutationStrategy s) {
  switch (s) {
    case MutationStrategy::Rand1: return 4;
    case MutationStrategy::Rand2: return 6;
    case MutationStrategy::CurrentToBest1: return 3;
    case MutationStrategy::RandToBest1: return 4;
    case MutationStrategy::CurrentToPBest1: return 3;
    case MutationStrategy::RandToBest2: return 5;
    case MutationStrategy::CurrentToRand1: return 4;
  }
  return 0;
}

/// `count` mutually distinct indices from [0, n), none equal to `exclude`,
/// drawn in order by rejection.
inline std::vector<std::size_t> distinct_indices(Rng& rng, std::size_t n, std::size_t count, std::size_t exclude) {
  if (count + 1 > n) throw InvalidArgument("distinct_indices: population too small");
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t r = rng.index(n);
    if (r == exclude || std::find(out.begin(), out.end(), r) != out.end()) continue;
    out.push_back(r);
  }
  return out;
}

inline Vector de_mutate(MutationStrategy strategy, const MutationInput& in, Rng& rng) {
  const auto& pop = in.population;
  const std::size_t np = pop.size();
  if (np < min_population(strategy)) throw InvalidArgument("de_mutate: population too small for strategy");
  if (in.target >= np) throw InvalidArgument("de_mutate: target index out of range");
  const Vector& xi = pop[in.target];
  const std::size_t n = xi.size();
  const double F = in.F;
  Vector v(n);

  switch (strategy) {
    case MutationStrategy::Rand1: {
      const auto r = distinct_indices(rng, np, 3, in.target);
      for (std::size_t j = 0; j < n; ++j) v[j] = pop[r[0]][j] + F * (pop[r[1]][j] - pop[r[2]][j]);
      break;
    }
    case MutationStrategy::Rand2: {
      const auto r = distinct_indices(rng, np, 5, in.target);
      for (std::size_t j = 0; j < n; ++j)
        v[j] = pop[r[0]][j] + F * (pop[r[1]][j] - pop[r[2]][j]) + F * (pop[r[3]][j] - pop[r[4]][j]);
      break;
    }
    case MutationStrategy::CurrentToBest1: {
      const auto r = distinct_indices(rng, np, 2, in.target);
      const Vector& xb = pop[in.best];
      for (std::size_t j = 0; j < n; ++j) v[j] = xi[j] + F * (xb[j] - xi[j]) + F * (pop[r[0]][j] - pop[r[1]][j]);
      break;
    }
    case MutationStrategy::RandToBest1: {
      const auto r = distinct_indices(rng, np, 3, in.target);
      const Vector& xb = pop[in.best];
      for (std::size_t j = 0; j < n; ++j)
        v[j] = pop[r[0]][j] + F * (xb[j] - pop[r[0]][j]) + F * (pop[r[1]][j] - pop[r[2]][j]);
      break;
    }
    case MutationStrategy::RandToBest2: {
      const auto r = distinct_indices(rng, np, 4, in.target);
      const Vector& xb = pop[in.best];
      for (std::size_t j = 0; j < n; ++j)
        v[j] = xi[j] + F * (xb[j] - xi[j]) + F * (pop[r[0]][j] - pop[r[1]][j]) + F * (pop[r[2]][j] - pop[r[3]][j]);
      break;
    }
    case MutationStrategy::CurrentToRand1: {
      const auto r = distinct_indices(rng, np, 3, in.target);
      const double k = rng.uniform();
      for (std::size_t j = 0; j < n; ++j)
        v[j] = xi[j] + k * (pop[r[0]][j] - xi[j]) + F * (pop[r[1]][j] - pop[r[2]][j]);
      break;
    }
    case MutationStrategy::CurrentToPBest1: {
      if (in.pbest_pool.empty()) throw InvalidArgument("de_mutate: empty pbest pool");
      const Vector& xp = pop[in.pbest_pool[rng.index(in.pbest_pool.size())]];
      const auto r1 = distinct_indices(rng, np, 1, in.target)[0];
      // Second vector from population ∪ archive, distinct from target and r1.
      const std::size_t total = np + in.ext_archive.size();
      std::size_t r2;
      do {
        r2 = rng.index(total);
      } while (r2 == in.target || r2 == r1);
      const Vector& x2 = r2 < np ? pop[r2] : in.ext_archive[r2 - np];
      for (std::size_t j = 0; j < n; ++j) v[j] = xi[j] + F * (xp[j] - xi[j]) + F * (pop[r1][j] - x2[j]);
      break;
    }
  }
  return v;
}

struct CrossoverMask {
  std::vector<char> flags;
  std::size_t forced_index = 0;  // 0-based

  std::size_t dim() const noexcept { return flags.size(); }

  DiagonalWeights as_weights() const {
    DiagonalWeights w(flags.size());
    for (std::size_t j = 0; j < flags.size(); ++j) w[j] = flags[j] ? 1.0 : 0.0;
    return w;
  }
};

/// Draws j_rand first, then one uniform per coordinate.
inline CrossoverMask make_crossover_mask(double cr, std::size_t dim, Rng& rng) {
  if (dim == 0) throw InvalidArgument("make_crossover_mask: dim must be >= 1");
  CrossoverMask m;
  m.forced_index = rng.index(dim);
  m.flags.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) m.flags[j] = rng.uniform() <= cr ? 1 : 0;
  m.flags[m.forced_index] = 1;
  return m;
}

/// u = x + S (v - x), S = diag(mask).
inline Vector binomial_crossover_original(std::span<const double> x, std::span<const double> v,
                                          const CrossoverMask& mask) {
  detail::require_same(x.size(), v.size(), "binomial_crossover_original");
  detail::require_same(x.size(), mask.dim(), "binomial_crossover_original mask");
  const DiagonalWeights s = mask.as_weights();
  Vector u(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) u[j] = x[j] + s[j] * (v[j] - x[j]);
  return u;
}

/// u = x + B S B^T (v - x).
inline Vector binomial_crossover_eigen(std::span<const double> x, std::span<const double> v, const CrossoverMask& mask,
                                       const OrthonormalBasis& b) {
  detail::require_same(x.size(), v.size(), "binomial_crossover_eigen");
  detail::require_same(x.size(), mask.dim(), "binomial_crossover_eigen mask");
  const Vector step = eigen_transform(mask.as_weights(), b, detail::difference(v, x));
  Vector u(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) u[j] = x[j] + step[j];
  return u;
}

/// One-to-one selection; the trial wins ties.
inline const DeIndividual& de_select(const DeIndividual& target, const DeIndividual& trial) {
  return trial.fitness <= target.fitness ? trial : target;
}

}  // namespace acs
