#pragma once

// Per-individual probability of working in the Eigen frame, adapted with a
// reward/punishment rule driven by whether each offspring improved.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

enum class CoordinateSystem { Original, Eigen };

struct OutcomeRecord {
  CoordinateSystem system = CoordinateSystem::Original;
  bool improved = false;
};

struct SelectorParams {
  double epsilon = 0.1;  // reward ceiling
  double eta = 0.1;      // punishment coefficient

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidArgument("selector: epsilon must be in (0, 1]");
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("selector: eta must be in (0, 1)");
  }
};

inline CoordinateSystem choose_system(double p, double u) noexcept {
  return u <= p ? CoordinateSystem::Eigen : CoordinateSystem::Original;
}

/// r(x) = epsilon (1 - x) e^{-2x} on [0, 1].
inline double reward(double x, double epsilon) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("reward: x must lie in [0, 1]");
  return epsilon * (1.0 - x) * std::exp(-2.0 * x);
}

/// Reward/punishment step:
///   Eigen    better: p + r(p)       worse: p - eta r(p)
///   Original better: p - r(1 - p)   worse: p + eta r(1 - p)
/// The "worse" steps can overshoot when p is within eta*epsilon of a bound
/// (e.g. Original-worse at p = 0.995); the result is clamped to [0, 1]. Away
/// from the bounds the clamp is a no-op.
inline double update_probability(double p, const OutcomeRecord& outcome, const SelectorParams& params) {
  double next;
  if (outcome.system == CoordinateSystem::Eigen) {
    const double r = reward(p, params.epsilon);
    next = outcome.improved ? p + r : p - params.eta * r;
  } else {
    const double r = reward(1.0 - p, params.epsilon);
    next = outcome.improved ? p - r : p + params.eta * r;
  }
  return std::clamp(next, 0.0, 1.0);
}

inline bool classify_outcome_pso(double new_fitness, double pbest_fitness) noexcept {
  return new_fitness < pbest_fitness;
}

inline bool classify_outcome_de(double trial_fitness, double target_fitness) noexcept {
  return trial_fitness < target_fitness;
}

class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::size_t np, double initial = 0.5) : p_(np, initial) {}

  double operator[](std::size_t i) const { return p_[i]; }
  std::size_t size() const noexcept { return p_.size(); }
  std::span<const double> values() const noexcept { return p_; }

  void apply(std::size_t i, const OutcomeRecord& outcome, const SelectorParams& params) {
    p_[i] = update_probability(p_[i], outcome, params);
  }

  double mean() const;

 private:
  std::vector<double> p_;
};

inline double mean_probability(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("mean_probability: empty vector");
  return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
}

inline double ProbabilityVector::mean() const { return mean_probability(p_); }

}  // namespace acs
