#pragma once

// Shifted/rotated benchmark suite. Every base satisfies f(0) = 0 and a
// problem evaluates base(R^T (x - o)), so its optimum sits at the shift o with
// value 0.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acs/errors.hpp"
#include "acs/linalg.hpp"
#include "acs/operators.hpp"
#include "acs/rng.hpp"

namespace acs {

using BaseFunction = std::function<double(std::span<const double>)>;

namespace bases {

inline double sphere(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

inline double elliptic(std::span<const double> z) {
  const std::size_t n = z.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = n > 1 ? 6.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    s += std::pow(10.0, e) * z[i] * z[i];
  }
  return s;
}

inline double bent_cigar(std::span<const double> z) {
  double s = z[0] * z[0];
  for (std::size_t i = 1; i < z.size(); ++i) s += 1e6 * z[i] * z[i];
  return s;
}

inline double discus(std::span<const double> z) {
  double s = 1e6 * z[0] * z[0];
  for (std::size_t i = 1; i < z.size(); ++i) s += z[i] * z[i];
  return s;
}

// Shifted by one so the minimum is at the origin.
inline double rosenbrock(std::span<const double> z) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double a = z[i] + 1.0;
    const double b = z[i + 1] + 1.0;
    s += 100.0 * (a * a - b) * (a * a - b) + (a - 1.0) * (a - 1.0);
  }
  return s;
}

inline double ackley(std::span<const double> z) {
  const double n = static_cast<double>(z.size());
  double sq = 0.0;
  double cs = 0.0;
  for (double v : z) {
    sq += v * v;
    cs += std::cos(2.0 * std::numbers::pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
}

inline double rastrigin(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v) + 10.0;
  return s;
}

inline double griewank(std::span<const double> z) {
  double s = 0.0;
  double p = 1.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    s += z[i] * z[i] / 4000.0;
    p *= std::cos(z[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return s - p + 1.0;
}

inline double schwefel_1_2(std::span<const double> z) {
  double s = 0.0;
  double partial = 0.0;
  for (double v : z) {
    partial += v;
    s += partial * partial;
  }
  return s;
}

}  // namespace bases

struct BaseInfo {
  std::string_view name;
  double (*fn)(std::span<const double>);
  std::size_t min_dim;
  std::string_view category;
};

inline std::span<const BaseInfo> base_catalog() {
  static const BaseInfo catalog[] = {
      {"sphere", bases::sphere, 1, "unimodal"},
      {"elliptic", bases::elliptic, 1, "unimodal"},
      {"bent_cigar", bases::bent_cigar, 1, "unimodal"},
      {"discus", bases::discus, 1, "unimodal"},
      {"schwefel_1_2", bases::schwefel_1_2, 1, "unimodal"},
      {"rosenbrock", bases::rosenbrock, 2, "multimodal"},
      {"ackley", bases::ackley, 1, "multimodal"},
      {"rastrigin", bases::rastrigin, 1, "multimodal"},
      {"griewank", bases::griewank, 1, "multimodal"},
  };
  return catalog;
}

inline const BaseInfo* find_base(std::string_view name) {
  for (const auto& b : base_catalog())
    if (b.name == name) return &b;
  return nullptr;
}

/// Evaluator for a named base function; throws InvalidArgument for unknown names.
inline BaseFunction make_base_function(std::string_view name) {
  const BaseInfo* info = find_base(name);
  if (!info) throw InvalidArgument("unknown base function: " + std::string(name));
  return info->fn;
}

/// Modified Gram-Schmidt on a matrix of standard normal draws. The projection
/// pass runs twice so the columns are orthonormal to working precision.
inline OrthonormalBasis random_rotation(std::size_t dim, Rng& rng) {
  if (dim == 0) throw InvalidArgument("random_rotation: dim must be >= 1");
  for (int attempt = 0; attempt < 16; ++attempt) {
    SquareMatrix q(dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) q(i, j) = rng.normal(0.0, 1.0);
    bool degenerate = false;
    for (std::size_t j = 0; j < dim && !degenerate; ++j) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < j; ++k) {
          double dot = 0.0;
          for (std::size_t i = 0; i < dim; ++i) dot += q(i, j) * q(i, k);
          for (std::size_t i = 0; i < dim; ++i) q(i, j) -= dot * q(i, k);
        }
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) norm += q(i, j) * q(i, j);
      norm = std::sqrt(norm);
      if (norm < 1e-8) {
        degenerate = true;
        break;
      }
      for (std::size_t i = 0; i < dim; ++i) q(i, j) /= norm;
    }
    if (!degenerate) return q;
  }
  throw NumericFailure("random_rotation: repeated rank-deficient draws");
}

class Problem {
 public:
  Problem(std::string name, std::string category, BaseFunction base, Vector shift, OrthonormalBasis rotation,
          SearchBounds bounds)
      : name_(std::move(name)),
        category_(std::move(category)),
        base_(std::move(base)),
        shift_(std::move(shift)),
        rotation_(std::move(rotation)),
        bounds_(std::move(bounds)) {
    detail::require_same(shift_.size(), rotation_.size(), "Problem shift/rotation");
    detail::require_same(shift_.size(), bounds_.dim(), "Problem shift/bounds");
  }

  double evaluate(std::span<const double> x) const {
    detail::require_same(x.size(), shift_.size(), "Problem::evaluate");
    Vector d(x.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = x[j] - shift_[j];
    if (identity_rotation_) return base_(d);
    return base_(multiply_transposed(rotation_, d));
  }

  const std::string& name() const noexcept { return name_; }
  const std::string& category() const noexcept { return category_; }
  std::size_t dim() const noexcept { return shift_.size(); }
  const SearchBounds& bounds() const noexcept { return bounds_; }
  const Vector& shift() const noexcept { return shift_; }
  const OrthonormalBasis& rotation() const noexcept { return rotation_; }
  double f_opt() const noexcept { return 0.0; }

 private:
  std::string name_;
  std::string category_;
  BaseFunction base_;
  Vector shift_;
  OrthonormalBasis rotation_;
  SearchBounds bounds_;
  bool identity_rotation_ = rotation_ == SquareMatrix::identity(rotation_.size());
};

/// evaluate(x) = base(R^T (x - shift)) on [-100, 100]^D.
inline Problem shift_rotate(std::string name, BaseFunction base, Vector shift, OrthonormalBasis rotation,
                            std::string category = "custom") {
  const std::size_t dim = shift.size();
  return Problem(std::move(name), std::move(category), std::move(base), std::move(shift), std::move(rotation),
                 SearchBounds::box(dim, -100.0, 100.0));
}

// ---------------------------------------------------------------------------
// Suite catalog

struct SuiteEntry {
  std::string name;
  std::string base;        // primary base function
  std::string second;      // composition partner, empty otherwise
  bool rotated;
  std::string category;
  std::size_t min_dim;
};

inline const std::vector<SuiteEntry>& suite_catalog() {
  static const std::vector<SuiteEntry> suite = [] {
    std::vector<SuiteEntry> s;
    for (const auto& b : base_catalog()) {
      s.push_back({"shifted_" + std::string(b.name), std::string(b.name), "", false,
                   std::string(b.category) + "/separable", b.min_dim});
    }
    for (const auto& b : base_catalog()) {
      if (b.name == "sphere") continue;
      s.push_back({"rotated_" + std::string(b.name), std::string(b.name), "", true, std::string(b.category),
                   b.min_dim});
    }
    s.push_back({"composition_rastrigin_elliptic", "rastrigin", "elliptic", true, "composition", 2});
    s.push_back({"composition_griewank_ackley", "griewank", "ackley", true, "composition", 2});
    return s;
  }();
  return suite;
}

inline const SuiteEntry* find_suite_entry(std::string_view name) {
  for (const auto& e : suite_catalog())
    if (e.name == name) return &e;
  return nullptr;
}

/// Builds a suite problem. Shift ~ U[-80, 80]^D and rotation are drawn from
/// a stream seeded by `instance_seed`, so an instance is fixed by (name, dim, seed).
inline Problem make_problem(std::string_view name, std::size_t dim, std::uint64_t instance_seed = 1) {
  const SuiteEntry* entry = find_suite_entry(name);
  if (!entry) throw InvalidArgument("unknown problem: " + std::string(name));
  if (dim < entry->min_dim)
    throw InvalidArgument("problem " + entry->name + " requires dim >= " + std::to_string(entry->min_dim));
  Rng rng(mix64(instance_seed ^ mix64(fnv1a64(name) ^ dim)));

  Vector shift(dim);
  for (double& v : shift) v = rng.uniform(-80.0, 80.0);
  OrthonormalBasis rot = entry->rotated ? random_rotation(dim, rng) : SquareMatrix::identity(dim);

  BaseFunction fn = make_base_function(entry->base);
  if (!entry->second.empty()) {
    // Equal-weight sum of two bases on the same transformed argument.
    BaseFunction g = make_base_function(entry->second);
    const double scale = entry->second == "elliptic" ? 1e-4 : 1.0;
    fn = [fn, g, scale](std::span<const double> z) { return 0.5 * fn(z) + 0.5 * scale * g(z); };
  }
  return Problem(std::string(name), entry->category, std::move(fn), std::move(shift), std::move(rot),
                 SearchBounds::box(dim, -100.0, 100.0));
}

struct ErrorValue {
  double raw = 0.0;
  double floored = 0.0;
};

inline constexpr double kErrorFloor = 1e-8;

/// f(best) - f*, with values below 1e-8 reported as 0.
inline ErrorValue function_error(double best_fitness, double f_opt) {
  const double raw = best_fitness - f_opt;
  if (raw < -1e-6) throw ImpossibleValue("function_error: best fitness below the known optimum");
  return {raw, raw < kErrorFloor ? 0.0 : raw};
}

}  // namespace acs
