#pragma once

// Small dense linear algebra for the eigen-frame machinery: a row-major square
// matrix, a cyclic Jacobi eigensolver for symmetric input, and the
// B * diag(w) * B^T * z kernel shared by every rotated operator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

using Vector = std::vector<double>;

// Diagonal of a diagonal matrix, stored densely.
using DiagonalWeights = std::vector<double>;

class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static SquareMatrix diagonal(std::span<const double> d) {
    SquareMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    SquareMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      detail::require_same(rows[i].size(), rows.size(), "SquareMatrix::from_rows (non-square)");
      std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * m.n_));
    }
    return m;
  }

  static SquareMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<std::vector<double>> r;
    for (const auto& row : rows) r.emplace_back(row);
    return from_rows(r);
  }

  std::size_t size() const noexcept { return n_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  std::span<const double> data() const noexcept { return data_; }

  Vector column(std::size_t j) const {
    Vector c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Columns are unit-norm and mutually orthogonal.
using OrthonormalBasis = SquareMatrix;

inline SquareMatrix transpose(const SquareMatrix& a) {
  SquareMatrix t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) t(j, i) = a(i, j);
  return t;
}

inline SquareMatrix multiply(const SquareMatrix& a, const SquareMatrix& b) {
  detail::require_same(a.size(), b.size(), "multiply");
  const std::size_t n = a.size();
  SquareMatrix c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// A * x
inline Vector multiply(const SquareMatrix& a, std::span<const double> x) {
  detail::require_same(a.size(), x.size(), "matrix-vector product");
  Vector y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

// A^T * x
inline Vector multiply_transposed(const SquareMatrix& a, std::span<const double> x) {
  detail::require_same(a.size(), x.size(), "transposed matrix-vector product");
  Vector y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < a.size(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

inline double max_abs(const SquareMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double frobenius_norm(const SquareMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs_difference(const SquareMatrix& a, const SquareMatrix& b) {
  detail::require_same(a.size(), b.size(), "max_abs_difference");
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

// ||B^T B - I||_max
inline double orthonormality_error(const OrthonormalBasis& b) {
  const std::size_t n = b.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(k, i) * b(k, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Returns (C + C^T) / 2.
inline SquareMatrix symmetrize(const SquareMatrix& c) {
  const std::size_t n = c.size();
  SquareMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = c(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (c(i, j) + c(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

struct EigenDecomposition {
  OrthonormalBasis basis;      // eigenvectors as columns
  Vector eigenvalues;          // non-increasing, raw (may carry tiny negative round-off)
  DiagonalWeights scales;      // sqrt(max(eigenvalue, 0))
};

struct JacobiOptions {
  double relative_tolerance = 1e-12;
  int max_sweeps = 100;
  double symmetry_tolerance = 1e-9;
};

/// Cyclic Jacobi eigensolver. Input must be symmetric (call symmetrize first).
/// Eigenvectors are sign-normalized so that each column's largest-magnitude
/// entry is positive.
inline EigenDecomposition symmetric_eigendecompose(const SquareMatrix& c, const JacobiOptions& opts = {}) {
  const std::size_t n = c.size();
  if (!all_finite(c.data())) throw ContractViolation("symmetric_eigendecompose: non-finite entry");
  const double scale = std::max(1.0, max_abs(c));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(c(i, j) - c(j, i)) > opts.symmetry_tolerance * scale)
        throw ContractViolation("symmetric_eigendecompose: matrix is not symmetric");

  SquareMatrix a = symmetrize(c);
  SquareMatrix v = SquareMatrix::identity(n);
  const double target = opts.relative_tolerance * frobenius_norm(a);

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_diagonal() > target) {
    if (sweep++ >= opts.max_sweeps) throw NumericFailure("symmetric_eigendecompose: no convergence");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = cs * akp - sn * akq;
          a(k, q) = sn * akp + cs * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = cs * apk - sn * aqk;
          a(q, k) = sn * apk + cs * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = cs * vkp - sn * vkq;
          v(k, q) = sn * vkp + cs * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{SquareMatrix(n), Vector(n), DiagonalWeights(n)};
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    std::size_t lead = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(lead, src))) lead = k;
    const double sign = v(lead, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.basis(k, col) = sign * v(k, src);
    out.eigenvalues[col] = a(src, src);
    out.scales[col] = std::sqrt(std::max(0.0, a(src, src)));
  }
  return out;
}

/// B * (w ∘ (B^T z)). Two matrix-vector products; the D x D product
/// B diag(w) B^T is never formed.
inline Vector eigen_transform(std::span<const double> w, const OrthonormalBasis& b, std::span<const double> z) {
  detail::require_same(w.size(), b.size(), "eigen_transform weights");
  detail::require_same(z.size(), b.size(), "eigen_transform vector");
  Vector y = multiply_transposed(b, z);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= w[i];
  return multiply(b, y);
}

}  // namespace acs
