#pragma once

// Eigen coordinate system maintenance: a FIFO archive of evaluated offspring,
// log-rank weights, the rank-mu covariance estimator and the cumulative
// covariance update that feeds the eigendecomposition. Two population-only
// estimators (whole population, best fraction) are provided as alternatives.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "acs/errors.hpp"
#include "acs/linalg.hpp"

namespace acs {

struct ArchiveEntry {
  Vector position;
  double fitness = 0.0;
};

class Archive {
 public:
  explicit Archive(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidArgument("Archive: capacity must be positive");
  }

  /// Appends the batch in order, then drops the oldest entries until the
  /// archive fits its capacity.
  void push(std::span<const ArchiveEntry> batch) {
    for (const auto& e : batch) {
      if (!std::isfinite(e.fitness)) throw ContractViolation("Archive::push: non-finite fitness");
      entries_.push_back(e);
    }
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  void clear() noexcept { entries_.clear(); }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::deque<ArchiveEntry>& entries() const noexcept { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<ArchiveEntry> entries_;
};

/// Log-rank recombination weights, normalized to sum to one:
///   w_i = (ln(mu + 0.5) - ln i) / sum_j (ln(mu + 0.5) - ln j)
inline std::vector<double> compute_weights(std::size_t mu) {
  if (mu == 0) throw InvalidArgument("compute_weights: mu must be >= 1");
  std::vector<double> w(mu);
  const double top = std::log(static_cast<double>(mu) + 0.5);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu; ++i) {
    w[i] = top - std::log(static_cast<double>(i + 1));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Variance effective selection mass, (sum w_i^2)^-1.
inline double effective_mass(std::span<const double> weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return 1.0 / s;
}

/// c_mu = min(1, mu_eff / (3 D^2)).
inline double learning_rate(double mu_eff, std::size_t dim) {
  const double d = static_cast<double>(dim);
  return std::min(1.0, mu_eff / (3.0 * d * d));
}

/// Number of archive members used by the rank-mu update.
inline std::size_t selection_size(std::size_t archive_size) {
  return std::max<std::size_t>(1, archive_size / 2);
}

/// Indices of the mu best entries, ascending by fitness; ties keep insertion order.
inline std::vector<std::size_t> ranked_selection(const Archive& archive) {
  if (archive.empty()) throw ContractViolation("ranked_selection: empty archive");
  const auto& e = archive.entries();
  std::vector<std::size_t> idx(e.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return e[a].fitness < e[b].fitness; });
  idx.resize(selection_size(e.size()));
  return idx;
}

/// Weighted mean of the mu best archive entries.
inline Vector update_mean(const Archive& archive) {
  if (archive.empty()) throw ContractViolation("update_mean: empty archive");
  const auto sel = ranked_selection(archive);
  const auto w = compute_weights(sel.size());
  const auto& e = archive.entries();
  Vector m(e[sel[0]].position.size(), 0.0);
  for (std::size_t k = 0; k < sel.size(); ++k) {
    const auto& x = e[sel[k]].position;
    detail::require_same(x.size(), m.size(), "update_mean");
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += w[k] * x[j];
  }
  return m;
}

/// Rank-mu estimator around the previous mean:
///   C_mu = sum_i w_i (a_i - m_prev)(a_i - m_prev)^T
inline SquareMatrix estimate_rank_mu(const Archive& archive, std::span<const double> m_prev) {
  if (archive.empty()) throw ContractViolation("estimate_rank_mu: empty archive");
  const auto sel = ranked_selection(archive);
  const auto w = compute_weights(sel.size());
  const std::size_t n = m_prev.size();
  SquareMatrix c(n);
  Vector d(n);
  for (std::size_t k = 0; k < sel.size(); ++k) {
    const auto& x = archive.entries()[sel[k]].position;
    detail::require_same(x.size(), n, "estimate_rank_mu");
    for (std::size_t j = 0; j < n; ++j) d[j] = x[j] - m_prev[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w[k] * d[i];
      for (std::size_t j = i; j < n; ++j) c(i, j) += wi * d[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  return c;
}

struct EigenFrame {
  SquareMatrix covariance;
  OrthonormalBasis basis;
  Vector mean;
  Vector eigenvalues;
  std::size_t generation = 0;

  /// C = B = I with the given starting mean.
  static EigenFrame initial(Vector m0) {
    const std::size_t n = m0.size();
    return EigenFrame{SquareMatrix::identity(n), SquareMatrix::identity(n), std::move(m0), Vector(n, 1.0), 0};
  }

  std::size_t dim() const noexcept { return mean.size(); }
};

/// (1 - c_mu) C + c_mu C_mu with c_mu = min(1, mu_eff / 3D^2).
inline SquareMatrix update_covariance(const EigenFrame& frame, const SquareMatrix& c_mu, double mu_eff) {
  detail::require_same(frame.covariance.size(), c_mu.size(), "update_covariance");
  if (!(mu_eff >= 1.0)) throw InvalidArgument("update_covariance: mu_eff must be >= 1");
  const double rate = learning_rate(mu_eff, frame.covariance.size());
  if (rate == 1.0) return c_mu;
  SquareMatrix out(c_mu.size());
  const auto& c = frame.covariance;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out(i, j) = (1.0 - rate) * c(i, j) + rate * c_mu(i, j);
  return out;
}

/// Re-decomposes a covariance into the frame and bumps the generation counter.
inline EigenFrame install_covariance(const EigenFrame& frame, SquareMatrix c, Vector new_mean) {
  EigenFrame next;
  next.covariance = symmetrize(c);
  auto eig = symmetric_eigendecompose(next.covariance);
  next.basis = std::move(eig.basis);
  next.eigenvalues = std::move(eig.eigenvalues);
  next.mean = std::move(new_mean);
  next.generation = frame.generation + 1;
  return next;
}

/// One rank-mu refresh: new mean, estimator around the stored mean,
/// cumulative update, eigendecomposition.
inline EigenFrame refresh_frame(const EigenFrame& frame, const Archive& archive) {
  if (archive.empty()) throw ContractViolation("refresh_frame: empty archive");
  Vector m_next = update_mean(archive);
  const SquareMatrix c_mu = estimate_rank_mu(archive, frame.mean);
  const double mu_eff = effective_mass(compute_weights(selection_size(archive.size())));
  return install_covariance(frame, update_covariance(frame, c_mu, mu_eff), std::move(m_next));
}

namespace detail {

inline SquareMatrix sample_covariance(std::span<const Vector* const> points) {
  const std::size_t n = points.front()->size();
  Vector mean(n, 0.0);
  for (const Vector* p : points) {
    require_same(p->size(), n, "sample_covariance");
    for (std::size_t j = 0; j < n; ++j) mean[j] += (*p)[j];
  }
  for (double& v : mean) v /= static_cast<double>(points.size());
  SquareMatrix c(n);
  Vector d(n);
  for (const Vector* p : points) {
    for (std::size_t j = 0; j < n; ++j) d[j] = (*p)[j] - mean[j];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) c(i, j) += d[i] * d[j];
  }
  const double denom = static_cast<double>(points.size() - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      c(i, j) /= denom;
      c(j, i) = c(i, j);
    }
  return c;
}

}  // namespace detail

/// Unbiased sample covariance of the whole population (divisor NP - 1).
inline SquareMatrix estimate_covariance_whole_population(std::span<const Vector> pop) {
  if (pop.size() < 2) throw InvalidArgument("estimate_covariance_whole_population: need at least 2 points");
  std::vector<const Vector*> ptrs;
  ptrs.reserve(pop.size());
  for (const auto& p : pop) ptrs.push_back(&p);
  return detail::sample_covariance(ptrs);
}

/// Sample covariance of the max(2, round(ps * NP)) best individuals.
inline SquareMatrix estimate_covariance_best_fraction(std::span<const Vector> positions, std::span<const double> fitness,
                                                      double ps) {
  detail::require_same(positions.size(), fitness.size(), "estimate_covariance_best_fraction");
  if (positions.size() < 2) throw InvalidArgument("estimate_covariance_best_fraction: need at least 2 points");
  if (!(ps > 0.0 && ps <= 1.0)) throw InvalidArgument("estimate_covariance_best_fraction: ps must be in (0, 1]");
  const std::size_t np = positions.size();
  const auto wanted = static_cast<std::size_t>(std::llround(ps * static_cast<double>(np)));
  const std::size_t count = std::min(np, std::max<std::size_t>(2, wanted));
  std::vector<std::size_t> idx(np);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
  std::vector<const Vector*> ptrs;
  for (std::size_t k = 0; k < count; ++k) ptrs.push_back(&positions[idx[k]]);
  return detail::sample_covariance(ptrs);
}

}  // namespace acs
