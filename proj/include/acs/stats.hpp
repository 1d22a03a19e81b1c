#pragma once

// Wilcoxon rank-sum test and per-cell summaries.
//
// Small samples (n1 + n2 <= kExactRankSumLimit) use the exact permutation
// distribution of the rank sum conditional on the observed ties, computed by
// a subset-sum recursion over doubled midranks. Larger samples use the normal
// approximation with tie-corrected variance and a continuity correction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "acs/errors.hpp"

namespace acs {

enum class Verdict { Better, Worse, Similar };

inline std::string_view verdict_symbol(Verdict v) {
  switch (v) {
    case Verdict::Better: return "+";
    case Verdict::Worse: return "-";
    case Verdict::Similar: return "≈";
  }
  return "?";
}

struct RankSumResult {
  double W = 0.0;  // rank sum of the first sample
  double p = 1.0;  // two-sided
  Verdict verdict = Verdict::Similar;
};

inline constexpr std::size_t kExactRankSumLimit = 40;

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Midranks (1-based) of the concatenation a ++ b.
inline std::vector<double> pooled_midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

// sum over tie groups of (t^3 - t)
inline double tie_term(std::span<const double> ranks) {
  std::vector<double> r(ranks.begin(), ranks.end());
  std::sort(r.begin(), r.end());
  double s = 0.0;
  for (std::size_t i = 0; i < r.size();) {
    std::size_t j = i;
    while (j < r.size() && r[j] == r[i]) ++j;
    const double t = static_cast<double>(j - i);
    s += t * t * t - t;
    i = j;
  }
  return s;
}

inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Distribution of the doubled rank sum of n1 items drawn from `doubled`
// without replacement, as counts indexed by the sum.
inline std::vector<double> rank_sum_counts(std::span<const std::int64_t> doubled, std::size_t n1) {
  const std::int64_t total = std::accumulate(doubled.begin(), doubled.end(), std::int64_t{0});
  const std::size_t width = static_cast<std::size_t>(total) + 1;
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(width, 0.0));
  ways[0][0] = 1.0;
  std::size_t seen = 0;
  for (std::int64_t r : doubled) {
    ++seen;
    for (std::size_t k = std::min(n1, seen); k >= 1; --k) {
      const auto& prev = ways[k - 1];
      auto& cur = ways[k];
      for (std::size_t s = width; s-- > static_cast<std::size_t>(r);) cur[s] += prev[s - static_cast<std::size_t>(r)];
    }
  }
  return ways[n1];
}

}  // namespace detail

/// Two-sided p-value by normal approximation (tie-corrected variance,
/// continuity correction 0.5).
inline double rank_sum_normal_p(std::span<const double> a, std::span<const double> b) {
  const auto ranks = pooled_midranks(a, b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  const double w = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double mean = n1 * (n + 1.0) / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - detail::tie_term(ranks) / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, 2.0 * detail::normal_upper_tail(z));
}

/// Two-sided p-value from the exact conditional permutation distribution.
inline double rank_sum_exact_p(std::span<const double> a, std::span<const double> b) {
  const auto ranks = pooled_midranks(a, b);
  std::vector<std::int64_t> doubled(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) doubled[i] = std::llround(2.0 * ranks[i]);
  const std::int64_t w2 = std::accumulate(doubled.begin(), doubled.begin() + static_cast<std::ptrdiff_t>(a.size()),
                                          std::int64_t{0});
  const auto n = static_cast<std::int64_t>(ranks.size());
  const std::int64_t mean2 = static_cast<std::int64_t>(a.size()) * (n + 1);  // 2 * n1 (N+1) / 2
  const std::int64_t dev = std::abs(w2 - mean2);
  const auto counts = detail::rank_sum_counts(doubled, a.size());
  double extreme = 0.0;
  double total = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (counts[s] == 0.0) continue;
    total += counts[s];
    if (std::abs(static_cast<std::int64_t>(s) - mean2) >= dev) extreme += counts[s];
  }
  return std::min(1.0, extreme / total);
}

/// One-sided p-value for the alternative "a tends to be smaller than b".
inline double rank_sum_less_p(std::span<const double> a, std::span<const double> b) {
  const auto ranks = pooled_midranks(a, b);
  const std::size_t n_total = ranks.size();
  if (n_total <= kExactRankSumLimit) {
    std::vector<std::int64_t> doubled(n_total);
    for (std::size_t i = 0; i < n_total; ++i) doubled[i] = std::llround(2.0 * ranks[i]);
    const std::int64_t w2 = std::accumulate(doubled.begin(), doubled.begin() + static_cast<std::ptrdiff_t>(a.size()),
                                            std::int64_t{0});
    const auto counts = detail::rank_sum_counts(doubled, a.size());
    double lower = 0.0;
    double total = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (static_cast<std::int64_t>(s) <= w2) lower += counts[s];
    }
    return lower / total;
  }
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  const double w = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - detail::tie_term(ranks) / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = (n1 * (n + 1.0) / 2.0 - w - 0.5) / std::sqrt(var);
  return detail::normal_upper_tail(z);
}

/// Two-sided rank-sum comparison of error samples a and b. Verdict is "+"
/// when a's median is smaller and p < alpha, "-" when larger and p < alpha.
inline RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() < 3 || b.size() < 3) throw InvalidArgument("wilcoxon_rank_sum: each sample needs at least 3 values");
  RankSumResult out;
  const auto ranks = pooled_midranks(a, b);
  out.W = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double first = a[0];
  const bool constant = std::all_of(a.begin(), a.end(), [&](double v) { return v == first; }) &&
                        std::all_of(b.begin(), b.end(), [&](double v) { return v == first; });
  if (constant) return out;
  out.p = a.size() + b.size() <= kExactRankSumLimit ? rank_sum_exact_p(a, b) : rank_sum_normal_p(a, b);
  if (out.p < alpha) {
    const double ma = median({a.begin(), a.end()});
    const double mb = median({b.begin(), b.end()});
    if (ma < mb) out.verdict = Verdict::Better;
    if (ma > mb) out.verdict = Verdict::Worse;
  }
  return out;
}

struct CellSummary {
  double mean = 0.0;
  double std_dev = 0.0;  // sample (n - 1); 0 for a single value
};

inline CellSummary summarize(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("summarize: empty cell");
  const double n = static_cast<double>(errors.size());
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  if (errors.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double e : errors) ss += (e - mean) * (e - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace acs
