#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace samplan {

// Pairwise summation. Deterministic for a given input order regardless of
// thread count (always evaluated serially); this is the reduction the spec
// pins for bit-exact summaries.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 32) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return std::nan("");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

inline double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return std::nan("");
  double m = mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(x.size() - 1));
}

// Monte Carlo standard error of the mean.
inline double mc_se(std::span<const double> x) {
  if (x.size() < 2) return std::nan("");
  return sample_sd(x) / std::sqrt(static_cast<double>(x.size()));
}

// Type-7 percentile (linear interpolation between order statistics) on
// presorted data; q in [0,1].
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::nan("");
  if (sorted.size() == 1) return sorted[0];
  double h = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo >= sorted.size() - 1) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double percentile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  return percentile_sorted(x, q);
}

}  // namespace samplan
