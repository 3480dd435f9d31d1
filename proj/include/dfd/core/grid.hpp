#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dfd/core/require.hpp"

namespace dfd {

/// n evenly spaced points from a to b inclusive (n >= 2), or {a} for n = 1.
inline std::vector<double> linspace(double a, double b, int n) {
  DFD_REQUIRE(n >= 1, "linspace: need at least one point, got ", n);
  std::vector<double> g(static_cast<std::size_t>(n));
  if (n == 1) {
    g[0] = a;
    return g;
  }
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
  g.front() = a;
  g.back() = b;
  return g;
}

/// n logarithmically spaced points from a to b inclusive, a, b > 0.
inline std::vector<double> logspace(double a, double b, int n) {
  DFD_REQUIRE(a > 0 && b > 0, "logspace: endpoints must be positive, got ", a, ", ", b);
  std::vector<double> g = linspace(std::log(a), std::log(b), n);
  for (double& x : g) x = std::exp(x);
  return g;
}

/// Geometric schedule 2^-k for k = k_lo..k_hi (decreasing values).
inline std::vector<double> pow2_schedule(int k_lo, int k_hi) {
  DFD_REQUIRE(k_lo <= k_hi, "pow2_schedule: empty range ", k_lo, "..", k_hi);
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
  for (int k = k_lo; k <= k_hi; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

/// Symmetric grid of n points over [-scale, scale]; odd n puts a point at 0.
inline std::vector<double> symmetric_grid(double scale, int n) {
  return linspace(-scale, scale, n);
}

/// Sorted union of a base grid and extra points (deduplicated), keeping only
/// points inside [lo, hi].
inline std::vector<double> merge_points(std::vector<double> base,
                                        const std::vector<double>& extra,
                                        double lo, double hi) {
  for (double x : extra)
    if (x >= lo && x <= hi) base.push_back(x);
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());
  return base;
}

}  // namespace dfd
