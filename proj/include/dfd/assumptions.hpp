#pragma once

// Report-style checkers for the three structural conditions a filter family
// can satisfy: "A" (reduction to a variational form: alpha-independent
// preimage shift plus a linear-damping growth bound), "B" (pointwise
// monotonicity in alpha plus a sqrt(alpha)-rate inner-region bound), and "C"
// (contraction bounds aligning the induced denoiser with fixed-point
// regularization). All checkers are report-only: failures are recorded as
// positive signed slack, never thrown.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dfd/core/grid.hpp"
#include "dfd/core/require.hpp"
#include "dfd/filters.hpp"
#include "dfd/prox.hpp"

namespace dfd {

struct AssumptionReport {
  std::string assumption_id;  // "A", "B", or "C"
  std::map<std::string, double> constants_used;
  std::string grid;  // human-readable description of the grids swept
  bool pass = false;
  double worst_case = 0.0;  // signed slack; <= 0 iff pass
  std::string notes;
};

namespace detail {

/// Symmetric grid over [-span, span] including the family's kink locations.
inline std::vector<double> breakpoint_aware_grid(const ScalarFilterFamily& f, double alpha,
                                                 double kappa, double span, int points) {
  std::vector<double> grid = linspace(-span, span, points);
  if (f.breakpoints) {
    for (double bp : f.breakpoints(alpha, kappa)) {
      for (double signed_bp : {bp, -bp}) {
        if (std::abs(signed_bp) <= span) grid.push_back(signed_bp);
      }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  return grid;
}

}  // namespace detail

/// Part one: the scaled preimage shift (phi_alpha(kappa,.)^{-1}(y) - y)/alpha
/// must not depend on alpha — tested by comparing interval endpoints at alpha
/// and 2 alpha on a y-grid (endpoint agreement within tol_shift). Part two:
/// inside the region |x| <= min phi^{-1}(c kappa), the filter must damp at
/// least as strongly as kappa^2/(kappa^2 + alpha b).
inline AssumptionReport check_assumption_A(const ScalarFilterFamily& f,
                                           const std::vector<double>& kappas,
                                           const std::vector<double>& alphas,
                                           const std::vector<double>& y_grid = linspace(-10.0,
                                                                                        10.0,
                                                                                        201)) {
  DFD_REQUIRE(!kappas.empty() && !alphas.empty(),
              "check_assumption_A: need nonempty kappa and alpha grids");
  constexpr double tol_shift = 1e-6;
  AssumptionReport rep;
  rep.assumption_id = "A";
  rep.grid = cat(kappas.size(), " kappas x ", alphas.size(), " alphas, ", y_grid.size(),
                 "-point y-grid, 101-point damping grid");

  double worst_shift = -tol_shift;  // signed: deviation - tol
  int compared_pairs = 0;
  for (double kappa : kappas) {
    for (double alpha : alphas) {
      if (alpha <= f.alpha_min || alpha > f.alpha_max) continue;
      if (2.0 * alpha > f.alpha_max) continue;  // partner value must stay valid
      const ScalarProx p1 = filter_slice(f, alpha, kappa);
      const ScalarProx p2 = filter_slice(f, 2.0 * alpha, kappa);
      ++compared_pairs;
      for (double y : y_grid) {
        const Interval i1 = prox_inverse(p1, y);
        const Interval i2 = prox_inverse(p2, y);
        if (i1.empty != i2.empty) {
          worst_shift = kInf;
          continue;
        }
        if (i1.empty) continue;  // both empty: shifts agree vacuously
        const double lo_dev = std::abs((i1.lo - y) / alpha - (i2.lo - y) / (2.0 * alpha));
        const double hi_dev = std::abs((i1.hi - y) / alpha - (i2.hi - y) / (2.0 * alpha));
        worst_shift = std::max(worst_shift, std::max(lo_dev, hi_dev) - tol_shift);
      }
    }
  }

  double worst_damping = 0.0;
  std::string damping_note;
  if (!f.constants.has_b() || !f.constants.has_c()) {
    worst_damping = kInf;
    damping_note = "no growth constants (b, c) declared; damping bound not checkable";
  } else {
    const double b = f.constants.b;
    const double c = f.constants.c;
    rep.constants_used["b"] = b;
    rep.constants_used["c"] = c;
    // one sampled alpha in the middle of the schedule
    double alpha_mid = alphas[alphas.size() / 2];
    alpha_mid = std::min(alpha_mid, f.alpha_max);
    for (double kappa : kappas) {
      const ScalarProx p = filter_slice(f, alpha_mid, kappa);
      const Interval pre = prox_inverse(p, c * kappa);
      if (pre.empty) {
        worst_damping = kInf;
        damping_note = cat("value ", c * kappa, " never attained at kappa = ", kappa);
        continue;
      }
      const double k2 = kappa * kappa;
      const double factor = k2 / (k2 + alpha_mid * b);
      for (double x : linspace(-pre.lo, pre.lo, 101)) {
        const double slack = 1e-9 * std::max(1.0, std::abs(x));
        worst_damping = std::max(
            worst_damping, std::abs(f.evaluate(alpha_mid, kappa, x)) - factor * std::abs(x) - slack);
      }
    }
    damping_note = damping_note.empty() ? cat("damping checked at alpha = ", alpha_mid)
                                        : damping_note;
  }

  rep.constants_used["tol_shift"] = tol_shift;
  rep.worst_case = std::max(worst_shift, worst_damping);
  rep.pass = rep.worst_case <= 0.0;
  rep.notes = cat("shift slack ", worst_shift, " over ", compared_pairs,
                  " alpha-pair slices; damping slack ", worst_damping, "; ", damping_note);
  return rep;
}

/// Part one: |phi_alpha(kappa, x)| must grow as alpha decreases, pointwise.
/// Part two: inside |x| <= d alpha / kappa the filter obeys the damping rate
/// |phi| <= (e kappa / sqrt(alpha)) |x|.
inline AssumptionReport check_assumption_B(const ScalarFilterFamily& f,
                                           const std::vector<double>& kappas,
                                           const std::vector<double>& alphas,
                                           const std::vector<double>& x_grid = linspace(-10.0,
                                                                                        10.0,
                                                                                        201)) {
  DFD_REQUIRE(!kappas.empty() && !alphas.empty(),
              "check_assumption_B: need nonempty kappa and alpha grids");
  AssumptionReport rep;
  rep.assumption_id = "B";
  rep.grid = cat(kappas.size(), " kappas x ", alphas.size(), " alphas, ", x_grid.size(),
                 "-point x-grid, 101-point inner-region grid");

  std::vector<double> decreasing = alphas;
  std::sort(decreasing.begin(), decreasing.end(), std::greater<double>());
  decreasing.erase(std::remove_if(decreasing.begin(), decreasing.end(),
                                  [&f](double a) { return a <= f.alpha_min || a > f.alpha_max; }),
                   decreasing.end());

  double worst_monotone = -kInf;
  for (double kappa : kappas) {
    for (double x : x_grid) {
      for (size_t i = 0; i + 1 < decreasing.size(); ++i) {
        const double larger_alpha = std::abs(f.evaluate(decreasing[i], kappa, x));
        const double smaller_alpha = std::abs(f.evaluate(decreasing[i + 1], kappa, x));
        const double slack = 1e-12 * std::max(1.0, std::abs(x));
        worst_monotone = std::max(worst_monotone, larger_alpha - smaller_alpha - slack);
      }
    }
  }

  double worst_rate = -kInf;
  std::string rate_note;
  if (!f.constants.has_d() || !f.constants.has_e()) {
    worst_rate = kInf;
    rate_note = "no inner-region constants (d, e) declared; rate bound not checkable";
  } else {
    const double d = f.constants.d;
    const double e = f.constants.e;
    rep.constants_used["d"] = d;
    rep.constants_used["e"] = e;
    for (double kappa : kappas) {
      for (double alpha : decreasing) {
        const double span = d * alpha / kappa;
        const double rate = e * kappa / std::sqrt(alpha);
        for (double x : linspace(-span, span, 101)) {
          const double slack = 1e-9 * std::max(1.0, std::abs(x));
          worst_rate = std::max(worst_rate,
                                std::abs(f.evaluate(alpha, kappa, x)) - rate * std::abs(x) - slack);
        }
      }
    }
    rate_note = "rate bound checked on the declared inner regions";
  }

  rep.worst_case = std::max(worst_monotone, worst_rate);
  rep.pass = rep.worst_case <= 0.0;
  rep.notes = cat("alpha-monotonicity slack ", worst_monotone, "; rate slack ", worst_rate, "; ",
                  rate_note);
  return rep;
}

namespace detail {

/// Empirical Lipschitz constant of one filter slice: maximum difference
/// quotient over adjacent points of a breakpoint-aware grid, plus fine-step
/// quotients around every node. A lower bound on the true constant;
/// piecewise-affine maps attain it once kinks are in the grid.
inline double empirical_lipschitz(const ScalarFilterFamily& f, double alpha, double kappa,
                                  double span, int points) {
  const std::vector<double> grid = breakpoint_aware_grid(f, alpha, kappa, span, points);
  double lip = 0.0;
  std::vector<double> values(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) values[i] = f.evaluate(alpha, kappa, grid[i]);
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    const double dx = grid[i + 1] - grid[i];
    if (dx <= 0.0) continue;
    lip = std::max(lip, std::abs(values[i + 1] - values[i]) / dx);
  }
  const double h = 1e-6 * std::max(1.0, span);
  for (size_t i = 0; i < grid.size(); ++i) {
    lip = std::max(lip, std::abs(f.evaluate(alpha, kappa, grid[i] + h) - values[i]) / h);
  }
  return lip;
}

struct ContractionSlack {
  double worst_upper = -kInf;  // empirical Lipschitz minus the declared cap
  double worst_lower = -kInf;  // required floor minus the observed response
  int premise_count = 0;       // slices where the floor's premise held
};

inline ContractionSlack contraction_slacks(const ScalarFilterFamily& f,
                                           const std::vector<double>& kappas,
                                           const std::vector<double>& alphas, double gamma,
                                           double capital_c,
                                           const std::function<double(double)>& ell_rule,
                                           double span, int points) {
  ContractionSlack out;
  for (double kappa : kappas) {
    const double g = gamma * kappa * kappa;
    for (double alpha : alphas) {
      if (alpha <= f.alpha_min || alpha > f.alpha_max) continue;
      const double ell = ell_rule(alpha);
      const double cap = g * ell / (1.0 - ell * (1.0 - g));
      const double lip = empirical_lipschitz(f, alpha, kappa, span, points);
      out.worst_upper = std::max(out.worst_upper, lip - cap - 1e-9);

      if (1.0 / (1.0 - ell) >= capital_c) {
        ++out.premise_count;
        // the premise makes u = 1 - C(1-ell) land in [0, 1]; the floor is the
        // response-side lower bound with the + denominator (lower bounds
        // transform through the step-size scaling with the opposite sign from
        // upper caps, as in the slope calculus used by the denoiser bounds)
        const double u = 1.0 - capital_c * (1.0 - ell);
        const double floor = g * u / (1.0 + u * (1.0 - g));
        for (double x : breakpoint_aware_grid(f, alpha, kappa, span, points)) {
          const double slack = 1e-9 * std::max(1.0, std::abs(x));
          out.worst_lower = std::max(out.worst_lower, floor * std::abs(x) -
                                                          std::abs(f.evaluate(alpha, kappa, x)) -
                                                          slack);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Part one: each slice's Lipschitz constant stays under the declared cap
/// gamma kappa^2 ell / (1 - ell (1 - gamma kappa^2)). Part two: whenever
/// 1/(1-ell_alpha) >= C, the response keeps a matching linear floor. When the
/// family declares no C, the smallest passing value is searched over a
/// logarithmic grid and reported.
inline AssumptionReport check_assumption_C(const ScalarFilterFamily& f,
                                           const std::vector<double>& kappas,
                                           const std::vector<double>& alphas, double gamma,
                                           double span = 10.0, int points = 201) {
  double kappa_max = 0.0;
  for (double k : kappas) kappa_max = std::max(kappa_max, k);
  DFD_REQUIRE(kappa_max > 0.0, "check_assumption_C: need at least one positive kappa");
  DFD_REQUIRE(gamma > 0.0 && gamma < 1.0 / (kappa_max * kappa_max),
              "check_assumption_C: gamma = ", gamma, " outside (0, 1/max kappa^2)");

  AssumptionReport rep;
  rep.assumption_id = "C";
  rep.grid = cat(kappas.size(), " kappas x ", alphas.size(), " alphas, ", points,
                 "-point breakpoint-aware grids over [-", span, ", ", span, "]");

  std::function<double(double)> ell_rule = f.lipschitz_rule;
  std::string ell_note = "declared contraction rule";
  if (!ell_rule) {
    ell_rule = [](double alpha) { return 1.0 / (1.0 + alpha); };
    ell_note = "no contraction rule declared; default 1/(1+alpha) used";
  }

  detail::ContractionSlack slacks;
  double capital_c = f.constants.C;
  std::string c_note;
  if (f.constants.has_C()) {
    slacks = detail::contraction_slacks(f, kappas, alphas, gamma, capital_c, ell_rule, span,
                                        points);
    c_note = "declared C";
  } else {
    // smallest C on a log grid for which the floor holds on the sampled slices
    bool found = false;
    for (double candidate : logspace(1.0, 1e8, 33)) {
      slacks = detail::contraction_slacks(f, kappas, alphas, gamma, candidate, ell_rule, span,
                                          points);
      if (slacks.worst_lower <= 0.0) {
        capital_c = candidate;
        found = true;
        break;
      }
    }
    if (!found) {
      capital_c = kInf;
      c_note = "no C on the search grid satisfies the floor";
    } else {
      c_note = cat("searched C (floor premise held on ", slacks.premise_count, " slices)");
    }
  }

  rep.constants_used["gamma"] = gamma;
  rep.constants_used["C"] = capital_c;
  rep.worst_case = std::max(slacks.worst_upper, slacks.worst_lower);
  rep.pass = rep.worst_case <= 0.0 && std::isfinite(capital_c);
  if (!std::isfinite(capital_c)) rep.worst_case = kInf;
  rep.notes = cat("Lipschitz-cap slack ", slacks.worst_upper, "; response-floor slack ",
                  slacks.worst_lower, "; ", ell_note, "; ", c_note);
  return rep;
}

}  // namespace dfd
