#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dfd/core/grid.hpp"
#include "dfd/core/require.hpp"
#include "dfd/prox.hpp"

namespace dfd {

/// Outcome of one analytic property check. `worst_violation` is the largest
/// amount by which an asserted inequality failed (negative values mean the
/// assertion held with margin); `pass` folds in the hypothesis status.
struct LemmaReport {
  std::string lemma;
  bool hypothesis_ok = true;
  std::vector<double> grid;
  double worst_violation = -kInf;
  bool pass = false;
  std::string notes;
};

/// Checks that a family of monotone nonexpansive maps fixing 0 converges
/// pointwise to the identity if and only if its preimages do: at the final
/// (smallest) alpha of the schedule, e1(x) = |p_alpha(x) - x| and
/// e2(x) = sup_{y in preimage(x)} |y - x| (sup over the empty set = +inf)
/// must sit on the same side of the tolerance for every grid point.
inline LemmaReport check_inv_conv(const std::function<ScalarProx(double)>& family_at,
                                  const std::vector<double>& x_grid,
                                  const std::vector<double>& alpha_schedule,
                                  double tol = 1e-3) {
  DFD_REQUIRE(!alpha_schedule.empty(), "check_inv_conv: empty alpha schedule");
  for (std::size_t i = 1; i < alpha_schedule.size(); ++i)
    DFD_REQUIRE(alpha_schedule[i] < alpha_schedule[i - 1],
                "check_inv_conv: alpha schedule must decrease");
  LemmaReport report;
  report.lemma = "inverse-convergence equivalence";
  report.grid = x_grid;
  report.hypothesis_ok = true;

  const ScalarProx p = family_at(alpha_schedule.back());
  double worst = -kInf;
  for (double x : x_grid) {
    const double e1 = std::abs(p(x) - x);
    const Interval pre = prox_inverse(p, x);
    const double e2 =
        pre.empty ? kInf : std::max(std::abs(pre.lo - x), std::abs(pre.hi - x));
    // direct convergence at x decides which side e2 must land on
    const double violation = (e1 <= tol) ? e2 - tol : tol - e2;
    worst = std::max(worst, violation);
  }
  report.worst_violation = worst;
  report.pass = worst <= 0.0;
  report.notes = "equivalence tested at the final schedule entry alpha = " +
                 std::to_string(alpha_schedule.back());
  return report;
}

/// Checks the shrinkage-implies-growth bound for a penalty: if prox_{alpha s}
/// contracts by at least kappa^2/(kappa^2 + alpha b) on the region reaching
/// c*kappa, then s dominates a quadratic near the origin and a linear
/// continuation beyond |y| = c*kappa.
inline LemmaReport check_r_estimate(const ScalarPenalty& s, double kappa, double alpha,
                                    double b, double c,
                                    const std::vector<double>& y_grid) {
  DFD_REQUIRE(kappa > 0.0 && alpha > 0.0 && b > 0.0 && c > 0.0,
              "check_r_estimate: parameters must be positive");
  LemmaReport report;
  report.lemma = "penalty growth from prox shrinkage";
  report.grid = y_grid;

  const ScalarProx p_alpha = prox_operator(scale_penalty(s, alpha, 1.0));
  const double factor = kappa * kappa / (kappa * kappa + alpha * b);

  // hypothesis region: |x| up to the smallest preimage point of c*kappa
  const Interval pre = prox_inverse(p_alpha, c * kappa);
  if (pre.empty) {
    report.hypothesis_ok = false;
    report.pass = false;
    report.worst_violation = kInf;
    report.notes = "hypothesis fails: c*kappa is not attained by the scaled prox";
    return report;
  }
  const double x_star = pre.lo;
  report.hypothesis_ok = true;
  for (double x : linspace(-x_star, x_star, 101)) {
    const double lhs = std::abs(p_alpha(x));
    // slack covers the 1e-12 bracket width of the numeric prox on equality cases
    const double rhs = factor * std::abs(x) + 1e-9 * std::max(1.0, std::abs(x));
    if (lhs > rhs) {
      report.hypothesis_ok = false;
      report.notes = "hypothesis fails at x = " + std::to_string(x);
      break;
    }
  }
  if (!report.hypothesis_ok) {
    report.pass = false;
    report.worst_violation = kInf;
    return report;
  }

  double worst = -kInf;
  for (double y : y_grid) {
    const double value = s.eval(y);
    const double scaled = std::abs(y) / kappa;
    const double bound = (std::abs(y) <= c * kappa)
                             ? 0.5 * b * scaled * scaled
                             : b * c * scaled - 0.5 * b * c * c;
    worst = std::max(worst, bound - value);
  }
  report.worst_violation = worst;
  report.pass = worst <= 1e-10;
  report.notes = "hypothesis sampled on 101 points of [-x*, x*], x* = " +
                 std::to_string(x_star) + "; conclusions on the reported grid";
  return report;
}

/// Checks the scaled-prox contraction transfer: if prox_s contracts by the
/// stated factor on |x| <= alpha/kappa, then prox of gamma*s(kappa .) keeps
/// |prox(x)| <= t|x| inside |x| <= gamma*alpha and moves every outside point
/// by more than (1-t)*gamma*alpha.
inline LemmaReport check_prox_scaled(const ScalarPenalty& s, double alpha, double gamma,
                                     double kappa, double t,
                                     const std::vector<double>& x_grid) {
  DFD_REQUIRE(gamma > 0.0 && kappa > 0.0 && alpha > 0.0,
              "check_prox_scaled: parameters must be positive");
  DFD_REQUIRE(gamma * kappa * kappa < 1.0,
              "check_prox_scaled: requires gamma * kappa^2 < 1, got ",
              gamma * kappa * kappa);
  DFD_REQUIRE(t >= 0.0 && t < 1.0, "check_prox_scaled: t must lie in [0, 1)");
  LemmaReport report;
  report.lemma = "scaled prox contraction transfer";
  report.grid = x_grid;

  const double gk2 = gamma * kappa * kappa;
  const double factor = gk2 * t / (1.0 - t * (1.0 - gk2));
  report.hypothesis_ok = true;
  for (double x : linspace(-alpha / kappa, alpha / kappa, 101)) {
    const double lhs = std::abs(prox(s, x));
    // slack covers the 1e-12 bracket width of the numeric prox on equality cases
    const double rhs = factor * std::abs(x) + 1e-9 * std::max(1.0, std::abs(x));
    if (lhs > rhs) {
      report.hypothesis_ok = false;
      report.notes = "hypothesis fails at x = " + std::to_string(x);
      break;
    }
  }
  if (!report.hypothesis_ok) {
    report.pass = false;
    report.worst_violation = kInf;
    return report;
  }

  const ScalarPenalty scaled = scale_penalty(s, gamma, kappa);
  double worst = -kInf;
  for (double x : x_grid) {
    const double px = prox(scaled, x);
    double violation;
    if (std::abs(x) <= gamma * alpha) {
      violation = std::abs(px) - t * std::abs(x);
    } else {
      violation = (1.0 - t) * gamma * alpha - std::abs(px - x);
    }
    worst = std::max(worst, violation);
  }
  report.worst_violation = worst;
  report.pass = worst <= 1e-10;
  report.notes = "hypothesis sampled on 101 points of [-alpha/kappa, alpha/kappa]";
  return report;
}

}  // namespace dfd
