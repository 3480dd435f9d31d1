#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "dfd/core/require.hpp"

namespace dfd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Closed interval with explicit empty flag; +-inf endpoints are allowed.
/// `clamped` records that a numeric search hit its range bound, so the true
/// set may extend further.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = false;
  bool clamped = false;

  static Interval whole() { return {-kInf, kInf, false, false}; }
  static Interval make_empty() { return {kInf, -kInf, true, false}; }

  double width() const { return empty ? 0.0 : hi - lo; }
  bool contains(double x) const { return !empty && lo <= x && x <= hi; }
};

/// Proper convex lower semi-continuous penalty on the line, vanishing at the
/// origin. `eval` may return +inf; `analytic_prox`, when set, short-circuits
/// the numeric minimization. `analytic_prox_scaled(c, x)`, when set, is the
/// closed-form prox of the weighted penalty c * s at x; it lets scaled
/// variants of this penalty keep exact proxes (the numeric fallback is only
/// accurate to about sqrt(eps * objective), since objective differences
/// flatten below floating-point resolution near the minimizer).
struct ScalarPenalty {
  std::function<double(double)> eval;
  Interval domain_interval = Interval::whole();
  std::function<double(double)> analytic_prox;
  std::function<double(double, double)> analytic_prox_scaled;
};

/// Monotone nonexpansive map fixing the origin (the shape of every proximity
/// operator on the line).
struct ScalarProx {
  std::function<double(double)> map;
  bool monotone = true;
  bool nonexpansive = true;

  double operator()(double x) const { return map(x); }
};

/// Corner-smoothed absolute value: x^2/2 inside [-delta, delta], linear with
/// matching value and slope outside.
struct HuberLoss {
  double delta = 1.0;

  explicit HuberLoss(double d) : delta(d) {
    DFD_REQUIRE(d > 0.0, "huber loss: corner must be positive, got ", d);
  }

  double eval(double x) const {
    const double a = std::abs(x);
    return a <= delta ? 0.5 * x * x : delta * (a - 0.5 * delta);
  }
};

/// Minimizer of y -> (x - y)^2 / 2 + penalty(y). Uses the closed form when
/// available, otherwise ternary search on the strictly convex objective. The
/// search bracket [min(0, x), max(0, x)] always contains the minimizer since
/// the penalty has its minimum at the origin.
inline double prox(const ScalarPenalty& s, double x) {
  if (s.analytic_prox) return s.analytic_prox(x);
  if (s.analytic_prox_scaled) return s.analytic_prox_scaled(1.0, x);
  const auto objective = [&](double y) { return 0.5 * (x - y) * (x - y) + s.eval(y); };
  double lo = std::min(0.0, x);
  double hi = std::max(0.0, x);
  lo = std::max(lo, s.domain_interval.lo);
  hi = std::min(hi, s.domain_interval.hi);
  DFD_ENSURE(lo <= hi, "prox: domain excludes the origin");
  double best_x = 0.0;
  double best_f = objective(0.0);
  const auto consider = [&](double y) {
    const double f = objective(y);
    if (f < best_f) {
      best_f = f;
      best_x = y;
    }
  };
  consider(lo);
  consider(hi);
  for (int iter = 0; iter < 300 && hi - lo > 1e-12; ++iter) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double f1 = objective(m1);
    const double f2 = objective(m2);
    if (std::isinf(f1) && std::isinf(f2)) {
      // objective finite somewhere inside; shrink from both ends
      lo = m1;
      hi = m2;
      continue;
    }
    if (f1 <= f2) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  consider(0.5 * (lo + hi));
  // Guarded secant-Newton polish. Where the objective is smooth the ternary
  // bracket stalls once value differences round below eps * objective
  // (accuracy ~ sqrt(eps * f)); one quadratic-model step from there recovers
  // ~1e-10. Where the objective has a corner the step lands far off and is
  // rejected because it visibly increases the objective.
  {
    const double h = 1e-5 * std::max(1.0, std::abs(best_x));
    const double f_minus = objective(best_x - h);
    const double f_plus = objective(best_x + h);
    if (std::isfinite(f_minus) && std::isfinite(f_plus)) {
      const double slope = (f_plus - f_minus) / (2.0 * h);
      const double curvature = (f_plus - 2.0 * best_f + f_minus) / (h * h);
      if (curvature > 0.0) {
        double refined = best_x - slope / curvature;
        refined = std::max(s.domain_interval.lo, std::min(s.domain_interval.hi, refined));
        const double f_refined = objective(refined);
        if (f_refined <= best_f) {
          best_f = f_refined;
          best_x = refined;
        }
      }
    }
  }
  return best_x;
}

/// Wraps a penalty's prox map as a standalone monotone nonexpansive function.
inline ScalarProx prox_operator(ScalarPenalty s) {
  ScalarProx p;
  auto shared = std::make_shared<const ScalarPenalty>(std::move(s));
  p.map = [shared](double x) { return prox(*shared, x); };
  return p;
}

/// Penalty y -> gamma * s(kappa * y). When the source carries a closed-form
/// scaled prox, it survives the scaling through the substitution identity
/// prox_{gamma s(kappa .)}(x) = prox_{gamma kappa^2 s}(kappa x) / kappa;
/// otherwise the prox of the result goes numeric.
inline ScalarPenalty scale_penalty(const ScalarPenalty& s, double gamma, double kappa) {
  DFD_REQUIRE(gamma > 0.0 && kappa > 0.0, "scale_penalty: factors must be positive");
  ScalarPenalty out;
  const auto eval = s.eval;
  out.eval = [eval, gamma, kappa](double y) { return gamma * eval(kappa * y); };
  out.domain_interval = s.domain_interval;
  out.domain_interval.lo /= kappa;
  out.domain_interval.hi /= kappa;
  if (s.analytic_prox_scaled) {
    const auto scaled = s.analytic_prox_scaled;
    out.analytic_prox = [scaled, gamma, kappa](double x) {
      return scaled(gamma * kappa * kappa, kappa * x) / kappa;
    };
    out.analytic_prox_scaled = [scaled, gamma, kappa](double c, double x) {
      return scaled(c * gamma * kappa * kappa, kappa * x) / kappa;
    };
  }
  return out;
}

namespace detail {

inline constexpr double kProxInverseRange = 1e9;

/// Bisection for the left/right edge of the level set of a monotone map.
/// `want_upper` selects the predicate: false -> smallest x with p(x) >= y,
/// true -> largest x with p(x) <= y.
inline double level_set_edge(const ScalarProx& p, double y, double a, double b,
                             bool want_upper, double eps_eq) {
  // invariant (lower edge):  p(a) < y - eps <= attained somewhere in [a, b]
  for (int iter = 0; iter < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b)); ++iter) {
    const double m = 0.5 * (a + b);
    const double v = p(m);
    if (want_upper) {
      if (v <= y + eps_eq) {
        a = m;
      } else {
        b = m;
      }
    } else {
      if (v >= y - eps_eq) {
        b = m;
      } else {
        a = m;
      }
    }
  }
  return want_upper ? a : b;
}

}  // namespace detail

/// Preimage {x : p(x) = y} of a monotone nonexpansive map, found by expanding
/// a bracket (up to |x| = 1e9) and bisecting both level-set edges. An empty
/// flag means the value is never attained inside the range bound; edges that
/// hit the bound are clamped and flagged.
inline Interval prox_inverse(const ScalarProx& p, double y) {
  constexpr double bound = detail::kProxInverseRange;
  const double eps_eq = 1e-11 * std::max(1.0, std::abs(y));

  // expand left until p(lo) drops strictly below y (or the bound is hit)
  double lo_bracket = -(1.0 + std::abs(y));
  while (lo_bracket > -bound && p(lo_bracket) >= y - eps_eq) lo_bracket = std::max(2.0 * lo_bracket, -bound);
  // expand right until p(hi) rises strictly above y
  double hi_bracket = 1.0 + std::abs(y);
  while (hi_bracket < bound && p(hi_bracket) <= y + eps_eq) hi_bracket = std::min(2.0 * hi_bracket, bound);

  const double at_lo = p(lo_bracket);
  const double at_hi = p(hi_bracket);
  // never attained in range: the whole map sits above or below y
  if (at_lo > y + eps_eq) return Interval::make_empty();
  if (at_hi < y - eps_eq) return Interval::make_empty();

  Interval out;
  if (at_lo >= y - eps_eq) {
    // still at level y at the range bound
    out.lo = -bound;
    out.clamped = true;
  } else {
    out.lo = detail::level_set_edge(p, y, lo_bracket, hi_bracket, false, eps_eq);
  }
  if (at_hi <= y + eps_eq) {
    out.hi = bound;
    out.clamped = true;
  } else {
    out.hi = detail::level_set_edge(p, y, lo_bracket, hi_bracket, true, eps_eq);
  }
  if (out.lo > out.hi) {  // numerically a single point
    const double m = 0.5 * (out.lo + out.hi);
    out.lo = out.hi = m;
  }
  return out;
}

/// Set of slopes supporting the penalty at x: one-sided difference quotients
/// sharpened by one Richardson step (exact on piecewise-quadratic pieces).
inline Interval subdifferential(const ScalarPenalty& s, double x) {
  DFD_REQUIRE(s.domain_interval.contains(x), "subdifferential: ", x,
              " is outside the penalty domain");
  const double h = 1e-4 * std::max(1.0, std::abs(x));
  const double sx = s.eval(x);
  DFD_REQUIRE(std::isfinite(sx), "subdifferential: penalty infinite at ", x);
  const auto one_sided = [&](double sign) -> double {
    const double f1 = s.eval(x + sign * h);
    const double f2 = s.eval(x + sign * 0.5 * h);
    if (!std::isfinite(f1) || !std::isfinite(f2)) return sign * kInf;
    const double q1 = sign * (f1 - sx) / h;
    const double q2 = sign * (f2 - sx) / (0.5 * h);
    return 2.0 * q2 - q1;
  };
  Interval out;
  out.lo = one_sided(-1.0);  // left derivative
  out.hi = one_sided(+1.0);  // right derivative
  // guard tiny quotient noise from inverting the order at smooth points
  if (out.lo > out.hi) std::swap(out.lo, out.hi);
  return out;
}

// ---------------------------------------------------------------------------
// Penalty recovery from a prox map.
//
// The derivative identity prox^{-1}(t) - t = subdifferential of the penalty
// turns recovery into quadrature: s(x) = integral from 0 to x of
// g(t) := min(prox_inverse(p, t)) - t. The table samples g at uniform nodes,
// adaptively splits cells whose midpoint deviates from the chord (jumps and
// slope kinks of g), and integrates with the trapezoid rule, which is exact
// on the piecewise-linear integrands of every built-in family.
// ---------------------------------------------------------------------------

/// Tabulated recovered penalty: ascending nodes t, values s, derivative
/// samples g. Outside [t.front(), t.back()] the penalty is +inf;
/// `truncated_neg/pos` record that the table stopped early because the
/// preimage went empty.
struct RecoveredPenalty {
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> g;
  bool truncated_neg = false;
  bool truncated_pos = false;

  double eval(double x) const {
    if (t.empty() || x < t.front() || x > t.back()) return kInf;
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = (it == t.begin()) ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    if (i + 1 >= t.size()) i = t.size() - 2;
    const double h = t[i + 1] - t[i];
    if (h <= 0.0) return s[i];
    const double tau = x - t[i];
    // quadratic with matching slopes g[i], g[i+1] at the segment ends
    return s[i] + g[i] * tau + (g[i + 1] - g[i]) * tau * tau / (2.0 * h);
  }

  ScalarPenalty penalty() const {
    auto self = std::make_shared<const RecoveredPenalty>(*this);
    ScalarPenalty out;
    out.eval = [self](double x) { return self->eval(x); };
    out.domain_interval = {t.front(), t.back(), false, false};
    return out;
  }
};

namespace detail {

/// min(prox_inverse(p, t)) - t, the smallest supporting slope at t. NaN when
/// the preimage is empty.
inline double penalty_slope_at(const ScalarProx& p, double t) {
  const Interval pre = prox_inverse(p, t);
  if (pre.empty) return std::numeric_limits<double>::quiet_NaN();
  return pre.lo - t;
}

/// Adaptive midpoint refinement of one quadrature cell. Where the midpoint
/// sample deviates from the chord (a jump or slope kink of g sits inside),
/// the cell is split until it is narrower than 1e-7, which caps both the
/// integration error and the prox displacement of the recovered penalty.
inline void refine_cell(const ScalarProx& p, double t1, double g1, double t2, double g2,
                        int depth, std::vector<double>& ts, std::vector<double>& gs) {
  if (t2 - t1 < 1e-7 || depth > 24) return;
  const double m = 0.5 * (t1 + t2);
  const double gm = penalty_slope_at(p, m);
  if (std::isnan(gm) || std::abs(gm) > 1e6) return;  // keep the chord near artifacts
  const double chord = 0.5 * (g1 + g2);
  const double scale = std::max({1.0, std::abs(g1), std::abs(g2)});
  if (std::abs(gm - chord) <= 1e-6 * scale) return;
  refine_cell(p, t1, g1, m, gm, depth + 1, ts, gs);
  ts.push_back(m);
  gs.push_back(gm);
  refine_cell(p, m, gm, t2, g2, depth + 1, ts, gs);
}

}  // namespace detail

/// Tabulates the recovered penalty of p over [-radius, radius] at the given
/// step. Requires p(0) = 0 (in the sense that 0 is a fixed point); the table
/// is anchored at s(0) = 0 and grown outward in both directions.
inline RecoveredPenalty recover_penalty_table(const ScalarProx& p, double radius,
                                              double step = 1e-3) {
  DFD_REQUIRE(radius > 0.0 && step > 0.0, "recover_penalty_table: bad geometry");

  // base nodes t_k = dir * k * step, anchored at the origin, stopping at the
  // first empty preimage in each direction
  const auto sweep = [&](double dir, std::vector<double>& ts, std::vector<double>& gs,
                         bool& truncated) {
    const int n_steps = static_cast<int>(std::ceil(radius / step - 1e-12));
    double prev_g = detail::penalty_slope_at(p, 0.0);
    if (std::isnan(prev_g) || std::abs(prev_g) > 1e6) prev_g = 0.0;  // plateau guard at 0
    ts.push_back(0.0);
    gs.push_back(prev_g);
    for (int k = 1; k <= n_steps; ++k) {
      const double t = dir * std::min(k * step, radius);
      double g = detail::penalty_slope_at(p, t);
      if (std::isnan(g)) {
        truncated = true;
        break;
      }
      if (std::abs(g) > 1e6) g = prev_g;  // clamped preimage artifact; keep one-sided limit
      ts.push_back(t);
      gs.push_back(g);
      prev_g = g;
    }
  };

  std::vector<double> pos_t, pos_g, neg_t, neg_g;
  RecoveredPenalty out;
  sweep(+1.0, pos_t, pos_g, out.truncated_pos);
  sweep(-1.0, neg_t, neg_g, out.truncated_neg);

  // stitch ascending (negative sweep reversed, its origin node dropped) and
  // refine every cell that hides structure between its base nodes
  std::vector<double> base_t, base_g;
  base_t.reserve(neg_t.size() - 1 + pos_t.size());
  base_g.reserve(base_t.capacity());
  for (std::size_t i = neg_t.size(); i-- > 1;) {
    base_t.push_back(neg_t[i]);
    base_g.push_back(neg_g[i]);
  }
  std::size_t origin = base_t.size();
  for (std::size_t i = 0; i < pos_t.size(); ++i) {
    base_t.push_back(pos_t[i]);
    base_g.push_back(pos_g[i]);
  }

  for (std::size_t i = 0; i < base_t.size(); ++i) {
    if (i > 0) {
      detail::refine_cell(p, base_t[i - 1], base_g[i - 1], base_t[i], base_g[i], 0,
                          out.t, out.g);
    }
    if (base_t[i] == 0.0) origin = out.t.size();
    out.t.push_back(base_t[i]);
    out.g.push_back(base_g[i]);
  }

  // trapezoid integration anchored at s(0) = 0
  out.s.assign(out.t.size(), 0.0);
  DFD_ENSURE(origin < out.t.size(), "recover_penalty_table: origin node missing");
  for (std::size_t i = origin + 1; i < out.t.size(); ++i) {
    out.s[i] = out.s[i - 1] +
               0.5 * (out.g[i - 1] + out.g[i]) * (out.t[i] - out.t[i - 1]);
  }
  for (std::size_t i = origin; i-- > 0;) {
    out.s[i] = out.s[i + 1] - 0.5 * (out.g[i] + out.g[i + 1]) * (out.t[i + 1] - out.t[i]);
  }
  return out;
}

/// Single recovered penalty value s(x); +inf when an empty preimage blocks the
/// integration path from 0 to x.
inline double recover_penalty(const ScalarProx& p, double x, double step = 1e-3) {
  if (x == 0.0) return 0.0;
  const RecoveredPenalty table = recover_penalty_table(p, std::abs(x), step);
  return table.eval(x);
}

}  // namespace dfd
