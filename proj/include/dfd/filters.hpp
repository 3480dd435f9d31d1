#pragma once

// Non-linear scalar filter families phi_alpha(kappa, c) used to damp the
// diagonal coefficients of an ill-posed inverse problem, together with the
// penalties whose proximity operators they are, the coefficient-space
// regularizer they induce, and the axioms grid-checker (monotone /
// nonexpansive / zero-fixing / identity-limit).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dfd/core/grid.hpp"
#include "dfd/core/require.hpp"
#include "dfd/prox.hpp"

namespace dfd {

/// Theoretical constants a family carries so verification runs can use known
/// values instead of searching. NaN marks "not applicable / unknown".
struct FilterConstants {
  double b = std::numeric_limits<double>::quiet_NaN();
  double c = std::numeric_limits<double>::quiet_NaN();
  double d = std::numeric_limits<double>::quiet_NaN();
  double e = std::numeric_limits<double>::quiet_NaN();
  double C = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();

  bool has_b() const { return std::isfinite(b); }
  bool has_c() const { return std::isfinite(c); }
  bool has_d() const { return std::isfinite(d); }
  bool has_e() const { return std::isfinite(e); }
  bool has_C() const { return std::isfinite(C); }
  bool has_gamma() const { return std::isfinite(gamma); }
};

/// A family of scalar coefficient maps indexed by the regularization weight
/// alpha and the quasi-singular value kappa. `evaluate` is the filter itself;
/// `analytic_penalty`, when present, builds the convex penalty whose prox the
/// filter is (carrying closed-form proxes so equality-tight checks do not hit
/// the floating-point floor of the numeric search).
struct ScalarFilterFamily {
  std::string name;
  std::function<double(double alpha, double kappa, double c)> evaluate;
  std::function<ScalarPenalty(double alpha, double kappa)> analytic_penalty;
  /// Lipschitz rule alpha -> ell_alpha in (0,1), when the family declares one.
  std::function<double(double alpha)> lipschitz_rule;
  /// Symbolic form of the rule when it is one of the two standard shapes
  /// ("1/(1+alpha)" or "1/(1+sqrt(alpha))"), so schedules can invert it in
  /// closed form; empty otherwise.
  std::string lipschitz_rule_form;
  /// Nonnegative |c| locations where evaluate(alpha, kappa, .) kinks; used to
  /// make verification grids breakpoint-aware.
  std::function<std::vector<double>(double alpha, double kappa)> breakpoints;
  FilterConstants constants;
  /// True when the induced penalty scales linearly in alpha.
  bool stationary = false;
  /// Valid open/half-open alpha range (families built by inverting a single
  /// profile are only defined up to alpha = 1).
  double alpha_min = 0.0;
  double alpha_max = std::numeric_limits<double>::infinity();

  bool has_penalty() const { return static_cast<bool>(analytic_penalty); }

  void require_alpha(double alpha) const {
    DFD_REQUIRE(alpha > alpha_min && alpha <= alpha_max,
                "filter family '", name, "': alpha = ", alpha,
                " outside the valid range (", alpha_min, ", ", alpha_max, "]");
  }
};

/// Wraps one (alpha, kappa) slice of a family as a standalone scalar map.
inline ScalarProx filter_slice(const ScalarFilterFamily& f, double alpha, double kappa) {
  f.require_alpha(alpha);
  DFD_REQUIRE(kappa > 0.0, "filter_slice: kappa must be positive");
  ScalarProx p;
  const auto eval = f.evaluate;
  p.map = [eval, alpha, kappa](double c) { return eval(alpha, kappa, c); };
  return p;
}

// ---------------------------------------------------------------------------
// Concrete families
// ---------------------------------------------------------------------------

namespace detail {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Penalty w0 * L(delta, .) built on the corner-smoothed absolute value, with
/// the exact piecewise prox of any positive multiple attached.
inline ScalarPenalty weighted_huber_penalty(double w0, double delta) {
  ScalarPenalty s;
  const HuberLoss loss(delta);
  s.eval = [w0, loss](double y) { return w0 * loss.eval(y); };
  s.analytic_prox_scaled = [w0, delta](double c, double x) {
    const double w = c * w0;
    if (std::abs(x) <= delta * (1.0 + w)) return x / (1.0 + w);
    return x - sign(x) * w * delta;
  };
  return s;
}

}  // namespace detail

/// Shrink toward zero by alpha/kappa and clip the small coefficients to zero.
inline ScalarFilterFamily soft_threshold_family() {
  ScalarFilterFamily f;
  f.name = "soft";
  f.evaluate = [](double alpha, double kappa, double c) {
    const double t = alpha / kappa;
    return detail::sign(c) * std::max(std::abs(c) - t, 0.0);
  };
  f.analytic_penalty = [](double alpha, double kappa) {
    ScalarPenalty s;
    const double t = alpha / kappa;
    s.eval = [t](double y) { return t * std::abs(y); };
    s.analytic_prox_scaled = [t](double c, double x) {
      const double ct = c * t;
      return detail::sign(x) * std::max(std::abs(x) - ct, 0.0);
    };
    return s;
  };
  f.breakpoints = [](double alpha, double kappa) {
    return std::vector<double>{alpha / kappa};
  };
  // the preimage shift is (alpha/kappa)*sign(y), so the growth pair (b, c)
  // holds with equality at b = 1/c; the inner-region pair follows as (bc,
  // 1/(2*sqrt(b)))
  f.constants.b = 1.0;
  f.constants.c = 1.0;
  f.constants.d = 1.0;
  f.constants.e = 0.5;
  f.stationary = true;
  return f;
}

/// Corner-smoothed shrinkage whose penalty scales linearly in alpha: linear
/// damping by kappa^2/(kappa^2 + alpha b) inside, constant shift outside.
inline ScalarFilterFamily huber_stationary_family(double b, double d) {
  DFD_REQUIRE(b > 0.0 && d > 0.0, "huber_stationary_family: b and d must be positive, got b = ",
              b, ", d = ", d);
  ScalarFilterFamily f;
  f.name = "huber-a";
  f.evaluate = [b, d](double alpha, double kappa, double x) {
    const double k2 = kappa * kappa;
    const double inner_edge = d * (k2 + alpha * b) / (kappa * (k2 + b));
    if (std::abs(x) <= inner_edge) return k2 / (k2 + alpha * b) * x;
    return x - detail::sign(x) * d * b * alpha / (kappa * (k2 + b));
  };
  f.analytic_penalty = [b, d](double alpha, double kappa) {
    const double k2 = kappa * kappa;
    return detail::weighted_huber_penalty(alpha * b / k2, d * kappa / (k2 + b));
  };
  f.breakpoints = [b, d](double alpha, double kappa) {
    const double k2 = kappa * kappa;
    return std::vector<double>{d * (k2 + alpha * b) / (kappa * (k2 + b))};
  };
  f.constants.b = b;
  f.constants.c = d / (1.0 + b);  // hypothesis region stays linear up to kappa = 1
  f.constants.d = b * (d / (1.0 + b));
  f.constants.e = 0.5 / std::sqrt(b);
  f.stationary = true;
  return f;
}

/// Corner-smoothed shrinkage whose inner region has width d*alpha/kappa; the
/// induced penalty does not scale linearly in alpha.
inline ScalarFilterFamily huber_nonstationary_family(double b, double d) {
  DFD_REQUIRE(b > 0.0 && d > 0.0,
              "huber_nonstationary_family: b and d must be positive, got b = ", b, ", d = ", d);
  ScalarFilterFamily f;
  f.name = "huber-b";
  f.evaluate = [b, d](double alpha, double kappa, double x) {
    const double k2 = kappa * kappa;
    if (std::abs(x) <= d * alpha / kappa) return k2 / (k2 + alpha * b) * x;
    return x - detail::sign(x) * d * b * alpha * alpha / (kappa * (k2 + alpha * b));
  };
  f.analytic_penalty = [b, d](double alpha, double kappa) {
    const double k2 = kappa * kappa;
    return detail::weighted_huber_penalty(alpha * b / k2,
                                          d * alpha * kappa / (k2 + alpha * b));
  };
  f.breakpoints = [d](double alpha, double kappa) {
    return std::vector<double>{d * alpha / kappa};
  };
  f.constants.b = b;
  f.constants.d = d;
  f.constants.e = 0.5 / std::sqrt(b);
  f.stationary = false;
  return f;
}

/// Piecewise-linear map with a central plateau: linear with slope
/// gamma kappa^2 ell / (1 - ell (1 - gamma kappa^2)) inside |x| <= alpha/3, flat
/// until 2 alpha/3, then linear again with the same slope. ell_alpha = 1/(1+alpha).
inline ScalarFilterFamily pnp_staircase_family(double gamma, double kappa_max,
                                               bool sqrt_ell = false) {
  DFD_REQUIRE(kappa_max > 0.0, "pnp_staircase_family: kappa_max must be positive");
  DFD_REQUIRE(gamma > 0.0 && gamma < 1.0 / (kappa_max * kappa_max),
              "pnp_staircase_family: gamma = ", gamma,
              " outside (0, 1/kappa_max^2) with kappa_max = ", kappa_max);
  ScalarFilterFamily f;
  f.name = "pnp-c";
  const auto ell_rule = [sqrt_ell](double alpha) {
    return 1.0 / (1.0 + (sqrt_ell ? std::sqrt(alpha) : alpha));
  };
  const auto slope = [gamma, ell_rule](double alpha, double kappa) {
    const double ell = ell_rule(alpha);
    const double g = gamma * kappa * kappa;
    return g * ell / (1.0 - ell * (1.0 - g));
  };
  f.evaluate = [slope](double alpha, double kappa, double x) {
    const double m = slope(alpha, kappa);
    const double a = std::abs(x);
    if (a <= alpha / 3.0) return m * x;
    if (a <= 2.0 * alpha / 3.0) return m * detail::sign(x) * alpha / 3.0;
    return m * (x - detail::sign(x) * alpha / 3.0);
  };
  // the map equals the prox of a strongly convex penalty: quadratic with
  // weight 1/m - 1 plus a plateau-inducing hinge beyond y0 = m*alpha/3
  f.analytic_penalty = [slope](double alpha, double kappa) {
    const double m = slope(alpha, kappa);
    const double q1 = 1.0 / m - 1.0;  // quadratic weight at unit scaling
    const double y0 = m * alpha / 3.0;
    const double hinge = alpha / 3.0;
    ScalarPenalty s;
    s.eval = [q1, y0, hinge](double y) {
      return 0.5 * q1 * y * y + hinge * std::max(std::abs(y) - y0, 0.0);
    };
    s.analytic_prox_scaled = [q1, y0, hinge](double c, double x) {
      const double q = c * q1;
      const double t = c * hinge;
      const double a = std::abs(x);
      if (a <= y0 * (1.0 + q)) return x / (1.0 + q);
      if (a <= y0 * (1.0 + q) + t) return detail::sign(x) * y0;
      return (x - detail::sign(x) * t) / (1.0 + q);
    };
    return s;
  };
  f.lipschitz_rule = ell_rule;
  f.lipschitz_rule_form = sqrt_ell ? "1/(1+sqrt(alpha))" : "1/(1+alpha)";
  f.breakpoints = [](double alpha, double /*kappa*/) {
    return std::vector<double>{alpha / 3.0, 2.0 * alpha / 3.0};
  };
  f.constants.gamma = gamma;
  f.stationary = false;
  return f;
}

/// Linear spectral damping kappa^2/(kappa^2 + alpha).
inline ScalarFilterFamily tikhonov_family() {
  ScalarFilterFamily f;
  f.name = "tikhonov";
  f.evaluate = [](double alpha, double kappa, double c) {
    const double k2 = kappa * kappa;
    return k2 / (k2 + alpha) * c;
  };
  f.analytic_penalty = [](double alpha, double kappa) {
    ScalarPenalty s;
    const double w0 = alpha / (kappa * kappa);
    s.eval = [w0](double y) { return 0.5 * w0 * y * y; };
    s.analytic_prox_scaled = [w0](double c, double x) { return x / (1.0 + c * w0); };
    return s;
  };
  f.breakpoints = [](double, double) { return std::vector<double>{}; };
  f.constants.b = 1.0;
  f.constants.c = 1.0;
  f.constants.d = 1.0;
  f.constants.e = 0.5;
  f.stationary = true;
  return f;
}

/// Hard spectral cutoff: identity while kappa^2 >= alpha, zero below.
inline ScalarFilterFamily tsvd_family() {
  ScalarFilterFamily f;
  f.name = "tsvd";
  f.evaluate = [](double alpha, double kappa, double c) {
    return kappa * kappa >= alpha ? c : 0.0;
  };
  f.analytic_penalty = [](double alpha, double kappa) {
    ScalarPenalty s;
    if (kappa * kappa >= alpha) {
      s.eval = [](double) { return 0.0; };
      s.analytic_prox_scaled = [](double, double x) { return x; };
    } else {
      s.eval = [](double y) { return y == 0.0 ? 0.0 : kInf; };
      s.domain_interval = {0.0, 0.0, false, false};
      s.analytic_prox_scaled = [](double, double) { return 0.0; };
    }
    return s;
  };
  f.breakpoints = [](double, double) { return std::vector<double>{}; };
  f.constants.d = 1.0;
  f.constants.e = 1.0;
  f.stationary = false;
  return f;
}

/// Builds the whole family from its alpha = 1 member by inverting
/// (1-alpha) id + alpha phi1(kappa,.)^{-1}. Defined for alpha in (0, 1]; at
/// alpha = 1 this reproduces phi1. `validity_b`/`validity_c` document the
/// growth constants the profile is claimed to satisfy.
inline ScalarFilterFamily family_from_phi1(std::function<double(double, double)> phi1,
                                           double validity_b, double validity_c) {
  DFD_REQUIRE(static_cast<bool>(phi1), "family_from_phi1: profile function required");
  ScalarFilterFamily f;
  f.name = "from-phi1";
  f.evaluate = [phi1](double alpha, double kappa, double x) {
    DFD_REQUIRE(alpha > 0.0 && alpha <= 1.0,
                "from-phi1 filter: alpha = ", alpha, " outside (0, 1]");
    if (x == 0.0) return 0.0;  // exact: 0 solves the inclusion since phi1 fixes 0
    ScalarProx base;
    base.map = [phi1, kappa](double w) { return phi1(kappa, w); };
    // G(w) = (1-alpha) w + alpha min phi1^{-1}(w) is increasing in w; the
    // filter value is sup{w : G(w) <= x}, found by expanding then bisecting.
    const auto g_min = [&base, alpha](double w) {
      const Interval pre = prox_inverse(base, w);
      DFD_ENSURE(!pre.empty, "from-phi1 filter: profile never attains the value ", w);
      return (1.0 - alpha) * w + alpha * pre.lo;
    };
    double lo = 0.0, hi = 0.0;
    if (x > 0.0) {
      hi = std::abs(x) + 1.0;
      while (g_min(hi) <= x) hi *= 2.0;
    } else {
      lo = -std::abs(x) - 1.0;
      while (g_min(lo) > x) lo *= 2.0;
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi));
         ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (g_min(mid) <= x) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  f.constants.b = validity_b;
  f.constants.c = validity_c;
  f.stationary = true;
  f.alpha_max = 1.0;
  return f;
}

/// Builds a family by CLI-facing name. Recognized parameter keys: b, d
/// (corner-smoothed families), gamma, kappa-max, sqrt-ell (staircase family).
inline ScalarFilterFamily make_family(const std::string& name,
                                      const std::map<std::string, double>& params = {}) {
  const auto value_or = [&params](const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "soft") return soft_threshold_family();
  if (name == "huber-a") return huber_stationary_family(value_or("b", 1.0), value_or("d", 1.0));
  if (name == "huber-b") {
    return huber_nonstationary_family(value_or("b", 1.0), value_or("d", 1.0));
  }
  if (name == "pnp-c") {
    const double kappa_max = value_or("kappa-max", 1.0);
    return pnp_staircase_family(value_or("gamma", 0.9 / (kappa_max * kappa_max)), kappa_max,
                                value_or("sqrt-ell", 0.0) != 0.0);
  }
  if (name == "tikhonov") return tikhonov_family();
  if (name == "tsvd") return tsvd_family();
  DFD_REQUIRE(false, "unknown filter family '", name,
              "' (expected soft | huber-a | huber-b | pnp-c | tikhonov | tsvd)");
  return {};  // unreachable
}

// ---------------------------------------------------------------------------
// Induced coefficient-space regularizer
// ---------------------------------------------------------------------------

/// Separable penalty on coefficient vectors: term lambda evaluates
/// s_{alpha,lambda}(kappa_lambda x_lambda).
struct KappaRegularizer {
  std::vector<ScalarPenalty> penalties;  // already composed with kappa scaling
  bool stationary = false;

  double eval(const Eigen::VectorXd& x) const {
    DFD_REQUIRE(x.size() == static_cast<Eigen::Index>(penalties.size()),
                "KappaRegularizer: expected ", penalties.size(), " components, got ", x.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double term = penalties[static_cast<size_t>(i)].eval(x[i]);
      if (!std::isfinite(term)) return kInf;
      total += term;
    }
    return total;
  }
};

inline KappaRegularizer make_kappa_regularizer(const ScalarFilterFamily& f,
                                               const Eigen::VectorXd& kappa, double alpha) {
  DFD_REQUIRE(f.has_penalty(), "make_kappa_regularizer: family '", f.name,
              "' has no analytic penalty");
  f.require_alpha(alpha);
  KappaRegularizer r;
  r.stationary = f.stationary;
  r.penalties.reserve(static_cast<size_t>(kappa.size()));
  for (Eigen::Index i = 0; i < kappa.size(); ++i) {
    DFD_REQUIRE(kappa[i] > 0.0, "make_kappa_regularizer: kappa[", i, "] must be positive");
    r.penalties.push_back(scale_penalty(f.analytic_penalty(alpha, kappa[i]), 1.0, kappa[i]));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Filter axioms grid suite
// ---------------------------------------------------------------------------

/// Grid-check outcome for the four filter axioms. Worst values are signed
/// slacks: nonpositive means the axiom held everywhere on the grid.
struct FilterAxiomReport {
  bool monotone_pass = false;       // order preserved between grid neighbors
  bool nonexpansive_pass = false;   // differences never grow
  bool fixes_zero_pass = false;     // evaluate(alpha, kappa, 0) == 0 exactly
  bool identity_limit_pass = false; // evaluate -> id along the alpha schedule
  double monotone_worst = 0.0;
  double nonexpansive_worst = 0.0;
  double fixes_zero_worst = 0.0;
  double identity_limit_worst = 0.0;
  bool pass = false;
  std::string notes;
};

struct FilterAxiomOptions {
  std::vector<double> kappas = logspace(std::exp2(-6.0), 1.0, 7);
  std::vector<double> alphas = logspace(std::exp2(-10.0), 1.0, 11);
  /// Identity-limit schedule alpha = 2^-k, k = 0..identity_k_max, judged at
  /// the last k against identity_tol on c in [-10 kappa, 10 kappa].
  int identity_k_max = 20;
  double identity_tol = 1e-3;
  int c_points = 201;
  double c_span_over_kappa = 10.0;
  /// Comparison slacks; the looser value suits numerically inverted families.
  double monotone_slack = 4e-15;
  double nonexpansive_slack = 1e-12;
};

inline FilterAxiomReport check_filter_axioms(const ScalarFilterFamily& f,
                                             const FilterAxiomOptions& opt = {}) {
  FilterAxiomReport rep;
  rep.monotone_pass = rep.nonexpansive_pass = rep.fixes_zero_pass = true;
  double id_final_worst = 0.0;

  for (double kappa : opt.kappas) {
    const double span = opt.c_span_over_kappa * kappa;
    for (double alpha : opt.alphas) {
      if (alpha <= f.alpha_min || alpha > f.alpha_max) continue;
      // breakpoint-aware grid so piecewise families are sampled at kinks
      std::vector<double> grid = linspace(-span, span, opt.c_points);
      if (f.breakpoints) {
        for (double bp : f.breakpoints(alpha, kappa)) {
          for (double signed_bp : {bp, -bp}) {
            if (std::abs(signed_bp) <= span) grid.push_back(signed_bp);
          }
        }
        std::sort(grid.begin(), grid.end());
      }
      std::vector<double> values(grid.size());
      for (size_t i = 0; i < grid.size(); ++i) values[i] = f.evaluate(alpha, kappa, grid[i]);
      const double scale = std::max(1.0, span);
      for (size_t i = 0; i + 1 < grid.size(); ++i) {
        const double dc = grid[i + 1] - grid[i];
        const double dv = values[i + 1] - values[i];
        rep.monotone_worst = std::max(rep.monotone_worst, -dv - opt.monotone_slack * scale);
        rep.nonexpansive_worst =
            std::max(rep.nonexpansive_worst, std::abs(dv) - dc - opt.nonexpansive_slack * scale);
      }
      const double at_zero = std::abs(f.evaluate(alpha, kappa, 0.0));
      rep.fixes_zero_worst = std::max(rep.fixes_zero_worst, at_zero);
    }

    // identity limit along the dyadic alpha schedule
    const std::vector<double> c_grid = linspace(-span, span, opt.c_points);
    for (int k = 0; k <= opt.identity_k_max; ++k) {
      const double alpha = std::ldexp(1.0, -k);
      if (alpha <= f.alpha_min || alpha > f.alpha_max) continue;
      double worst = 0.0;
      for (double c : c_grid) {
        worst = std::max(worst, std::abs(f.evaluate(alpha, kappa, c) - c));
      }
      if (k == opt.identity_k_max) {
        id_final_worst = std::max(id_final_worst, worst);
      }
    }
  }

  rep.monotone_pass = rep.monotone_worst <= 0.0;
  rep.nonexpansive_pass = rep.nonexpansive_worst <= 0.0;
  rep.fixes_zero_pass = rep.fixes_zero_worst == 0.0;
  rep.identity_limit_worst = id_final_worst - opt.identity_tol;
  rep.identity_limit_pass = rep.identity_limit_worst <= 0.0;
  rep.pass = rep.monotone_pass && rep.nonexpansive_pass && rep.fixes_zero_pass &&
             rep.identity_limit_pass;
  rep.notes = cat("family ", f.name, ": identity-limit error ", id_final_worst,
                  " at alpha = 2^-", opt.identity_k_max);
  return rep;
}

}  // namespace dfd
