#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dfd/core/config.hpp"
#include "dfd/core/io.hpp"
#include "dfd/core/parallel.hpp"
#include "dfd/filters.hpp"
#include "dfd/problems.hpp"
#include "dfd/reconstruction.hpp"

namespace dfd {

// ---------------------------------------------------------------------------
// Rate experiments
// ---------------------------------------------------------------------------

/// A filter referenced by name plus its numeric parameters (the keys accepted
/// by make_family).
struct FilterSpec {
  std::string name;
  std::map<std::string, double> params;
};

/// Declarative description of a noise-level sweep: which filters to compare,
/// which relative noise levels and seeds to run, and how the regularization
/// strength is tied to the noise level. Built-in rules set alpha = C * delta
/// ("linear" and its alias "sqrt-compatible", both of which drive
/// delta^2/alpha = delta/C to zero); "custom" reads alpha from an explicit
/// (delta, alpha) table and has no C.
struct RateExperiment {
  InverseProblem problem;
  std::vector<FilterSpec> filters;
  std::vector<double> deltas;          // strictly increasing
  std::vector<std::uint64_t> seeds;    // nonempty; duplicates allowed
  std::string rule = "linear";
  bool auto_C = true;                  // grid-search C on a held-out seed
  double C = 1.0;                      // used when auto_C is false
  std::vector<std::pair<double, double>> custom_table;  // rule == "custom"
  int threads = 0;                     // 0 = global pool cap
};

/// One measurement: a single (filter, delta, seed) reconstruction. Failed
/// rows keep their key and alpha, carry NaN error, and record the reason.
struct RateRow {
  std::string filter;
  double delta = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double l2_error = kNaN;
  double runtime_ms = 0.0;
  bool failed = false;
  std::string message;
};

/// Mean/std of the non-failed rows of one (filter, delta) group; std is the
/// sample standard deviation (zero for a single row).
struct RateAggregate {
  std::string filter;
  double delta = 0.0;
  int count = 0;
  double mean_error = kNaN;
  double std_error = kNaN;
};

struct RateTable {
  std::vector<RateRow> rows;  // sorted by (filter, delta, seed)
  std::vector<RateAggregate> aggregates;
  std::map<std::string, double> chosen_C;  // per filter; NaN under "custom"
  std::string rule;
};

namespace detail {

inline bool is_builtin_rate_rule(const std::string& rule) {
  return rule == "linear" || rule == "sqrt-compatible";
}

inline double custom_table_alpha(const std::vector<std::pair<double, double>>& table,
                                 double delta) {
  for (const auto& [d, a] : table)
    if (d == delta) return a;
  DFD_REQUIRE(false, "parameter rule: no table entry for delta = ", delta);
  return kNaN;  // unreachable
}

inline void validate_rate_experiment(const RateExperiment& exp) {
  DFD_REQUIRE(exp.problem.x_true.size() > 0, "rate experiment: empty problem");
  DFD_REQUIRE(!exp.filters.empty(), "rate experiment: no filters given");
  for (std::size_t i = 0; i < exp.filters.size(); ++i)
    for (std::size_t j = i + 1; j < exp.filters.size(); ++j)
      DFD_REQUIRE(exp.filters[i].name != exp.filters[j].name,
                  "rate experiment: duplicate filter '", exp.filters[i].name, "'");
  DFD_REQUIRE(!exp.deltas.empty(), "rate experiment: no noise levels given");
  for (std::size_t i = 0; i + 1 < exp.deltas.size(); ++i)
    DFD_REQUIRE(exp.deltas[i] < exp.deltas[i + 1],
                "rate experiment: noise levels must be strictly increasing");
  DFD_REQUIRE(exp.deltas.front() >= 0.0, "rate experiment: noise levels must be >= 0");
  DFD_REQUIRE(!exp.seeds.empty(), "rate experiment: seeds must be nonempty");
  if (is_builtin_rate_rule(exp.rule)) {
    DFD_REQUIRE(exp.deltas.front() > 0.0, "rate experiment: the '", exp.rule,
                "' rule sets alpha = C*delta, which needs delta > 0; list delta = 0 ",
                "only with an explicit 'custom' table");
    if (!exp.auto_C)
      DFD_REQUIRE(exp.C > 0.0, "rate experiment: C must be positive, got ", exp.C);
  } else if (exp.rule == "custom") {
    DFD_REQUIRE(!exp.auto_C, "rate experiment: the 'custom' rule fixes alpha per delta ",
                "and has no C to auto-select");
    DFD_REQUIRE(!exp.custom_table.empty(), "rate experiment: empty custom alpha table");
    for (const auto& [d, a] : exp.custom_table)
      DFD_REQUIRE(a > 0.0, "rate experiment: custom alpha for delta = ", d,
                  " must be positive, got ", a);
    // Sampled proxy of the vanishing-ratio requirement: delta^2/alpha must
    // shrink together with delta along the schedule.
    double prev_ratio = -kInf;
    for (double delta : exp.deltas) {
      const double alpha = custom_table_alpha(exp.custom_table, delta);
      const double ratio = delta * delta / alpha;
      DFD_REQUIRE(ratio >= prev_ratio,
                  "rate experiment: custom table violates the vanishing-ratio ",
                  "requirement (delta^2/alpha must decrease as delta decreases)");
      prev_ratio = ratio;
    }
  } else {
    DFD_REQUIRE(false, "rate experiment: unknown rule '", exp.rule,
                "' (expected linear | sqrt-compatible | custom)");
  }
}

inline double rate_rule_alpha(const RateExperiment& exp, double used_C, double delta) {
  if (exp.rule == "custom") return custom_table_alpha(exp.custom_table, delta);
  return used_C * delta;
}

/// Builds the named families once, injecting the problem's largest
/// quasi-singular value where the staircase family needs it.
inline std::vector<ScalarFilterFamily> build_rate_families(const RateExperiment& exp) {
  std::vector<ScalarFilterFamily> families;
  families.reserve(exp.filters.size());
  for (const FilterSpec& spec : exp.filters) {
    std::map<std::string, double> params = spec.params;
    if (spec.name == "pnp-c" && !params.count("kappa-max"))
      params["kappa-max"] = exp.problem.dfd.max_kappa();
    families.push_back(make_family(spec.name, params));
  }
  return families;
}

/// Data-driven center for the C grid: a scale at which C*delta*||y|| matches
/// the size of a typical quasi-singular value times a typical coefficient.
inline double auto_C_scale(const InverseProblem& p) {
  Vec k = p.dfd.kappa;
  std::sort(k.begin(), k.end());
  const long n = k.size();
  const double median = n % 2 ? k(n / 2) : 0.5 * (k(n / 2 - 1) + k(n / 2));
  return median * p.y_exact.norm() / std::sqrt(static_cast<double>(p.y_exact.size()));
}

}  // namespace detail

/// Runs the full sweep: for every (filter, delta, seed) triple the problem's
/// data is perturbed, alpha is chosen by the experiment's rule, and the
/// filtered reconstruction error against the ground truth is recorded. When
/// C is auto-selected it is grid-searched per filter (10 log-spaced values
/// spanning a data-driven scale) on a held-out seed that is never part of
/// the evaluation seeds, minimizing the mean error over the noise levels.
/// Reconstruction failures mark their row instead of aborting the sweep.
inline RateTable run_rates(const RateExperiment& exp) {
  detail::validate_rate_experiment(exp);
  const std::vector<ScalarFilterFamily> families = detail::build_rate_families(exp);

  RateTable table;
  table.rule = exp.rule;

  // Per-filter C choice.
  std::vector<double> used_C(exp.filters.size(), kNaN);
  if (exp.rule == "custom") {
    for (std::size_t fi = 0; fi < exp.filters.size(); ++fi)
      table.chosen_C[exp.filters[fi].name] = kNaN;
  } else if (!exp.auto_C) {
    for (std::size_t fi = 0; fi < exp.filters.size(); ++fi) {
      used_C[fi] = exp.C;
      table.chosen_C[exp.filters[fi].name] = exp.C;
    }
  } else {
    DFD_REQUIRE(exp.problem.y_exact.norm() > 0.0,
                "rate experiment: auto C needs non-degenerate exact data");
    const double scale = detail::auto_C_scale(exp.problem);
    DFD_REQUIRE(scale > 0.0, "rate experiment: degenerate auto-C scale");
    std::vector<double> grid(10);
    for (int i = 0; i < 10; ++i)
      grid[static_cast<std::size_t>(i)] =
          (scale / 30.0) * std::pow(900.0, static_cast<double>(i) / 9.0);
    const std::uint64_t held_out = exp.seeds.front() ^ 0x9e3779b97f4a7c15ULL;
    std::vector<Vec> held_out_data;
    held_out_data.reserve(exp.deltas.size());
    for (double delta : exp.deltas)
      held_out_data.push_back(add_noise(exp.problem, {"gaussian", delta, held_out}));
    for (std::size_t fi = 0; fi < exp.filters.size(); ++fi) {
      const Reconstructor rec = make_reconstructor(exp.problem.dfd, families[fi]);
      double best_C = kNaN;
      double best_mean = kInf;
      for (double candidate : grid) {
        double total = 0.0;
        bool ok = true;
        for (std::size_t di = 0; di < exp.deltas.size() && ok; ++di) {
          try {
            const Vec x = reconstruct(rec, candidate * exp.deltas[di], held_out_data[di]).x;
            total += (x - exp.problem.x_true).norm();
          } catch (const std::exception&) {
            ok = false;
          }
        }
        if (!ok) continue;
        const double mean = total / static_cast<double>(exp.deltas.size());
        if (mean < best_mean) {
          best_mean = mean;
          best_C = candidate;
        }
      }
      DFD_REQUIRE(std::isfinite(best_C), "rate experiment: auto C failed for filter '",
                  exp.filters[fi].name, "' (every candidate errored)");
      used_C[fi] = best_C;
      table.chosen_C[exp.filters[fi].name] = best_C;
    }
  }

  // Noisy data is shared across filters; precompute it serially so the
  // parallel rows below write disjoint slots of a fixed layout.
  std::vector<Vec> noisy(exp.deltas.size() * exp.seeds.size());
  for (std::size_t di = 0; di < exp.deltas.size(); ++di)
    for (std::size_t si = 0; si < exp.seeds.size(); ++si)
      noisy[di * exp.seeds.size() + si] =
          add_noise(exp.problem, {"gaussian", exp.deltas[di], exp.seeds[si]});

  std::vector<Reconstructor> recs;
  recs.reserve(exp.filters.size());
  for (std::size_t fi = 0; fi < exp.filters.size(); ++fi)
    recs.push_back(make_reconstructor(exp.problem.dfd, families[fi]));

  const std::size_t per_filter = exp.deltas.size() * exp.seeds.size();
  table.rows.resize(exp.filters.size() * per_filter);
  parallel_for(
      table.rows.size(),
      [&](std::size_t job) {
        const std::size_t fi = job / per_filter;
        const std::size_t di = (job % per_filter) / exp.seeds.size();
        const std::size_t si = job % exp.seeds.size();
        RateRow& row = table.rows[job];
        row.filter = exp.filters[fi].name;
        row.delta = exp.deltas[di];
        row.seed = exp.seeds[si];
        row.alpha = detail::rate_rule_alpha(exp, used_C[fi], row.delta);
        const auto start = std::chrono::steady_clock::now();
        try {
          const Vec x = reconstruct(recs[fi], row.alpha, noisy[di * exp.seeds.size() + si]).x;
          row.l2_error = (x - exp.problem.x_true).norm();
        } catch (const std::exception& e) {
          row.failed = true;
          row.message = e.what();
          row.l2_error = kNaN;
        }
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      start)
                .count();
      },
      exp.threads);

  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const RateRow& a, const RateRow& b) {
                     if (a.filter != b.filter) return a.filter < b.filter;
                     if (a.delta != b.delta) return a.delta < b.delta;
                     return a.seed < b.seed;
                   });

  for (std::size_t i = 0; i < table.rows.size();) {
    std::size_t j = i;
    double sum = 0.0;
    int count = 0;
    while (j < table.rows.size() && table.rows[j].filter == table.rows[i].filter &&
           table.rows[j].delta == table.rows[i].delta) {
      if (!table.rows[j].failed) {
        sum += table.rows[j].l2_error;
        ++count;
      }
      ++j;
    }
    RateAggregate agg;
    agg.filter = table.rows[i].filter;
    agg.delta = table.rows[i].delta;
    agg.count = count;
    if (count > 0) {
      agg.mean_error = sum / count;
      double ss = 0.0;
      for (std::size_t r = i; r < j; ++r) {
        if (table.rows[r].failed) continue;
        const double d = table.rows[r].l2_error - agg.mean_error;
        ss += d * d;
      }
      agg.std_error = count > 1 ? std::sqrt(ss / (count - 1)) : 0.0;
    }
    table.aggregates.push_back(std::move(agg));
    i = j;
  }
  return table;
}

/// Renders the measurement rows as CSV. The runtime column (the only
/// non-deterministic output) can be dropped so reruns compare byte-for-byte.
inline std::string rate_table_csv(const RateTable& table, bool include_runtime = true) {
  std::string out =
      include_runtime ? "filter,delta,alpha,seed,l2_error,runtime_ms\n"
                      : "filter,delta,alpha,seed,l2_error\n";
  for (const RateRow& row : table.rows) {
    out += row.filter;
    out += ',';
    out += format_double(row.delta);
    out += ',';
    out += format_double(row.alpha);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += format_double(row.l2_error);
    if (include_runtime) {
      out += ',';
      out += format_double(row.runtime_ms);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stability sweeps
// ---------------------------------------------------------------------------

struct StabilityRow {
  double perturbation_norm = 0.0;
  double output_difference = 0.0;
  double ratio = 0.0;  // output_difference / perturbation_norm (0 at norm 0)
};

struct StabilityTable {
  std::string filter;
  double alpha = 0.0;
  std::vector<StabilityRow> rows;
  /// Ratio cap derived from the filter's threshold/slope constants and the
  /// frame operator norms; NaN when the family does not carry them.
  double bound = kNaN;
  bool bound_available = false;
};

/// Reconstructs from increasingly small perturbations of the exact data along
/// one fixed random direction and records how the output difference shrinks.
/// With a fixed direction every scalar channel moves monotonically, so the
/// differences decrease with the schedule; the sweep enforces that up to a
/// 1e-12 floor. The perturbation norms must be non-increasing.
inline StabilityTable run_stability_sweep(const InverseProblem& problem,
                                          const ScalarFilterFamily& family, double alpha,
                                          const std::vector<double>& perturbation_norms,
                                          std::uint64_t seed = 20240817u) {
  DFD_REQUIRE(alpha > 0.0, "stability sweep: alpha must be positive, got ", alpha);
  DFD_REQUIRE(!perturbation_norms.empty(), "stability sweep: empty schedule");
  for (std::size_t k = 0; k < perturbation_norms.size(); ++k) {
    DFD_REQUIRE(perturbation_norms[k] >= 0.0, "stability sweep: negative perturbation");
    if (k > 0)
      DFD_REQUIRE(perturbation_norms[k] <= perturbation_norms[k - 1],
                  "stability sweep: schedule must be non-increasing");
  }

  const Reconstructor rec = make_reconstructor(problem.dfd, family);
  const Vec base = reconstruct(rec, alpha, problem.y_exact).x;
  const Vec z = analysis(problem.dfd.v, problem.y_exact);

  Rng rng(seed);
  Vec direction(problem.y_exact.size());
  for (long i = 0; i < direction.size(); ++i) direction(i) = rng.normal();
  DFD_ENSURE(direction.norm() > 0.0, "stability sweep: degenerate direction");
  direction /= direction.norm();

  StabilityTable table;
  table.filter = family.name;
  table.alpha = alpha;

  double max_delta_coeff = 0.0;
  std::vector<Vec> perturbed;
  perturbed.reserve(perturbation_norms.size());
  for (double norm : perturbation_norms) {
    Vec y = problem.y_exact + norm * direction;
    max_delta_coeff =
        std::max(max_delta_coeff, (analysis(problem.dfd.v, y) - z).norm());
    perturbed.push_back(std::move(y));
  }

  if (family.constants.has_d() && family.constants.has_e()) {
    const double a_floor = family.constants.d * alpha /
                           (z.lpNorm<Eigen::Infinity>() + max_delta_coeff);
    table.bound = std::sqrt(1.0 / (a_floor * a_floor) +
                            family.constants.e * family.constants.e / alpha) *
                  frame_operator_norm(problem.dfd.v) *
                  frame_operator_norm(problem.dfd.u_dual);
    table.bound_available = true;
  }

  double prev_diff = kInf;
  for (std::size_t k = 0; k < perturbation_norms.size(); ++k) {
    StabilityRow row;
    row.perturbation_norm = perturbation_norms[k];
    row.output_difference = (reconstruct(rec, alpha, perturbed[k]).x - base).norm();
    row.ratio = row.perturbation_norm > 0.0
                    ? row.output_difference / row.perturbation_norm
                    : 0.0;
    DFD_ENSURE(row.output_difference <= prev_diff + 1e-12,
               "stability sweep: output differences failed to shrink (",
               row.output_difference, " after ", prev_diff, ")");
    prev_diff = row.output_difference;
    table.rows.push_back(row);
  }
  return table;
}

inline std::string stability_table_csv(const StabilityTable& table) {
  std::string out = "perturbation_norm,output_difference,ratio,bound\n";
  for (const StabilityRow& row : table.rows) {
    out += format_double(row.perturbation_norm);
    out += ',';
    out += format_double(row.output_difference);
    out += ',';
    out += format_double(row.ratio);
    out += ',';
    out += format_double(table.bound);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

/// Parameter schedule for a noise-to-zero sweep: delta_k = 2^-k for
/// k = k_min..k_max, alpha from the rule, fresh noise per (k, seed).
struct ConvergenceRule {
  std::string rule = "linear";  // "linear" | "sqrt-compatible" | "custom"
  double C = 1.0;
  std::vector<std::pair<double, double>> custom_table;
  int k_min = 1;
  int k_max = 12;
  std::vector<std::uint64_t> seeds = {1};
  /// Ceiling on the final step's mean relative error; the sweep throws when
  /// it is exceeded.
  double threshold = 1e-2;
};

struct ConvergenceRow {
  int k = 0;
  double delta = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double relative_error = kNaN;
  /// Relative error of the noise-free reconstruction at the same alpha (the
  /// pure regularization bias).
  double bias_relative_error = kNaN;
};

struct ConvergenceAggregate {
  int k = 0;
  double delta = 0.0;
  double alpha = 0.0;
  int count = 0;
  double mean = kNaN;
  double stddev = kNaN;
  double bias = kNaN;
};

struct ConvergenceTable {
  std::string filter;
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceAggregate> aggregates;
  double threshold = 0.0;
};

/// Shrinks the noise level geometrically while tightening alpha by the rule
/// and records relative errors plus the noise-free bias column. Asserts that
/// the final mean relative error lands under the rule's threshold.
inline ConvergenceTable run_convergence_sweep(const InverseProblem& problem,
                                              const ScalarFilterFamily& family,
                                              const ConvergenceRule& rule = {}) {
  DFD_REQUIRE(problem.x_true.norm() > 0.0,
              "convergence sweep: needs a nonzero ground truth");
  DFD_REQUIRE(rule.k_min >= 1 && rule.k_min <= rule.k_max,
              "convergence sweep: bad k range [", rule.k_min, ", ", rule.k_max, "]");
  DFD_REQUIRE(!rule.seeds.empty(), "convergence sweep: seeds must be nonempty");
  const bool builtin = detail::is_builtin_rate_rule(rule.rule);
  if (builtin) {
    DFD_REQUIRE(rule.C > 0.0, "convergence sweep: C must be positive, got ", rule.C);
  } else {
    DFD_REQUIRE(rule.rule == "custom", "convergence sweep: unknown rule '", rule.rule,
                "' (expected linear | sqrt-compatible | custom)");
  }

  const Reconstructor rec = make_reconstructor(problem.dfd, family);
  const double x_norm = problem.x_true.norm();

  ConvergenceTable table;
  table.filter = family.name;
  table.threshold = rule.threshold;

  for (int k = rule.k_min; k <= rule.k_max; ++k) {
    const double delta = std::ldexp(1.0, -k);
    const double alpha =
        builtin ? rule.C * delta : detail::custom_table_alpha(rule.custom_table, delta);
    const double bias =
        (reconstruct(rec, alpha, problem.y_exact).x - problem.x_true).norm() / x_norm;

    ConvergenceAggregate agg;
    agg.k = k;
    agg.delta = delta;
    agg.alpha = alpha;
    agg.bias = bias;

    double sum = 0.0;
    std::vector<double> errors;
    errors.reserve(rule.seeds.size());
    for (std::uint64_t seed : rule.seeds) {
      const std::uint64_t row_seed =
          seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k));
      const Vec y = add_noise(problem, {"gaussian", delta, row_seed});
      const double err = (reconstruct(rec, alpha, y).x - problem.x_true).norm() / x_norm;
      table.rows.push_back({k, delta, alpha, seed, err, bias});
      errors.push_back(err);
      sum += err;
    }
    agg.count = static_cast<int>(errors.size());
    agg.mean = sum / static_cast<double>(errors.size());
    double ss = 0.0;
    for (double e : errors) ss += (e - agg.mean) * (e - agg.mean);
    agg.stddev = errors.size() > 1 ? std::sqrt(ss / (static_cast<double>(errors.size()) - 1.0))
                                   : 0.0;
    table.aggregates.push_back(agg);
  }

  DFD_ENSURE(table.aggregates.back().mean < rule.threshold,
             "convergence sweep: final mean relative error ",
             table.aggregates.back().mean, " exceeds the threshold ", rule.threshold,
             " (filter '", family.name, "')");
  return table;
}

inline std::string convergence_table_csv(const ConvergenceTable& table) {
  std::string out = "k,delta,alpha,seed,relative_error,bias_relative_error\n";
  for (const ConvergenceRow& row : table.rows) {
    out += std::to_string(row.k);
    out += ',';
    out += format_double(row.delta);
    out += ',';
    out += format_double(row.alpha);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += format_double(row.relative_error);
    out += ',';
    out += format_double(row.bias_relative_error);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config binding
// ---------------------------------------------------------------------------

namespace detail {

inline void check_known_keys(const Config& c, const std::vector<std::string>& known,
                             const std::vector<std::string>& known_prefixes) {
  for (const auto& [key, value] : c) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    bool matched = false;
    for (const std::string& prefix : known_prefixes)
      if (key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0)
        matched = true;
    if (!matched) config_field_fail(key, "is not a recognized setting");
  }
}

}  // namespace detail

/// Builds a problem from "problem.*" settings. Types: "diagonal" (log-spaced
/// kappas, random ground truth), "matrix" (random factors with prescribed
/// conditioning), "radon" (discrete tomography with a named phantom).
inline InverseProblem problem_from_config(const Config& c) {
  const std::string type = config_string(c, "problem.type");
  if (type == "diagonal") {
    const long long n = config_integer(c, "problem.n", 32);
    DFD_REQUIRE(n >= 1, "config: field 'problem.n' must be >= 1");
    const double kappa_min = config_number(c, "problem.kappa-min", 1e-3);
    const double kappa_max = config_number(c, "problem.kappa-max", 1.0);
    DFD_REQUIRE(kappa_min > 0.0 && kappa_min <= kappa_max,
                "config: need 0 < problem.kappa-min <= problem.kappa-max");
    const std::uint64_t seed =
        static_cast<std::uint64_t>(config_integer(c, "problem.seed", 1));
    const std::string x_kind = config_string(c, "problem.x-kind", "normal");
    const double x_scale = config_number(c, "problem.x-scale", 1.0);
    const double density = config_number(c, "problem.density", 0.1);

    Vec kappas(n);
    for (long long i = 0; i < n; ++i) {
      const double t = n > 1 ? static_cast<double>(i) / (static_cast<double>(n) - 1.0) : 0.0;
      kappas(i) = std::exp(std::log(kappa_min) + t * (std::log(kappa_max) - std::log(kappa_min)));
    }
    Rng rng(seed);
    Vec x(n);
    if (x_kind == "normal") {
      for (long long i = 0; i < n; ++i) x(i) = x_scale * rng.normal();
    } else if (x_kind == "sparse") {
      DFD_REQUIRE(density > 0.0 && density <= 1.0,
                  "config: field 'problem.density' must be in (0, 1]");
      bool any = false;
      for (long long i = 0; i < n; ++i) {
        const bool on = rng.uniform() < density;
        const double value = rng.normal();  // always drawn, keeps the stream aligned
        x(i) = on ? x_scale * value : 0.0;
        any = any || on;
      }
      if (!any) x(0) = x_scale;
    } else {
      DFD_REQUIRE(false, "config: field 'problem.x-kind' must be 'normal' or 'sparse'");
    }
    return make_diagonal_problem(kappas, x);
  }
  if (type == "matrix") {
    return make_matrix_problem(
        static_cast<int>(config_integer(c, "problem.rows", 20)),
        static_cast<int>(config_integer(c, "problem.cols", 20)),
        config_number(c, "problem.condition", 100.0),
        static_cast<std::uint64_t>(config_integer(c, "problem.seed", 1)));
  }
  if (type == "radon") {
    return make_radon_problem(static_cast<int>(config_integer(c, "problem.size", 32)),
                              static_cast<int>(config_integer(c, "problem.angles", 48)),
                              config_string(c, "problem.phantom", "blocks"),
                              static_cast<int>(config_integer(c, "problem.levels", 3)));
  }
  DFD_REQUIRE(false, "config: field 'problem.type' must be diagonal | matrix | radon");
  return {};  // unreachable
}

/// Builds a rate experiment from a config: [problem] settings as above plus
/// [experiment] filters/deltas/seeds/rule/C (C is a number or the string
/// "auto") and optional [filter.<name>] parameter sections.
inline RateExperiment rate_experiment_from_config(const Config& c) {
  static const std::vector<std::string> known = {
      "problem.type",      "problem.n",         "problem.kappa-min",
      "problem.kappa-max", "problem.seed",      "problem.x-kind",
      "problem.x-scale",   "problem.density",   "problem.rows",
      "problem.cols",      "problem.condition", "problem.size",
      "problem.angles",    "problem.phantom",   "problem.levels",
      "experiment.filters", "experiment.deltas", "experiment.seeds",
      "experiment.rule",   "experiment.C",      "experiment.threads",
      "experiment.custom-deltas", "experiment.custom-alphas"};
  detail::check_known_keys(c, known, {"filter."});

  RateExperiment exp;
  exp.problem = problem_from_config(c);

  static const std::vector<std::string> filter_param_keys = {"b", "d", "gamma", "kappa-max",
                                                             "sqrt-ell"};
  for (const std::string& name : config_strings(c, "experiment.filters")) {
    FilterSpec spec;
    spec.name = name;
    const std::string prefix = "filter." + name + ".";
    for (const auto& [key, value] : c) {
      (void)value;
      if (key.size() <= prefix.size() || key.compare(0, prefix.size(), prefix) != 0) continue;
      const std::string param = key.substr(prefix.size());
      if (std::find(filter_param_keys.begin(), filter_param_keys.end(), param) ==
          filter_param_keys.end())
        config_field_fail(key, "is not a recognized filter parameter");
      spec.params[param] = config_number(c, key);
    }
    exp.filters.push_back(std::move(spec));
  }

  exp.deltas = config_numbers(c, "experiment.deltas");
  exp.seeds = config_seeds(c, "experiment.seeds");
  exp.rule = config_string(c, "experiment.rule", "linear");
  exp.threads = static_cast<int>(config_integer(c, "experiment.threads", 0));

  if (config_has(c, "experiment.C")) {
    const ConfigValue& v = config_at(c, "experiment.C");
    if (v.kind == ConfigValue::Kind::string) {
      DFD_REQUIRE(v.str == "auto",
                  "config: field 'experiment.C' must be a number or the string \"auto\"");
      exp.auto_C = true;
    } else if (v.kind == ConfigValue::Kind::number) {
      exp.auto_C = false;
      exp.C = v.number;
    } else {
      config_field_fail("experiment.C", "must be a number or the string \"auto\"");
    }
  }

  if (config_has(c, "experiment.custom-deltas") || config_has(c, "experiment.custom-alphas")) {
    const std::vector<double> ds = config_numbers(c, "experiment.custom-deltas");
    const std::vector<double> as = config_numbers(c, "experiment.custom-alphas");
    DFD_REQUIRE(ds.size() == as.size(),
                "config: custom-deltas and custom-alphas must have equal lengths");
    for (std::size_t i = 0; i < ds.size(); ++i) exp.custom_table.emplace_back(ds[i], as[i]);
    if (exp.rule == "custom") exp.auto_C = false;
  }
  return exp;
}

}  // namespace dfd
