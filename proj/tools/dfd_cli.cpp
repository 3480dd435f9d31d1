// Command-line front end: filter verification, single reconstructions, rate
// sweeps, plug-and-play runs, and analytic property checks.
//
// Exit codes: 0 when every requested check passed, 1 when a numeric check or
// run failed, 2 on usage errors (unknown flags or names, malformed configs,
// I/O and dimension problems). With --json each subcommand prints one JSON
// report on stdout; otherwise the same report is flattened to key: value
// lines. All randomness is derived from the seed flags.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "dfd/assumptions.hpp"
#include "dfd/core/config.hpp"
#include "dfd/core/grid.hpp"
#include "dfd/core/io.hpp"
#include "dfd/core/parallel.hpp"
#include "dfd/core/rng.hpp"
#include "dfd/filters.hpp"
#include "dfd/harness.hpp"
#include "dfd/pnp.hpp"
#include "dfd/problems.hpp"
#include "dfd/prox_checks.hpp"
#include "dfd/reconstruction.hpp"
#include "dfd/report_json.hpp"
#include "dfd/version.hpp"

namespace {

using nlohmann::json;

struct GlobalOptions {
  bool json_output = false;
  std::uint64_t seed = 1;
  int threads = 0;
  bool no_timing = false;
};

// ---------------------------------------------------------------------------
// Report printing
// ---------------------------------------------------------------------------

bool is_scalar_array(const json& node) {
  for (const json& item : node) {
    if (item.is_object() || item.is_array()) return false;
  }
  return true;
}

void print_human(const json& node, const std::string& prefix) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      print_human(value, prefix.empty() ? key : prefix + "." + key);
    }
    return;
  }
  if (node.is_array() && !is_scalar_array(node)) {
    std::size_t i = 0;
    for (const json& item : node) {
      print_human(item, prefix + "[" + std::to_string(i) + "]");
      ++i;
    }
    return;
  }
  std::cout << prefix << ": " << node.dump() << "\n";
}

void print_report(const GlobalOptions& g, const json& report) {
  if (g.json_output) {
    std::cout << report.dump(2) << "\n";
  } else {
    print_human(report, "");
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  DFD_REQUIRE(out.good(), "cannot open '", path, "' for writing");
  out << content;
  DFD_REQUIRE(out.good(), "write failed for '", path, "'");
}

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

struct FamilyFlags {
  std::string family;
  double b = 1.0;
  double d = 1.0;
  double gamma = 0.0;
  double kappa_max = 1.0;
  bool sqrt_ell = false;
  CLI::Option* opt_b = nullptr;
  CLI::Option* opt_d = nullptr;
  CLI::Option* opt_gamma = nullptr;
  CLI::Option* opt_kappa_max = nullptr;
  CLI::Option* opt_sqrt_ell = nullptr;
};

// `with_kappa_max = false` on subcommands that build a problem: there the
// staircase family's kappa ceiling is taken from the problem's decomposition
// and the `--kappa-max` flag belongs to the problem instead.
void add_family_flags(CLI::App* cmd, FamilyFlags& f, bool required, bool with_kappa_max) {
  auto* fam = cmd->add_option("--family", f.family,
                              "filter family: soft | huber-a | huber-b | pnp-c | "
                              "tikhonov | tsvd");
  if (required) {
    fam->required();
  }
  f.opt_b = cmd->add_option("--b", f.b, "curvature parameter of the corner-smoothed families");
  f.opt_d = cmd->add_option("--d", f.d, "threshold parameter of the corner-smoothed families");
  f.opt_gamma =
      cmd->add_option("--gamma", f.gamma, "gradient step size of the staircase family");
  if (with_kappa_max) {
    f.opt_kappa_max = cmd->add_option("--kappa-max", f.kappa_max,
                                      "kappa ceiling of the staircase family");
  }
  f.opt_sqrt_ell = cmd->add_flag("--sqrt-ell", f.sqrt_ell,
                                 "use the square-root shape of the staircase "
                                 "family's Lipschitz rule");
}

// Only flags the user actually passed become parameters, so each family keeps
// its documented defaults otherwise.
std::map<std::string, double> family_params(const FamilyFlags& f) {
  std::map<std::string, double> params;
  if (f.opt_b && f.opt_b->count()) params["b"] = f.b;
  if (f.opt_d && f.opt_d->count()) params["d"] = f.d;
  if (f.opt_gamma && f.opt_gamma->count()) params["gamma"] = f.gamma;
  if (f.opt_kappa_max && f.opt_kappa_max->count()) params["kappa-max"] = f.kappa_max;
  if (f.opt_sqrt_ell && f.opt_sqrt_ell->count()) params["sqrt-ell"] = 1.0;
  return params;
}

json family_params_json(const std::map<std::string, double>& params) {
  json out = json::object();
  for (const auto& [key, value] : params) out[key] = dfd::json_number(value);
  return out;
}

struct ProblemFlags {
  std::string type = "diagonal";
  long long n = 32;
  double kappa_min = 1e-3;
  double kappa_max = 1.0;
  std::uint64_t seed = 1;
  std::string x_kind = "normal";
  double x_scale = 1.0;
  double density = 0.1;
  long long rows = 20;
  long long cols = 20;
  double condition = 100.0;
  long long size = 32;
  long long angles = 48;
  std::string phantom = "blocks";
  long long levels = 3;
  CLI::Option* opt_seed = nullptr;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& p) {
  cmd->add_option("--problem", p.type, "problem type: diagonal | matrix | radon");
  cmd->add_option("--n", p.n, "diagonal: number of components");
  cmd->add_option("--kappa-min", p.kappa_min, "diagonal: smallest quasi-singular value");
  cmd->add_option("--kappa-max", p.kappa_max, "diagonal: largest quasi-singular value");
  p.opt_seed = cmd->add_option("--problem-seed", p.seed,
                               "seed for the problem's random draws (defaults to --seed)");
  cmd->add_option("--x-kind", p.x_kind, "diagonal ground truth: normal | sparse");
  cmd->add_option("--x-scale", p.x_scale, "scale of the random ground truth");
  cmd->add_option("--density", p.density, "diagonal sparse ground truth: on-probability");
  cmd->add_option("--rows", p.rows, "matrix: row count");
  cmd->add_option("--cols", p.cols, "matrix: column count");
  cmd->add_option("--condition", p.condition, "matrix: condition number");
  cmd->add_option("--size", p.size, "radon: image side length (power of two)");
  cmd->add_option("--angles", p.angles, "radon: number of projection angles");
  cmd->add_option("--phantom", p.phantom, "radon: blocks | shepp-logan-like");
  cmd->add_option("--levels", p.levels, "radon: wavelet levels");
}

dfd::InverseProblem build_problem(const GlobalOptions& g, const ProblemFlags& p) {
  const std::uint64_t seed = (p.opt_seed && p.opt_seed->count()) ? p.seed : g.seed;
  dfd::Config cfg;
  cfg["problem.type"] = dfd::ConfigValue::make_string(p.type);
  cfg["problem.n"] = dfd::ConfigValue::make_number(static_cast<double>(p.n));
  cfg["problem.kappa-min"] = dfd::ConfigValue::make_number(p.kappa_min);
  cfg["problem.kappa-max"] = dfd::ConfigValue::make_number(p.kappa_max);
  cfg["problem.seed"] = dfd::ConfigValue::make_number(static_cast<double>(seed));
  cfg["problem.x-kind"] = dfd::ConfigValue::make_string(p.x_kind);
  cfg["problem.x-scale"] = dfd::ConfigValue::make_number(p.x_scale);
  cfg["problem.density"] = dfd::ConfigValue::make_number(p.density);
  cfg["problem.rows"] = dfd::ConfigValue::make_number(static_cast<double>(p.rows));
  cfg["problem.cols"] = dfd::ConfigValue::make_number(static_cast<double>(p.cols));
  cfg["problem.condition"] = dfd::ConfigValue::make_number(p.condition);
  cfg["problem.size"] = dfd::ConfigValue::make_number(static_cast<double>(p.size));
  cfg["problem.angles"] = dfd::ConfigValue::make_number(static_cast<double>(p.angles));
  cfg["problem.phantom"] = dfd::ConfigValue::make_string(p.phantom);
  cfg["problem.levels"] = dfd::ConfigValue::make_number(static_cast<double>(p.levels));
  return dfd::problem_from_config(cfg);
}

// The staircase family needs the decomposition's kappa ceiling; inject it when
// the user did not fix one explicitly.
dfd::ScalarFilterFamily family_for_problem(const FamilyFlags& ff, const dfd::DFD& dfd,
                                           std::map<std::string, double>* used = nullptr) {
  std::map<std::string, double> params = family_params(ff);
  if (ff.family == "pnp-c" && params.find("kappa-max") == params.end()) {
    params["kappa-max"] = dfd.max_kappa();
  }
  if (used) *used = params;
  return dfd::make_family(ff.family, params);
}

json constants_json(const dfd::FilterConstants& c) {
  json out = json::object();
  if (c.has_b()) out["b"] = c.b;
  if (c.has_c()) out["c"] = c.c;
  if (c.has_d()) out["d"] = c.d;
  if (c.has_e()) out["e"] = c.e;
  if (c.has_C()) out["C"] = c.C;
  if (c.has_gamma()) out["gamma"] = c.gamma;
  return out;
}

// ---------------------------------------------------------------------------
// verify-filter
// ---------------------------------------------------------------------------

struct VerifyFilterOptions {
  FamilyFlags family;
  std::vector<std::string> checks;
  int grid_points = 101;
};

int cmd_verify_filter(const GlobalOptions& g, const VerifyFilterOptions& opt) {
  const dfd::ScalarFilterFamily family = dfd::make_family(opt.family.family,
                                                          family_params(opt.family));

  std::vector<std::string> requested = opt.checks;
  if (requested.empty()) requested.push_back("F");
  for (const std::string& token : requested) {
    DFD_REQUIRE(token == "A" || token == "B" || token == "C" || token == "F",
                "--check must be one of A | B | C | F, got '", token, "'");
  }

  const std::vector<double> kappas = dfd::logspace(std::exp2(-6.0), 1.0, 7);
  const std::vector<double> alphas = dfd::logspace(std::exp2(-10.0), 1.0, 11);
  const std::vector<double> value_grid = dfd::linspace(-10.0, 10.0, opt.grid_points);

  json checks = json::object();
  bool all_pass = true;

  // the axiom suite always runs; A/B/C add their checkers on top
  const dfd::FilterAxiomReport axioms = dfd::check_filter_axioms(family);
  checks["F"] = dfd::to_json(axioms);
  all_pass = all_pass && axioms.pass;

  for (const std::string& token : requested) {
    if (token == "F" || checks.contains(token)) continue;
    dfd::AssumptionReport rep;
    if (token == "A") {
      rep = dfd::check_assumption_A(family, kappas, alphas, value_grid);
    } else if (token == "B") {
      rep = dfd::check_assumption_B(family, kappas, alphas, value_grid);
    } else {
      double kappa_top = 0.0;
      for (double k : kappas) kappa_top = std::max(kappa_top, k);
      const double gamma = family.constants.has_gamma() ? family.constants.gamma
                                                        : 0.9 / (kappa_top * kappa_top);
      rep = dfd::check_assumption_C(family, kappas, alphas, gamma);
    }
    checks[token] = dfd::to_json(rep);
    all_pass = all_pass && rep.pass;
  }

  const json report = {{"command", "verify-filter"},
                       {"family", family.name},
                       {"constants", constants_json(family.constants)},
                       {"checks", checks},
                       {"pass", all_pass}};
  print_report(g, report);
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructOptions {
  ProblemFlags problem;
  FamilyFlags family;
  double alpha = 0.0;
  double delta = 0.0;
  std::uint64_t noise_seed = 1;
  CLI::Option* opt_noise_seed = nullptr;
  std::string input;
  std::string output;
};

int cmd_reconstruct(const GlobalOptions& g, const ReconstructOptions& opt) {
  const dfd::InverseProblem problem = build_problem(g, opt.problem);
  std::map<std::string, double> used_params;
  const dfd::ScalarFilterFamily family =
      family_for_problem(opt.family, problem.dfd, &used_params);

  dfd::Vec y;
  std::string data_source;
  if (!opt.input.empty()) {
    y = dfd::read_csv_vector(opt.input);
    data_source = opt.input;
  } else {
    dfd::NoiseModel noise;
    noise.level = opt.delta;
    noise.seed = (opt.opt_noise_seed && opt.opt_noise_seed->count()) ? opt.noise_seed : g.seed;
    y = dfd::add_noise(problem, noise);
    data_source = "synthetic";
  }

  const dfd::Reconstructor r = dfd::make_reconstructor(problem.dfd, family);
  const dfd::ReconstructionResult result = dfd::reconstruct(r, opt.alpha, y);

  const double l2_error = (result.x - problem.x_true).norm();
  const double truth_norm = problem.x_true.norm();
  json summary = {{"command", "reconstruct"},
                  {"problem", problem.description},
                  {"filter", family.name},
                  {"params", family_params_json(used_params)},
                  {"alpha", dfd::json_number(opt.alpha)},
                  {"delta", dfd::json_number(opt.delta)},
                  {"data", data_source},
                  {"n", static_cast<long long>(result.x.size())},
                  {"l2_error", dfd::json_number(l2_error)},
                  {"relative_error",
                   dfd::json_number(truth_norm > 0.0 ? l2_error / truth_norm : l2_error)},
                  {"regularizer_value", dfd::json_number(result.regularizer_value)},
                  {"in_domain", result.in_domain}};

  if (!opt.output.empty()) {
    const std::string csv_path = opt.output + ".csv";
    const std::string json_path = opt.output + ".json";
    dfd::write_csv(csv_path, result.x);
    summary["outputs"] = {{"csv", csv_path}, {"summary", json_path}};
    write_text(json_path, summary.dump(2) + "\n");
  }

  print_report(g, summary);
  return 0;
}

// ---------------------------------------------------------------------------
// rates
// ---------------------------------------------------------------------------

struct RatesOptions {
  std::string config_path;
  std::string out_path;
};

std::string metadata_path_for(const std::string& out_path) {
  const std::string suffix = ".csv";
  std::string base = out_path;
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    base.resize(base.size() - suffix.size());
  }
  return base + ".meta.json";
}

int cmd_rates(const GlobalOptions& g, const RatesOptions& opt) {
  const dfd::Config cfg = dfd::load_config(opt.config_path);
  dfd::RateExperiment exp = dfd::rate_experiment_from_config(cfg);
  if (g.threads > 0) exp.threads = g.threads;

  const dfd::RateTable table = dfd::run_rates(exp);

  const std::string csv = dfd::rate_table_csv(table, !g.no_timing);
  write_text(opt.out_path, csv);
  const std::string meta_path = metadata_path_for(opt.out_path);
  json meta = dfd::rate_metadata_json(exp, table);
  meta["csv_header"] = csv.substr(0, csv.find('\n'));
  write_text(meta_path, meta.dump(2) + "\n");

  std::size_t failed = 0;
  for (const dfd::RateRow& row : table.rows) {
    if (row.failed) ++failed;
  }

  json chosen = json::object();
  for (const auto& [name, c] : table.chosen_C) chosen[name] = dfd::json_number(c);
  const json report = {{"command", "rates"},
                       {"config", opt.config_path},
                       {"problem", exp.problem.description},
                       {"rule", table.rule},
                       {"chosen_C", chosen},
                       {"rows", static_cast<long long>(table.rows.size())},
                       {"failed_rows", static_cast<long long>(failed)},
                       {"aggregates", dfd::to_json(table).at("aggregates")},
                       {"outputs", {{"csv", opt.out_path}, {"metadata", meta_path}}}};
  print_report(g, report);
  return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// pnp
// ---------------------------------------------------------------------------

struct PnPOptions {
  long long n = 16;
  double kappa_min = 0.25;
  std::uint64_t problem_seed = 1;
  CLI::Option* opt_problem_seed = nullptr;
  double x_scale = 1.0;
  FamilyFlags family;
  double gamma = 0.0;
  CLI::Option* opt_gamma = nullptr;
  int k_max = 10;
  double alpha = 0.0;
  CLI::Option* opt_alpha = nullptr;
  double tol = 1e-8;
  double final_tol = 0.5;
};

int cmd_pnp(const GlobalOptions& g, const PnPOptions& opt) {
  DFD_REQUIRE(opt.n >= 1, "--n must be >= 1");
  DFD_REQUIRE(opt.kappa_min > 0.0 && opt.kappa_min <= 1.0,
              "--kappa-min must lie in (0, 1]");
  DFD_REQUIRE(opt.k_max >= 1, "--k-max must be >= 1");

  // diagonal sandbox: kappas log-spaced up to 1, random ground truth
  const std::uint64_t problem_seed =
      (opt.opt_problem_seed && opt.opt_problem_seed->count()) ? opt.problem_seed : g.seed;
  const long long n = opt.n;
  dfd::Vec kappa(n);
  for (long long i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / (static_cast<double>(n) - 1.0) : 0.0;
    kappa(i) = std::exp(std::log(opt.kappa_min) * (1.0 - t));
  }
  dfd::Rng rng(problem_seed);
  dfd::Vec x_true(n);
  for (long long i = 0; i < n; ++i) x_true(i) = opt.x_scale * rng.normal();
  const dfd::InverseProblem problem = dfd::make_diagonal_problem(kappa, x_true);

  const double kappa_top = problem.dfd.max_kappa();
  const double gamma = (opt.opt_gamma && opt.opt_gamma->count())
                           ? opt.gamma
                           : 0.9 / (kappa_top * kappa_top);

  std::map<std::string, double> params = family_params(opt.family);
  if (opt.family.family == "pnp-c") {
    if (params.find("kappa-max") == params.end()) params["kappa-max"] = kappa_top;
    if (params.find("gamma") == params.end()) params["gamma"] = gamma;
  }
  const dfd::ScalarFilterFamily family = dfd::make_family(opt.family.family, params);

  const dfd::DenoiserFamily den = dfd::denoiser_from_filter(family, problem.dfd, gamma);
  const dfd::PnPProblem p = dfd::make_pnp_problem(problem.dfd, gamma, problem.y_exact);

  json report = {{"command", "pnp"},
                 {"problem", problem.description},
                 {"family", family.name},
                 {"params", family_params_json(params)},
                 {"gamma", dfd::json_number(gamma)}};

  if (opt.opt_alpha && opt.opt_alpha->count()) {
    // single weight: solver output must match the filtered reconstruction and
    // be independent of the starting point
    int iterations = 0;
    const dfd::Vec base = dfd::pnp_fixed_point(p, den, opt.alpha, 1e-12, 100000, nullptr,
                                               &iterations);
    dfd::Rng init_rng(g.seed ^ 0x5bf03635u);
    double init_deviation = 0.0;
    for (int s = 0; s < 5; ++s) {
      dfd::Vec x0(n);
      for (long long i = 0; i < n; ++i) x0(i) = 10.0 * init_rng.normal();
      const dfd::Vec x = dfd::pnp_fixed_point(p, den, opt.alpha, 1e-12, 100000, &x0);
      init_deviation =
          std::max(init_deviation, (x - base).lpNorm<Eigen::Infinity>());
    }
    const dfd::Reconstructor r = dfd::make_reconstructor(problem.dfd, family, gamma);
    const dfd::Vec filtered = dfd::reconstruct(r, opt.alpha, problem.y_exact).coefficients;
    const double agreement = (base - filtered).lpNorm<Eigen::Infinity>();

    const bool pass = agreement <= opt.tol && init_deviation <= opt.tol;
    report["alpha"] = dfd::json_number(opt.alpha);
    report["iterations"] = iterations;
    report["filtered_agreement"] = dfd::json_number(agreement);
    report["init_max_deviation"] = dfd::json_number(init_deviation);
    report["tol"] = dfd::json_number(opt.tol);
    report["pass"] = pass;
    print_report(g, report);
    return pass ? 0 : 1;
  }

  // schedule mode: drive the solver along a shrinking noise schedule and
  // measure the denoiser's admissibility on the same weights
  std::vector<double> deltas;
  for (int k = 1; k <= opt.k_max; ++k) deltas.push_back(std::ldexp(1.0, -k));
  const std::vector<dfd::PnPConvergenceRow> rows =
      dfd::pnp_convergence_run(p, den, x_true, deltas, g.seed, opt.final_tol);

  // the identity-limit residuals only drop below the tolerance deep in the
  // schedule, so sweep well past the run's own weights
  std::vector<double> alphas;
  for (int k = 0; k <= 20; k += 2) alphas.push_back(std::ldexp(1.0, -k));
  dfd::Rng sample_rng(g.seed ^ 0x2f1b6c11u);
  std::vector<dfd::Vec> samples;
  for (int s = 0; s < 4; ++s) {
    dfd::Vec v(n);
    for (long long i = 0; i < n; ++i) v(i) = sample_rng.uniform(-3.0, 3.0);
    samples.push_back(std::move(v));
  }
  samples.push_back(dfd::Vec::Constant(n, 1e-3));
  const dfd::AdmissibilityReport admissibility =
      dfd::measure_admissibility(den, alphas, samples);

  report["schedule"] = dfd::to_json(rows);
  report["final_error"] = dfd::json_number(rows.back().error);
  report["final_tol"] = dfd::json_number(opt.final_tol);
  report["admissibility"] = dfd::to_json(admissibility);
  report["pass"] = admissibility.pass;
  print_report(g, report);
  return admissibility.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// check-lemmas
// ---------------------------------------------------------------------------

struct CheckLemmasOptions {
  std::string which;
  FamilyFlags family;
  long long n = 50;
  double kappa_min = 1e-3;
  double kappa_max = 1.0;
  int trials = 3;
  int grid_points = 201;
  double tol = 0.0;
  CLI::Option* opt_tol = nullptr;
};

double lemma_tol(const CheckLemmasOptions& opt, double fallback) {
  return (opt.opt_tol && opt.opt_tol->count()) ? opt.tol : fallback;
}

// Inverse-convergence equivalence of the filter's slices: at the smallest
// weight of a dyadic schedule, distance-to-identity and preimage spread must
// vanish together on the sampled grid.
int lemma_inverse_convergence(const CheckLemmasOptions& opt,
                              const dfd::ScalarFilterFamily& family, json& report) {
  const double tol = lemma_tol(opt, 1e-3);
  const std::vector<double> schedule = dfd::pow2_schedule(0, 12);
  json reports = json::array();
  bool all_pass = true;
  for (double kappa : {0.25, 1.0}) {
    const auto family_at = [&family, kappa](double alpha) {
      return dfd::filter_slice(family, alpha, kappa);
    };
    const std::vector<double> grid =
        dfd::linspace(-10.0 * kappa, 10.0 * kappa, opt.grid_points);
    const dfd::LemmaReport rep = dfd::check_inv_conv(family_at, grid, schedule, tol);
    json entry = dfd::to_json(rep);
    entry["kappa"] = dfd::json_number(kappa);
    entry["alpha_final"] = dfd::json_number(schedule.back());
    reports.push_back(std::move(entry));
    all_pass = all_pass && rep.pass;
  }
  report["tol"] = dfd::json_number(tol);
  report["reports"] = std::move(reports);
  report["pass"] = all_pass;
  return all_pass ? 0 : 1;
}

// Penalty-growth estimate: the family's own penalty, curvature constant b and
// region constant c must satisfy the shrinkage-implies-growth bound.
int lemma_penalty_growth(const CheckLemmasOptions& opt,
                         const dfd::ScalarFilterFamily& family, json& report) {
  DFD_REQUIRE(family.has_penalty(), "check 2.4 needs a family with an analytic penalty; '",
              family.name, "' has none");
  DFD_REQUIRE(family.stationary, "check 2.4 needs a stationary family; '", family.name,
              "' scales non-linearly in alpha");
  DFD_REQUIRE(family.constants.has_b() && family.constants.has_c(),
              "check 2.4 needs the family's b and c constants; '", family.name,
              "' does not declare them");
  const double b = family.constants.b;
  const double c = family.constants.c;
  const std::vector<double> grid = dfd::linspace(-10.0, 10.0, opt.grid_points);
  json reports = json::array();
  bool all_pass = true;
  for (double kappa : {0.5, 1.0}) {
    for (double alpha : {0.25, 1.0}) {
      const dfd::ScalarPenalty s = family.analytic_penalty(1.0, kappa);
      const dfd::LemmaReport rep = dfd::check_r_estimate(s, kappa, alpha, b, c, grid);
      json entry = dfd::to_json(rep);
      entry["kappa"] = dfd::json_number(kappa);
      entry["alpha"] = dfd::json_number(alpha);
      reports.push_back(std::move(entry));
      all_pass = all_pass && rep.pass;
    }
  }
  report["constants"] = {{"b", dfd::json_number(b)}, {"c", dfd::json_number(c)}};
  report["reports"] = std::move(reports);
  report["pass"] = all_pass;
  return all_pass ? 0 : 1;
}

// Scaled-prox contraction transfer: measure the contraction factor of the
// family's unit-slice prox on the inner region, then verify the transferred
// bounds for the rescaled penalty.
int lemma_scaled_prox(const CheckLemmasOptions& opt,
                      const dfd::ScalarFilterFamily& family, json& report) {
  DFD_REQUIRE(family.has_penalty(), "check 2.5 needs a family with an analytic penalty; '",
              family.name, "' has none");
  const double alpha = 0.5;
  const double gamma = 0.9;
  const double kappa = 0.9;
  const dfd::ScalarPenalty s = family.analytic_penalty(1.0, 1.0);
  const dfd::ScalarProx prox = dfd::prox_operator(s);

  // measure how strongly the unit-slice prox contracts on the inner region,
  // then solve for the transferred factor t of the rescaled penalty: the
  // hypothesis region obeys |prox_s(x)| <= gk2 t / (1 - t (1 - gk2)) |x|
  double t_raw = 0.0;
  const double region = alpha / kappa;
  for (double x : dfd::linspace(-region, region, 2001)) {
    if (x == 0.0) continue;
    t_raw = std::max(t_raw, std::abs(prox(x)) / std::abs(x));
  }
  const double gk2 = gamma * kappa * kappa;
  const double t = t_raw / (gk2 + t_raw * (1.0 - gk2));
  DFD_REQUIRE(t < 1.0 - 1e-8, "check 2.5: the penalty's prox is not a contraction on |x| <= ",
              region, " (measured factor ", t_raw, ")");
  const double t_used = std::min(t + 1e-9, 1.0 - 1e-12);

  const dfd::LemmaReport rep = dfd::check_prox_scaled(
      s, alpha, gamma, kappa, t_used, dfd::linspace(-10.0, 10.0, opt.grid_points));
  json entry = dfd::to_json(rep);
  entry["alpha"] = dfd::json_number(alpha);
  entry["gamma"] = dfd::json_number(gamma);
  entry["kappa"] = dfd::json_number(kappa);
  entry["measured_factor"] = dfd::json_number(t_raw);
  entry["contraction_factor"] = dfd::json_number(t_used);
  report["reports"] = json::array({std::move(entry)});
  report["pass"] = rep.pass;
  return rep.pass ? 0 : 1;
}

// Triple agreement: the closed-form reconstruction, the per-component
// variational search, and the damped fixed-point solver must coincide on
// random diagonal problems.
int lemma_triple_agreement(const GlobalOptions& g, const CheckLemmasOptions& opt,
                           const dfd::ScalarFilterFamily& family, json& report) {
  DFD_REQUIRE(family.has_penalty(), "check 3.3 needs a family with an analytic penalty; '",
              family.name, "' has none");
  const double tol = lemma_tol(opt, 1e-6);
  dfd::Rng rng(g.seed);
  double worst = 0.0;
  for (int trial = 0; trial < opt.trials; ++trial) {
    dfd::Vec kappa(opt.n), z(opt.n);
    for (long long i = 0; i < opt.n; ++i) {
      kappa(i) = rng.log_uniform(opt.kappa_min, opt.kappa_max);
      z(i) = rng.normal();
    }
    const dfd::DFD d = dfd::dfd_diagonal(kappa);
    const dfd::Reconstructor r = dfd::make_reconstructor(d, family);
    for (double alpha : {0.25, 1.0}) {
      const dfd::Vec rec = dfd::reconstruct(r, alpha, z).coefficients;
      const dfd::Vec var = dfd::variational_oracle(r, alpha, z);
      const dfd::Vec fix = dfd::fixed_point_oracle(r, alpha, z);
      worst = std::max(worst, (rec - var).lpNorm<Eigen::Infinity>());
      worst = std::max(worst, (rec - fix).lpNorm<Eigen::Infinity>());
    }
  }
  const bool pass = worst <= tol;
  report["trials"] = opt.trials;
  report["n"] = opt.n;
  report["kappa_range"] = {dfd::json_number(opt.kappa_min), dfd::json_number(opt.kappa_max)};
  report["alphas"] = {0.25, 1.0};
  report["max_discrepancy"] = dfd::json_number(worst);
  report["tol"] = dfd::json_number(tol);
  report["pass"] = pass;
  return pass ? 0 : 1;
}

// Fixed-point uniqueness: solver outputs from widely separated starting
// points must coincide for a contractive denoiser.
int lemma_uniqueness(const GlobalOptions& g, const CheckLemmasOptions& opt, json& report) {
  const double tol = lemma_tol(opt, 1e-8);
  const long long n = std::min<long long>(opt.n, 16);
  dfd::Rng rng(g.seed);
  dfd::Vec kappa(n), z(n);
  for (long long i = 0; i < n; ++i) {
    kappa(i) = rng.log_uniform(std::max(opt.kappa_min, 0.05), opt.kappa_max);
    z(i) = rng.normal();
  }
  const dfd::DFD d = dfd::dfd_diagonal(kappa);
  const double kappa_top = d.max_kappa();
  const double gamma = 0.9 / (kappa_top * kappa_top);

  // rebuild the requested family with the problem's kappa ceiling
  std::map<std::string, double> params = family_params(opt.family);
  if (opt.family.family == "pnp-c") {
    if (params.find("kappa-max") == params.end()) params["kappa-max"] = kappa_top;
    if (params.find("gamma") == params.end()) params["gamma"] = gamma;
  }
  const dfd::ScalarFilterFamily family = dfd::make_family(opt.family.family, params);

  const dfd::DenoiserFamily den = dfd::denoiser_from_filter(family, d, gamma);
  const dfd::PnPProblem p = dfd::make_pnp_problem(kappa, gamma, z);

  json alpha_reports = json::array();
  bool all_pass = true;
  for (double alpha : {1.0, 0.25, 0.0625}) {
    const dfd::Vec base = dfd::pnp_fixed_point(p, den, alpha, 1e-12);
    double deviation = 0.0;
    dfd::Rng init_rng(g.seed ^ 0x9d2c5680u);
    for (int s = 0; s < 5; ++s) {
      dfd::Vec x0(n);
      for (long long i = 0; i < n; ++i) x0(i) = 10.0 * init_rng.normal();
      const dfd::Vec x = dfd::pnp_fixed_point(p, den, alpha, 1e-12, 100000, &x0);
      deviation = std::max(deviation, (x - base).lpNorm<Eigen::Infinity>());
    }
    const bool pass = deviation <= tol;
    alpha_reports.push_back({{"alpha", dfd::json_number(alpha)},
                             {"max_deviation", dfd::json_number(deviation)},
                             {"pass", pass}});
    all_pass = all_pass && pass;
  }
  report["family"] = family.name;
  report["params"] = family_params_json(params);
  report["gamma"] = dfd::json_number(gamma);
  report["n"] = n;
  report["initializations"] = 5;
  report["tol"] = dfd::json_number(tol);
  report["reports"] = std::move(alpha_reports);
  report["pass"] = all_pass;
  return all_pass ? 0 : 1;
}

int cmd_check_lemmas(const GlobalOptions& g, const CheckLemmasOptions& opt) {
  DFD_REQUIRE(opt.which == "2.3" || opt.which == "2.4" || opt.which == "2.5" ||
                  opt.which == "3.3" || opt.which == "5.2",
              "--which must be one of 2.3 | 2.4 | 2.5 | 3.3 | 5.2, got '", opt.which, "'");
  DFD_REQUIRE(opt.grid_points >= 3, "--grid-points must be >= 3");
  DFD_REQUIRE(opt.trials >= 1, "--trials must be >= 1");
  DFD_REQUIRE(opt.n >= 1, "--n must be >= 1");
  DFD_REQUIRE(opt.kappa_min > 0.0 && opt.kappa_min <= opt.kappa_max,
              "need 0 < --kappa-min <= --kappa-max");

  const dfd::ScalarFilterFamily family =
      dfd::make_family(opt.family.family, family_params(opt.family));

  json report = {{"command", "check-lemmas"},
                 {"which", opt.which},
                 {"family", family.name},
                 {"grid_points", opt.grid_points}};
  int code = 0;
  if (opt.which == "2.3") {
    code = lemma_inverse_convergence(opt, family, report);
  } else if (opt.which == "2.4") {
    code = lemma_penalty_growth(opt, family, report);
  } else if (opt.which == "2.5") {
    code = lemma_scaled_prox(opt, family, report);
  } else if (opt.which == "3.3") {
    code = lemma_triple_agreement(g, opt, family, report);
  } else {
    code = lemma_uniqueness(g, opt, report);
  }
  print_report(g, report);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtered diagonal-frame-decomposition toolkit"};
  app.set_version_flag("--version", std::string(dfd::version));
  app.require_subcommand(0, 1);

  GlobalOptions g;
  app.add_flag("--json", g.json_output, "print a machine-parseable JSON report on stdout");
  app.add_option("--seed", g.seed, "root seed for all randomness");
  app.add_option("--threads", g.threads, "cap the worker pool (0 = hardware)");
  app.add_flag("--no-timing", g.no_timing, "exclude runtime columns from outputs");

  VerifyFilterOptions verify_opt;
  CLI::App* verify = app.add_subcommand("verify-filter",
                                        "run the filter axiom suite and requested "
                                        "admissibility checkers");
  verify->fallthrough();
  add_family_flags(verify, verify_opt.family, /*required=*/true, /*with_kappa_max=*/true);
  verify->add_option("--check", verify_opt.checks,
                     "checker to run: A | B | C | F (repeatable; the axiom suite "
                     "always runs)");
  verify->add_option("--grid-points", verify_opt.grid_points,
                     "resolution of the value grids");

  ReconstructOptions rec_opt;
  CLI::App* rec = app.add_subcommand("reconstruct",
                                     "solve one problem instance with a filtered "
                                     "decomposition");
  rec->fallthrough();
  add_problem_flags(rec, rec_opt.problem);
  add_family_flags(rec, rec_opt.family, /*required=*/true, /*with_kappa_max=*/false);
  rec->add_option("--alpha", rec_opt.alpha, "regularization weight")->required();
  rec->add_option("--delta", rec_opt.delta, "relative noise level for synthetic data");
  rec_opt.opt_noise_seed = rec->add_option("--noise-seed", rec_opt.noise_seed,
                                           "seed for the noise draw (defaults to --seed)");
  rec->add_option("--input", rec_opt.input,
                  "CSV file with the data vector (overrides synthetic data)");
  rec->add_option("--output", rec_opt.output,
                  "path prefix for <prefix>.csv and <prefix>.json");

  RatesOptions rates_opt;
  CLI::App* rates = app.add_subcommand("rates", "run a configured error-rate experiment");
  rates->fallthrough();
  rates->add_option("--config", rates_opt.config_path, "experiment config (TOML or JSON)")
      ->required();
  rates->add_option("--out", rates_opt.out_path, "output CSV path")->required();

  PnPOptions pnp_opt;
  pnp_opt.family.family = "pnp-c";
  CLI::App* pnp = app.add_subcommand("pnp",
                                     "drive the denoiser-in-the-loop solver on a "
                                     "diagonal problem");
  pnp->fallthrough();
  pnp->add_option("--n", pnp_opt.n, "number of components");
  pnp->add_option("--kappa-min", pnp_opt.kappa_min, "smallest quasi-singular value");
  pnp_opt.opt_problem_seed = pnp->add_option("--problem-seed", pnp_opt.problem_seed,
                                             "seed for the problem's random draws "
                                             "(defaults to --seed)");
  pnp->add_option("--x-scale", pnp_opt.x_scale, "scale of the random ground truth");
  add_family_flags(pnp, pnp_opt.family, /*required=*/false, /*with_kappa_max=*/false);
  pnp_opt.opt_gamma = pnp->add_option("--step", pnp_opt.gamma,
                                      "gradient step size (defaults to 0.9 / max kappa^2)");
  pnp->add_option("--k-max", pnp_opt.k_max, "schedule length: noise levels 2^-1 .. 2^-k");
  pnp_opt.opt_alpha = pnp->add_option("--alpha", pnp_opt.alpha,
                                      "run a single weight instead of the schedule");
  pnp->add_option("--tol", pnp_opt.tol, "agreement tolerance for the single-weight mode");
  pnp->add_option("--final-tol", pnp_opt.final_tol,
                  "error bound the schedule must reach at its smallest noise level");

  CheckLemmasOptions lemmas_opt;
  CLI::App* lemmas = app.add_subcommand("check-lemmas",
                                        "run one of the analytic property suites");
  lemmas->fallthrough();
  lemmas->add_option("--which", lemmas_opt.which,
                     "suite id: 2.3 | 2.4 | 2.5 | 3.3 | 5.2")
      ->required();
  add_family_flags(lemmas, lemmas_opt.family, /*required=*/true, /*with_kappa_max=*/true);
  lemmas->add_option("--n", lemmas_opt.n, "problem size for the problem-based suites");
  lemmas->add_option("--kappa-min", lemmas_opt.kappa_min,
                     "smallest quasi-singular value for the problem-based suites");
  lemmas->add_option("--kappa-max-problem", lemmas_opt.kappa_max,
                     "largest quasi-singular value for the problem-based suites");
  lemmas->add_option("--trials", lemmas_opt.trials, "number of random problems (suite 3.3)");
  lemmas->add_option("--grid-points", lemmas_opt.grid_points,
                     "resolution of the value grids");
  lemmas_opt.opt_tol = lemmas->add_option("--tol", lemmas_opt.tol,
                                          "override the suite's pass tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (g.threads > 0) dfd::set_max_threads(g.threads);

  try {
    if (verify->parsed()) return cmd_verify_filter(g, verify_opt);
    if (rec->parsed()) return cmd_reconstruct(g, rec_opt);
    if (rates->parsed()) return cmd_rates(g, rates_opt);
    if (pnp->parsed()) return cmd_pnp(g, pnp_opt);
    if (lemmas->parsed()) return cmd_check_lemmas(g, lemmas_opt);
    std::cout << app.help();
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  }
}
