#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "dfd/harness.hpp"
#include "dfd/report_json.hpp"

namespace {

dfd::InverseProblem diagonal_problem(int n, double kappa_min, std::uint64_t seed,
                                     int nonzeros = -1) {
  dfd::Vec kappa(n), x(n);
  for (int i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    kappa(i) = std::exp(std::log(kappa_min) + t * (0.0 - std::log(kappa_min)));
  }
  dfd::Rng rng(seed);
  if (nonzeros < 0) {
    for (int i = 0; i < n; ++i) x(i) = rng.normal();
  } else {
    x.setZero();
    for (int j = 0; j < nonzeros; ++j) x(n - 1 - j) = (j % 2 ? -2.0 : 2.0) - 0.25 * j;
  }
  return dfd::make_diagonal_problem(kappa, x);
}

dfd::RateExperiment small_experiment() {
  dfd::RateExperiment exp;
  exp.problem = diagonal_problem(24, 0.05, 7);
  exp.filters = {{"soft", {}}, {"tikhonov", {}}};
  exp.deltas = {0.02, 0.05, 0.1};
  exp.seeds = {1, 2, 3};
  exp.auto_C = false;
  exp.C = 1.0;
  return exp;
}

}  // namespace

TEST_CASE("rate tables hold one exact-alpha row per (filter, delta, seed)",
          "[harness][rates]") {
  const dfd::RateExperiment exp = small_experiment();
  const dfd::RateTable table = dfd::run_rates(exp);

  REQUIRE(table.rows.size() == 2 * 3 * 3);
  for (const auto& row : table.rows) {
    REQUIRE_FALSE(row.failed);
    REQUIRE(std::isfinite(row.l2_error));
    REQUIRE(row.l2_error > 0.0);
    REQUIRE(row.alpha == exp.C * row.delta);  // the rule, recorded exactly
  }
  // sorted by (filter, delta, seed)
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& a = table.rows[i - 1];
    const auto& b = table.rows[i];
    const bool ordered = a.filter < b.filter ||
                         (a.filter == b.filter &&
                          (a.delta < b.delta || (a.delta == b.delta && a.seed <= b.seed)));
    REQUIRE(ordered);
  }
  REQUIRE(table.chosen_C.at("soft") == 1.0);
  REQUIRE(table.chosen_C.at("tikhonov") == 1.0);
}

TEST_CASE("rate aggregates are recomputable from their rows", "[harness][rates]") {
  const dfd::RateTable table = dfd::run_rates(small_experiment());
  REQUIRE(table.aggregates.size() == 2 * 3);
  for (const auto& agg : table.aggregates) {
    double sum = 0.0;
    int count = 0;
    for (const auto& row : table.rows) {
      if (row.filter != agg.filter || row.delta != agg.delta || row.failed) continue;
      sum += row.l2_error;
      ++count;
    }
    REQUIRE(count == agg.count);
    const double mean = sum / count;
    REQUIRE(agg.mean_error == Catch::Approx(mean).margin(1e-12));
    double ss = 0.0;
    for (const auto& row : table.rows) {
      if (row.filter != agg.filter || row.delta != agg.delta || row.failed) continue;
      ss += (row.l2_error - mean) * (row.l2_error - mean);
    }
    REQUIRE(agg.std_error ==
            Catch::Approx(count > 1 ? std::sqrt(ss / (count - 1)) : 0.0).margin(1e-12));
  }
}

TEST_CASE("reruns and duplicate seeds reproduce identical errors", "[harness][rates]") {
  dfd::RateExperiment exp = small_experiment();
  exp.seeds = {5, 5};
  const dfd::RateTable a = dfd::run_rates(exp);
  const dfd::RateTable b = dfd::run_rates(exp);
  REQUIRE(dfd::rate_table_csv(a, false) == dfd::rate_table_csv(b, false));
  for (std::size_t i = 0; i + 1 < a.rows.size(); i += 2) {
    REQUIRE(a.rows[i].seed == a.rows[i + 1].seed);
    REQUIRE(a.rows[i].l2_error == a.rows[i + 1].l2_error);
  }
  // the timing column is the only non-reproducible part
  REQUIRE(dfd::rate_table_csv(a).substr(0, 40) ==
          "filter,delta,alpha,seed,l2_error,runtime");
}

TEST_CASE("mean error grows with the noise level", "[harness][rates][trend]") {
  dfd::RateExperiment exp;
  exp.problem = diagonal_problem(24, 0.05, 17);
  exp.filters = {{"soft", {}}, {"tikhonov", {}}};
  exp.deltas = {0.01, 0.05, 0.1};
  exp.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  exp.auto_C = false;
  exp.C = 1.0;
  const dfd::RateTable table = dfd::run_rates(exp);
  for (const char* name : {"soft", "tikhonov"}) {
    const dfd::RateAggregate* prev = nullptr;
    for (const auto& agg : table.aggregates) {
      if (agg.filter != name) continue;
      if (prev) {
        const double pooled = std::sqrt(
            0.5 * (prev->std_error * prev->std_error + agg.std_error * agg.std_error));
        REQUIRE(agg.mean_error >= prev->mean_error - pooled);
      }
      prev = &agg;
    }
  }
}

TEST_CASE("auto C picks a deterministic positive grid value", "[harness][rates][auto-C]") {
  dfd::RateExperiment exp = small_experiment();
  exp.auto_C = true;
  const dfd::RateTable a = dfd::run_rates(exp);
  const dfd::RateTable b = dfd::run_rates(exp);
  for (const char* name : {"soft", "tikhonov"}) {
    REQUIRE(a.chosen_C.at(name) > 0.0);
    REQUIRE(std::isfinite(a.chosen_C.at(name)));
    REQUIRE(a.chosen_C.at(name) == b.chosen_C.at(name));
  }
  REQUIRE(dfd::rate_table_csv(a, false) == dfd::rate_table_csv(b, false));
  // auto C should not do worse than a wild fixed C on the same rows
  dfd::RateExperiment waste = exp;
  waste.auto_C = false;
  waste.C = 1000.0;
  const dfd::RateTable w = dfd::run_rates(waste);
  REQUIRE(a.aggregates.front().mean_error <= w.aggregates.front().mean_error);
}

TEST_CASE("a custom table supports exact data and records the bias floor",
          "[harness][rates][custom]") {
  dfd::RateExperiment exp;
  exp.problem = diagonal_problem(20, 0.1, 23);
  exp.filters = {{"soft", {}}};
  exp.deltas = {0.0, 0.05};
  exp.seeds = {1};
  exp.rule = "custom";
  exp.auto_C = false;
  exp.custom_table = {{0.0, 0.3}, {0.05, 0.3}};
  const dfd::RateTable table = dfd::run_rates(exp);
  REQUIRE(table.rows.size() == 2);
  REQUIRE(table.rows[0].delta == 0.0);
  REQUIRE(table.rows[0].alpha == 0.3);

  const auto rec = dfd::make_reconstructor(exp.problem.dfd, dfd::soft_threshold_family());
  const double bias =
      (dfd::reconstruct(rec, 0.3, exp.problem.y_exact).x - exp.problem.x_true).norm();
  REQUIRE(table.rows[0].l2_error == bias);
  REQUIRE(bias > 0.0);  // a non-trivial filter keeps a strictly positive alpha-bias
}

TEST_CASE("rate experiment validation rejects malformed specs", "[harness][rates]") {
  dfd::RateExperiment exp = small_experiment();

  exp.seeds.clear();
  REQUIRE_THROWS_WITH(dfd::run_rates(exp), Catch::Matchers::ContainsSubstring("seeds"));

  exp = small_experiment();
  exp.deltas = {0.1, 0.05};
  REQUIRE_THROWS_WITH(dfd::run_rates(exp),
                      Catch::Matchers::ContainsSubstring("strictly increasing"));

  exp = small_experiment();
  exp.C = 0.0;
  REQUIRE_THROWS_AS(dfd::run_rates(exp), std::invalid_argument);

  exp = small_experiment();
  exp.deltas = {0.0, 0.1};  // delta = 0 needs the custom rule
  REQUIRE_THROWS_AS(dfd::run_rates(exp), std::invalid_argument);

  exp = small_experiment();
  exp.rule = "custom";  // auto-C cannot combine with a fixed table
  exp.auto_C = true;
  exp.custom_table = {{0.02, 0.1}, {0.05, 0.1}, {0.1, 0.1}};
  REQUIRE_THROWS_AS(dfd::run_rates(exp), std::invalid_argument);

  exp = small_experiment();
  exp.filters = {{"soft", {}}, {"soft", {}}};
  REQUIRE_THROWS_WITH(dfd::run_rates(exp), Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("stability sweeps shrink monotonically and respect the ratio cap",
          "[harness][stability]") {
  const dfd::InverseProblem p = diagonal_problem(16, 0.3, 8);
  std::vector<double> schedule;
  for (int k = 0; k <= 20; ++k) schedule.push_back(0.25 * std::pow(4.0, -k));
  schedule.push_back(0.0);

  for (const auto& family :
       {dfd::soft_threshold_family(), dfd::huber_stationary_family(1.0, 1.0),
        dfd::tikhonov_family(), dfd::tsvd_family()}) {
    const dfd::StabilityTable table =
        dfd::run_stability_sweep(p, family, 0.5, schedule);
    REQUIRE(table.bound_available);
    REQUIRE(std::isfinite(table.bound));
    for (const auto& row : table.rows) {
      CAPTURE(family.name, row.perturbation_norm);
      REQUIRE(row.ratio <= table.bound + 1e-9);
    }
    // the second-smallest perturbation is 1e-12-scale; its response is gone
    REQUIRE(table.rows[table.rows.size() - 2].output_difference < 1e-10);
    // zero perturbation reproduces the base reconstruction bit for bit
    REQUIRE(table.rows.back().perturbation_norm == 0.0);
    REQUIRE(table.rows.back().output_difference == 0.0);
    REQUIRE(table.rows.back().ratio == 0.0);
  }

  REQUIRE_THROWS_WITH(dfd::run_stability_sweep(p, dfd::soft_threshold_family(), 0.5,
                                               {1e-3, 1e-2}),
                      Catch::Matchers::ContainsSubstring("non-increasing"));
  REQUIRE_THROWS_AS(dfd::run_stability_sweep(p, dfd::soft_threshold_family(), 0.0, {1e-3}),
                    std::invalid_argument);
}

TEST_CASE("convergence sweeps drive the relative error under the threshold",
          "[harness][convergence]") {
  const dfd::InverseProblem p = diagonal_problem(24, 0.2, 3);
  dfd::ConvergenceRule rule;
  rule.C = 1.0;
  const dfd::ConvergenceTable table =
      dfd::run_convergence_sweep(p, dfd::tikhonov_family(), rule);
  REQUIRE(table.rows.size() == 12);
  REQUIRE(table.aggregates.size() == 12);
  for (const auto& agg : table.aggregates) {
    REQUIRE(agg.delta == std::ldexp(1.0, -agg.k));
    REQUIRE(agg.alpha == rule.C * agg.delta);
  }
  // the noise-free column is the pure regularization bias, vanishing with
  // alpha; componentwise it is at most alpha / kappa_min^2 relative
  REQUIRE(table.aggregates.back().bias < 0.05 * table.aggregates.front().bias);
  REQUIRE(table.aggregates.back().bias <
          std::ldexp(1.0, -12) / (0.2 * 0.2) + 1e-12);
  REQUIRE(table.aggregates.back().mean < 1e-2);

  dfd::ConvergenceRule impossible = rule;
  impossible.threshold = 1e-13;
  REQUIRE_THROWS_WITH(dfd::run_convergence_sweep(p, dfd::tikhonov_family(), impossible),
                      Catch::Matchers::ContainsSubstring("exceeds the threshold"));
}

TEST_CASE("thresholding beats the linear filter on sparse ground truth",
          "[harness][convergence][ordering]") {
  const dfd::InverseProblem p = diagonal_problem(32, 0.05, 5, /*nonzeros=*/4);
  dfd::ConvergenceRule rule;
  rule.C = 1.0;
  rule.threshold = 5e-2;
  const auto soft = dfd::run_convergence_sweep(p, dfd::soft_threshold_family(), rule);
  const auto tikhonov = dfd::run_convergence_sweep(p, dfd::tikhonov_family(), rule);
  REQUIRE(soft.aggregates.back().mean < tikhonov.aggregates.back().mean);
}

TEST_CASE("experiments build from config text in both formats", "[harness][config]") {
  const std::string toml = R"(# sweep demo
[problem]
type = "diagonal"
n = 20
kappa-min = 0.05
kappa-max = 1.0
seed = 4
x-kind = "sparse"
density = 0.2
x-scale = 2.0

[experiment]
filters = ["soft", "huber-a"]
deltas = [0.05, 0.1]
seeds = [1, 2]
rule = "linear"
C = 0.5

[filter.huber-a]
b = 1.0
d = 1.0
)";
  const dfd::Config cfg = dfd::parse_toml_text(toml);
  const dfd::RateExperiment exp = dfd::rate_experiment_from_config(cfg);
  REQUIRE(exp.filters.size() == 2);
  REQUIRE(exp.filters[1].params.at("b") == 1.0);
  REQUIRE_FALSE(exp.auto_C);
  REQUIRE(exp.C == 0.5);
  const dfd::RateTable table = dfd::run_rates(exp);
  REQUIRE(table.rows.size() == 2 * 2 * 2);
  for (const auto& row : table.rows) REQUIRE(row.alpha == 0.5 * row.delta);

  const std::string json = R"({
    "problem": {"type": "diagonal", "n": 20, "kappa-min": 0.05, "kappa-max": 1.0,
                 "seed": 4, "x-kind": "sparse", "density": 0.2, "x-scale": 2.0},
    "experiment": {"filters": ["soft", "huber-a"], "deltas": [0.05, 0.1],
                    "seeds": [1, 2], "rule": "linear", "C": 0.5},
    "filter.huber-a": {"b": 1.0, "d": 1.0}
  })";
  const dfd::RateTable from_json =
      dfd::run_rates(dfd::rate_experiment_from_config(dfd::parse_json_text(json)));
  REQUIRE(dfd::rate_table_csv(from_json, false) == dfd::rate_table_csv(table, false));
}

TEST_CASE("config parsing reports line and field diagnostics", "[harness][config]") {
  REQUIRE_THROWS_WITH(dfd::parse_toml_text("x = ("),
                      Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_WITH(dfd::parse_toml_text("a = 1\nb ="),
                      Catch::Matchers::ContainsSubstring("line 2"));
  REQUIRE_THROWS_WITH(dfd::parse_toml_text("a = 1\na = 2"),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  REQUIRE_THROWS_WITH(dfd::parse_toml_text("v = [1, \"x\"]"),
                      Catch::Matchers::ContainsSubstring("mixed"));
  REQUIRE_THROWS_WITH(dfd::parse_toml_text("n = 1.5abc"),
                      Catch::Matchers::ContainsSubstring("bad number"));
  REQUIRE_THROWS_WITH(dfd::parse_json_text("{\"a\": "),
                      Catch::Matchers::ContainsSubstring("JSON parse error"));

  dfd::Config cfg = dfd::parse_toml_text(
      "[problem]\ntype = \"diagonal\"\n[experiment]\nfilters = [\"soft\"]\n"
      "deltas = [0.1]\nseeds = [1]\ndeltaz = [0.2]\n");
  REQUIRE_THROWS_WITH(dfd::rate_experiment_from_config(cfg),
                      Catch::Matchers::ContainsSubstring("not a recognized"));

  cfg = dfd::parse_toml_text(
      "[problem]\ntype = \"diagonal\"\n[experiment]\nfilters = [\"soft\"]\n"
      "deltas = [0.1]\nseeds = []\n");
  REQUIRE_THROWS_WITH(dfd::run_rates(dfd::rate_experiment_from_config(cfg)),
                      Catch::Matchers::ContainsSubstring("seeds"));
}

TEST_CASE("config files load by extension", "[harness][config]") {
  const std::string dir = DFD_TEST_TMP;
  const std::string toml_path = dir + "/harness_demo.toml";
  {
    std::ofstream out(toml_path);
    out << "[problem]\ntype = \"diagonal\"\nn = 8\n";
  }
  const dfd::Config cfg = dfd::load_config(toml_path);
  REQUIRE(dfd::config_string(cfg, "problem.type") == "diagonal");
  REQUIRE(dfd::config_integer(cfg, "problem.n") == 8);

  const std::string json_path = dir + "/harness_demo.json";
  {
    std::ofstream out(json_path);
    out << "{\"problem\": {\"type\": \"diagonal\", \"n\": 8}}";
  }
  const dfd::Config jcfg = dfd::load_config(json_path);
  REQUIRE(dfd::config_string(jcfg, "problem.type") == "diagonal");
  REQUIRE_THROWS_AS(dfd::load_config(dir + "/does_not_exist.toml"), std::invalid_argument);
}

TEST_CASE("JSON reports carry finite and non-finite values faithfully",
          "[harness][json]") {
  REQUIRE(dfd::json_number(1.5) == nlohmann::json(1.5));
  REQUIRE(dfd::json_number(dfd::kInf) == nlohmann::json("inf"));
  REQUIRE(dfd::json_number(-dfd::kInf) == nlohmann::json("-inf"));
  REQUIRE(dfd::json_number(dfd::kNaN) == nlohmann::json("nan"));

  const dfd::RateExperiment exp = small_experiment();
  const dfd::RateTable table = dfd::run_rates(exp);
  const nlohmann::json meta = dfd::rate_metadata_json(exp, table);
  REQUIRE(meta.at("rule") == "linear");
  REQUIRE(meta.at("filters").size() == 2);
  REQUIRE(meta.at("chosen_C").at("soft") == 1.0);
  REQUIRE(meta.contains("version"));

  const nlohmann::json t = dfd::to_json(table);
  REQUIRE(t.at("rows").size() == table.rows.size());
  REQUIRE(t.at("aggregates").size() == table.aggregates.size());

  // a full reconstruction summary serializes end to end
  const auto rec = dfd::make_reconstructor(exp.problem.dfd, dfd::soft_threshold_family());
  const nlohmann::json r =
      dfd::to_json(dfd::reconstruct(rec, 0.1, exp.problem.y_exact));
  REQUIRE(r.at("x").size() == static_cast<std::size_t>(exp.problem.x_true.size()));
  REQUIRE(r.at("in_domain") == true);
}
