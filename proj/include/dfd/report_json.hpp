#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/assumptions.hpp"
#include "dfd/core/config.hpp"
#include "dfd/filters.hpp"
#include "dfd/harness.hpp"
#include "dfd/pnp.hpp"
#include "dfd/prox_checks.hpp"
#include "dfd/reconstruction.hpp"
#include "dfd/version.hpp"

namespace dfd {

/// JSON has no NaN/inf literals; non-finite numbers are emitted as the
/// strings "nan" / "inf" / "-inf" so reports stay parseable.
inline nlohmann::json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline nlohmann::json json_vector(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(json_number(v(i)));
  return out;
}

inline nlohmann::json to_json(const ReconstructionResult& r) {
  return {{"x", json_vector(r.x)},
          {"coefficients", json_vector(r.coefficients)},
          {"regularizer_value", json_number(r.regularizer_value)},
          {"in_domain", r.in_domain}};
}

inline nlohmann::json to_json(const AdmissibilityReport& r) {
  return {{"d1", {{"pass", r.d1_pass}, {"worst_lipschitz", json_number(r.d1_worst_lipschitz)}}},
          {"d2", {{"pass", r.d2_pass}, {"final_residual", json_number(r.d2_final_residual)}}},
          {"d3", {{"pass", r.d3_pass}, {"final_pairing", json_number(r.d3_final_pairing)}}},
          {"d4", {{"pass", r.d4_pass}, {"max_ratio", json_number(r.d4_max_ratio)}}},
          {"pass", r.pass},
          {"notes", r.notes}};
}

inline nlohmann::json to_json(const FilterAxiomReport& r) {
  return {{"monotone", {{"pass", r.monotone_pass}, {"worst", json_number(r.monotone_worst)}}},
          {"nonexpansive",
           {{"pass", r.nonexpansive_pass}, {"worst", json_number(r.nonexpansive_worst)}}},
          {"fixes_zero",
           {{"pass", r.fixes_zero_pass}, {"worst", json_number(r.fixes_zero_worst)}}},
          {"identity_limit",
           {{"pass", r.identity_limit_pass}, {"worst", json_number(r.identity_limit_worst)}}},
          {"pass", r.pass},
          {"notes", r.notes}};
}

inline nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json constants = nlohmann::json::object();
  for (const auto& [name, value] : r.constants_used) constants[name] = json_number(value);
  return {{"assumption", r.assumption_id},
          {"constants", constants},
          {"grid", r.grid},
          {"worst_case", json_number(r.worst_case)},
          {"pass", r.pass},
          {"notes", r.notes}};
}

/// The sampled grid is summarized (count and span) rather than dumped, so
/// reports stay readable while still recording the resolution used.
inline nlohmann::json to_json(const LemmaReport& r) {
  nlohmann::json grid = nlohmann::json::object();
  grid["points"] = r.grid.size();
  if (!r.grid.empty()) {
    const auto [lo, hi] = std::minmax_element(r.grid.begin(), r.grid.end());
    grid["min"] = json_number(*lo);
    grid["max"] = json_number(*hi);
  }
  return {{"check", r.lemma},
          {"hypothesis_ok", r.hypothesis_ok},
          {"grid", grid},
          {"worst_violation", json_number(r.worst_violation)},
          {"pass", r.pass},
          {"notes", r.notes}};
}

inline nlohmann::json to_json(const DiagonalConditionsReport& r) {
  return {{"identity_limit",
           {{"pass", r.identity_limit_pass},
            {"worst_monotonicity", json_number(r.identity_worst_monotonicity)},
            {"final_residual", json_number(r.identity_final_residual)}}},
          {"damping",
           {{"pass", r.damping_pass}, {"worst_slack", json_number(r.damping_worst_slack)}}},
          {"notes", r.notes}};
}

inline nlohmann::json to_json(const std::vector<PnPConvergenceRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const PnPConvergenceRow& row : rows)
    out.push_back({{"delta", json_number(row.delta)},
                   {"alpha", json_number(row.alpha)},
                   {"lipschitz", json_number(row.lipschitz)},
                   {"iterations", row.iterations},
                   {"error", json_number(row.error)}});
  return out;
}

inline nlohmann::json to_json(const RateTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const RateRow& row : table.rows) {
    nlohmann::json r = {{"filter", row.filter},       {"delta", json_number(row.delta)},
                        {"alpha", json_number(row.alpha)}, {"seed", row.seed},
                        {"l2_error", json_number(row.l2_error)},
                        {"runtime_ms", json_number(row.runtime_ms)}};
    if (row.failed) r["failure"] = row.message;
    rows.push_back(std::move(r));
  }
  nlohmann::json aggregates = nlohmann::json::array();
  for (const RateAggregate& agg : table.aggregates)
    aggregates.push_back({{"filter", agg.filter},
                          {"delta", json_number(agg.delta)},
                          {"count", agg.count},
                          {"mean_error", json_number(agg.mean_error)},
                          {"std_error", json_number(agg.std_error)}});
  nlohmann::json chosen = nlohmann::json::object();
  for (const auto& [name, c] : table.chosen_C) chosen[name] = json_number(c);
  return {{"rule", table.rule},
          {"chosen_C", chosen},
          {"rows", rows},
          {"aggregates", aggregates}};
}

inline nlohmann::json to_json(const StabilityTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const StabilityRow& row : table.rows)
    rows.push_back({{"perturbation_norm", json_number(row.perturbation_norm)},
                    {"output_difference", json_number(row.output_difference)},
                    {"ratio", json_number(row.ratio)}});
  return {{"filter", table.filter},
          {"alpha", json_number(table.alpha)},
          {"bound", json_number(table.bound)},
          {"bound_available", table.bound_available},
          {"rows", rows}};
}

inline nlohmann::json to_json(const ConvergenceTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ConvergenceRow& row : table.rows)
    rows.push_back({{"k", row.k},
                    {"delta", json_number(row.delta)},
                    {"alpha", json_number(row.alpha)},
                    {"seed", row.seed},
                    {"relative_error", json_number(row.relative_error)},
                    {"bias_relative_error", json_number(row.bias_relative_error)}});
  nlohmann::json aggregates = nlohmann::json::array();
  for (const ConvergenceAggregate& agg : table.aggregates)
    aggregates.push_back({{"k", agg.k},
                          {"delta", json_number(agg.delta)},
                          {"alpha", json_number(agg.alpha)},
                          {"count", agg.count},
                          {"mean", json_number(agg.mean)},
                          {"stddev", json_number(agg.stddev)},
                          {"bias", json_number(agg.bias)}});
  return {{"filter", table.filter},
          {"threshold", json_number(table.threshold)},
          {"rows", rows},
          {"aggregates", aggregates}};
}

inline nlohmann::json to_json(const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::string:
      return v.str;
    case ConfigValue::Kind::number:
      return json_number(v.number);
    case ConfigValue::Kind::boolean:
      return v.boolean;
    case ConfigValue::Kind::number_list: {
      nlohmann::json out = nlohmann::json::array();
      for (double x : v.numbers) out.push_back(json_number(x));
      return out;
    }
    case ConfigValue::Kind::string_list:
      return v.strings;
  }
  return nullptr;  // unreachable
}

inline nlohmann::json config_to_json(const Config& c) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : c) out[key] = to_json(value);
  return out;
}

/// Companion metadata for a rate-table CSV: the experiment echo, the chosen
/// per-filter C values, the library version, and the determinism contract.
inline nlohmann::json rate_metadata_json(const RateExperiment& exp, const RateTable& table) {
  nlohmann::json filters = nlohmann::json::array();
  for (const FilterSpec& spec : exp.filters) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [key, value] : spec.params) params[key] = json_number(value);
    filters.push_back({{"name", spec.name}, {"params", params}});
  }
  nlohmann::json chosen = nlohmann::json::object();
  for (const auto& [name, c] : table.chosen_C) chosen[name] = json_number(c);
  return {{"version", version},
          {"problem", exp.problem.description},
          {"filters", filters},
          {"deltas", exp.deltas},
          {"seeds", exp.seeds},
          {"rule", exp.rule},
          {"C", exp.rule == "custom"
                    ? nlohmann::json("custom-table")
                    : (exp.auto_C ? nlohmann::json("auto") : nlohmann::json(exp.C))},
          {"chosen_C", chosen},
          {"csv_header", "filter,delta,alpha,seed,l2_error,runtime_ms"},
          {"determinism", "rows are reproducible bit for bit from (config, seeds); "
                          "runtime_ms is wall-clock and excluded from comparisons"}};
}

}  // namespace dfd
