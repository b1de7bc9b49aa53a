#pragma once

#include "scgcomp/study.hpp"
#include "scgcomp/types.hpp"

#include <json.hpp>

#include <ostream>
#include <span>
#include <string>

namespace scgcomp {

using nlohmann::json;

json to_json(const PsiResult& r);
json to_json(const MetricsRow& m);

/// Finite doubles as numbers, non-finite values as null.
json number_or_null(double v);

/// Lines written ahead of a CSV body: "# config: <compact json>".
void write_config_header(std::ostream& out, const json& config);

/// Columns: quantity, estimate, se, lo, hi. Rows are the per-plan state
/// proportions p_a1..p_a3, p_b1..p_b3, then psi1, psi2 and psi3.
void write_psi_csv(std::ostream& out, const PsiResult& r, const json& config);

/// Columns: horizon, plan, state, proportion, lo, hi. Plan is "a", "b" or
/// "a-b" (contrast); lo and hi are empty without bootstrap intervals.
void write_trajectory_csv(std::ostream& out, std::span<const PsiResult> trajectory, const json& config);

/// Columns: estimator, component, n, truth, bias, ese, rmse, ase, ser,
/// coverage, iterations, failures.
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows, const json& config);

}  // namespace scgcomp
