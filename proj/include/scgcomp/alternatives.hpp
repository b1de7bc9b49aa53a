#pragma once

#include "scgcomp/gcomp_ice.hpp"

namespace scgcomp {

/// Multistate ICE that only forces the baseline action; specs may read no
/// action other than A_0.
PsiResult alt1_baseline_psi(const PanelDataset& data, int a0, int a0_prime, int horizon, const IceSpecs& specs,
                            const FitOptions& options = {});

/// ICE for the intermediate state alone, treating the terminal event as
/// censoring. The result carries no terminal-state estimate.
PsiResult alt2_censor_terminal_psi(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b,
                                   int horizon, const IceSpecs& specs, const FitOptions& options = {});

/// Intercept plus A_0, the comparator spec used for the baseline-action estimator.
IceSpecs alt1_default_specs();

}  // namespace scgcomp
