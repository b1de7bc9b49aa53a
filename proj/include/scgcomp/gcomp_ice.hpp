#pragma once

#include "scgcomp/glm.hpp"
#include "scgcomp/model_spec.hpp"
#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace scgcomp {

struct IceSpecs
{
    /// Model for the observed state at the horizon (hard labels).
    SpecTemplate outcome;
    /// Model for the pseudo-outcomes at earlier steps (fractional responses).
    SpecTemplate pseudo;

    static IceSpecs same(SpecTemplate s) { return {s, s}; }
    IceSpecs resolved(const PanelColumns& data) const { return {outcome.resolved(data), pseudo.resolved(data)}; }
};

/// Bookkeeping of one backward step.
struct IceStep
{
    int interval = 0;
    Eigen::Index fit_size = 0;
    Eigen::Index prediction_size = 0;
    /// Individuals dying at this interval whose pseudo-outcome is (0, 0, 1).
    Eigen::Index replacements = 0;
    /// Individuals dying at this interval dropped from the fit (terminal
    /// treated as censoring).
    Eigen::Index removed = 0;
    int iterations = 0;
    double gradient_norm = 0.0;
};

struct IceTrace
{
    int horizon = 0;
    /// Steps in the order they were run (horizon first).
    std::vector<IceStep> steps;
};

enum class TerminalHandling
{
    /// Deaths receive the pseudo-outcome (0, 0, 1).
    Absorbing,
    /// Deaths leave the risk sets as if censored.
    Censoring,
};

struct IceRun
{
    StateDistribution proportions = StateDistribution::Zero();
    IceTrace trace;
};

/// Backward recursion for several action overrides sharing the horizon fit.
std::vector<IceRun> ice_core(const PanelDataset& data, std::span<const ActionOverride> overrides, int horizon,
                             const IceSpecs& specs, const FitOptions& options = {},
                             TerminalHandling terminal = TerminalHandling::Absorbing);

std::pair<StateDistribution, IceTrace> ice_proportions(const PanelDataset& data, const ActionPlan& plan,
                                                       int horizon, const IceSpecs& specs,
                                                       const FitOptions& options = {});

PsiResult ice_psi(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b, int horizon,
                  const IceSpecs& specs, const FitOptions& options = {});

std::vector<PsiResult> ice_trajectory(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b,
                                      const IceSpecs& specs, const FitOptions& options = {});

/// Throws unless the plan covers the horizon.
void check_plan_horizon(const ActionPlan& plan, int horizon, int tau);

}  // namespace scgcomp
