#pragma once

#include "scgcomp/discrete_world.hpp"
#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <cstdint>

namespace scgcomp {

/// c0 + ca * action + cl * covariate + cy * prior state.
struct LinearPredictor
{
    double c0 = 0.0;
    double ca = 0.0;
    double cl = 0.0;
    double cy = 0.0;

    double operator()(double a, double l, double y = 0.0) const { return c0 + ca * a + cl * l + cy * y; }
};

/// Three-interval data-generating mechanism with a binary confounder L,
/// binary action A, monotone censoring and a three-state outcome.
struct DgmConfig
{
    static constexpr int kTau = 3;

    double p_l0 = 0.5;
    /// L_k from (A_{k-1}, L_{k-1}), k = 1, 2.
    std::array<LinearPredictor, 2> covariate{{{-1.0, -1.0, 1.0, 0.0}, {-1.0, -1.0, 1.0, 0.0}}};
    /// A_0 from L_0; A_k from (A_{k-1}, L_k).
    std::array<LinearPredictor, 3> action{{{1.0, 0.0, -2.0, 0.0}, {-1.0, 1.75, -1.0, 0.0}, {-1.0, 1.75, -1.0, 0.0}}};
    /// C_k from A_{k-1}.
    std::array<LinearPredictor, 3> censor{{{-3.0, -0.5, 0.0, 0.0}, {-3.0, -0.5, 0.0, 0.0}, {-3.0, -0.5, 0.0, 0.0}}};
    /// Linear predictors of Y_k = 2 and Y_k = 3 from (action, L_{k-1}, Y_{k-1}).
    std::array<LinearPredictor, 3> eta2{{{0.05, -0.6, -2.0, 0.0}, {0.1, -0.8, -2.2, 0.5}, {0.3, -0.9, -2.2, 0.5}}};
    std::array<LinearPredictor, 3> eta3{{{-1.75, -0.6, -2.0, 0.0}, {-2.0, -0.6, -2.0, 0.4}, {-4.0, -0.6, -2.0, 0.4}}};
    /// Linear predictor of the event-free state.
    double reference_eta = 0.0;
    /// The terminal predictor at interval 3 reads A_{3 - lag}.
    int eta3_k3_action_lag = 2;
    bool censoring = true;

    void check() const;

    /// Pr(Y_k = 1, 2, 3) given the action entering each predictor, L_{k-1}
    /// and Y_{k-1} (ignored at k = 1).
    StateDistribution outcome_probabilities(int k, int a_eta2, int a_eta3, int l, int y) const;
    /// Index of the action read by the terminal predictor at interval k.
    int eta3_action_time(int k) const { return k == 3 ? 3 - eta3_k3_action_lag : k - 1; }
};

double expit(double x);

/// Observed panel of n individuals; covariate "L", no baseline state.
/// Variables are potential outcomes keyed by the action history that
/// precedes them, selected by the observed actions.
PanelDataset dgm_sample(Eigen::Index n, std::uint64_t seed, const DgmConfig& config = {});

/// Monte Carlo state proportions at the horizon under a forced plan,
/// censoring switched off.
StateDistribution dgm_truth(const ActionPlan& plan, std::int64_t N, std::uint64_t seed, const DgmConfig& config = {},
                            int threads = 1, int horizon = DgmConfig::kTau);

/// The same mechanism as explicit probability tables.
DiscreteWorld to_discrete_world(const DgmConfig& config = {});

/// Exact state proportions by enumeration.
StateDistribution dgm_exact_truth(const ActionPlan& plan, const DgmConfig& config = {}, int horizon = DgmConfig::kTau);

}  // namespace scgcomp
