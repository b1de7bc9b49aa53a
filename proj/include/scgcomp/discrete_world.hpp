#pragma once

#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace scgcomp {

/// Small discrete data-generating process with one binary covariate L, a
/// binary action A, a three-state outcome and optional censoring, given as
/// explicit conditional probability tables.
///
/// Histories are packed into integers in temporal order: bit 0 is L_0,
/// bit 1 is A_0, and interval k adds I(Y_k = 2) at bit 3k-1, L_k at bit 3k
/// and A_k at bit 3k+1.
struct DiscreteWorld
{
    static constexpr int kMaxTau = 4;

    int tau = 1;
    double p_l0 = 0.5;
    /// action[k](h): Pr(A_k = 1 | history through L_k), 2^(3k+1) entries.
    std::vector<Eigen::VectorXd> action;
    /// censor[k-1](h): Pr(C_k = 1 | history through A_{k-1}), 2^(3k-1) entries.
    std::vector<Eigen::VectorXd> censor;
    /// outcome[k-1].row(h): distribution of Y_k given history through A_{k-1}.
    std::vector<Eigen::MatrixXd> outcome;
    /// covariate[k-1](h): Pr(L_k = 1 | history through Y_k), 2^(3k) entries.
    std::vector<Eigen::VectorXd> covariate;

    static int bits_before_action(int k) { return 3 * k + 1; }
    static int bits_before_interval(int k) { return 3 * k - 1; }
    static int bits_before_covariate(int k) { return 3 * k; }

    /// Throws unless shapes match and every table row is a distribution.
    void check() const;
};

struct WorldOptions
{
    /// Probability bounds for binary tables.
    double min_prob = 0.05;
    double max_prob = 0.95;
    /// Probability that A_k repeats A_{k-1} (0 disables stickiness).
    double sticky = 0.0;
    bool censoring = true;
    double max_censor = 0.15;
    /// Outcome rows are normalized weights floor + U(0, 1).
    double outcome_floor = 0.2;
    /// Scale applied to the terminal weight of outcome rows.
    double terminal_scale = 1.0;
    /// When false, outcome and covariate tables ignore every action bit.
    bool action_effect = true;
};

DiscreteWorld random_world(int tau, std::uint64_t seed, const WorldOptions& options = {});

/// Exact distribution of the composite state at the horizon under a plan,
/// summing over all covariate and outcome paths with censoring switched off.
StateDistribution enumerate_truth(const DiscreteWorld& world, const ActionPlan& plan, int horizon);

/// Distinct observed records with their probabilities.
struct ObservedLaw
{
    PanelColumns records;
    Eigen::VectorXd mass;
};

/// Law of the observed data implied by the world, censoring included.
ObservedLaw observed_law(const DiscreteWorld& world);

/// Empirical law of a dataset (identical rows merged).
ObservedLaw empirical_law(const PanelDataset& data);

/// Nested conditional expectations evaluated from an observed law, with
/// conditioning on remaining uncensored at every interval.
StateDistribution nested_formula_truth(const ObservedLaw& law, const ActionPlan& plan, int horizon);
StateDistribution nested_formula_truth(const DiscreteWorld& world, const ActionPlan& plan, int horizon);

/// n independent draws from the world's observed-data law.
PanelDataset world_sample(const DiscreteWorld& world, Eigen::Index n, std::uint64_t seed);

/// Number of individuals whose observed actions follow the plan for as long
/// as they are observed up to the horizon.
Eigen::Index plan_followers(const PanelDataset& data, const ActionPlan& plan, int horizon);

/// Kish effective size (sum w)^2 / sum w^2 of the inverse-probability
/// weights a deterministic plan puts on a sample drawn from the world: the
/// product of 1 / Pr(A_t = a_t | history) and 1 / Pr(C_k = 0 | history)
/// along each record that follows the plan uncensored, zero elsewhere.
double plan_effective_size(const DiscreteWorld& world, const PanelDataset& data, const ActionPlan& plan,
                           int horizon);

}  // namespace scgcomp
