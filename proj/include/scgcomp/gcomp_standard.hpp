#pragma once

#include "scgcomp/glm.hpp"
#include "scgcomp/model_spec.hpp"
#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace scgcomp {

struct StandardSpecs
{
    SpecTemplate outcome;
    /// One model per time-varying covariate, keyed by name.
    std::map<std::string, SpecTemplate> covariate;

    StandardSpecs resolved(const PanelColumns& data) const;
};

struct FittedCovariateModel
{
    std::string name;
    int index = 0;
    ModelSpec spec;
    FittedBinary fit;
};

/// Outcome and covariate models fitted forward in time.
struct SequentialModels
{
    int horizon = 0;
    /// Entry k-1 models Y_k given history through k-1.
    std::vector<ModelSpec> outcome_specs;
    std::vector<FittedMultinomial> outcome_models;
    /// Entry k-1 holds the models for L_k in declared covariate order.
    std::vector<std::vector<FittedCovariateModel>> covariate_models;
};

struct MonteCarloConfig
{
    std::int64_t B = 100000;
    std::uint64_t seed = 0;
    /// Same random numbers for both plans of a contrast.
    bool common_random_numbers = true;
    int threads = 1;
    /// Trajectories simulated per design block.
    std::int64_t chunk = 8192;

    void check() const;
};

SequentialModels fit_sequential(const PanelDataset& data, const StandardSpecs& specs, int horizon,
                                const FitOptions& options = {});

/// Synthetic cohort of B trajectories under a deterministic plan. `stream`
/// selects an independent family of random numbers.
PanelColumns simulate_cohort(const SequentialModels& models, const PanelDataset& data, const ActionPlan& plan,
                             const MonteCarloConfig& mc, std::uint64_t stream = 0);

/// State proportions at the models' horizon, simulated block by block.
StateDistribution simulate_proportions(const SequentialModels& models, const PanelDataset& data,
                                       const ActionPlan& plan, const MonteCarloConfig& mc, std::uint64_t stream = 0);

StateDistribution standard_proportions(const PanelDataset& data, const ActionPlan& plan, int horizon,
                                       const StandardSpecs& specs, const MonteCarloConfig& mc,
                                       const FitOptions& options = {});

PsiResult standard_psi(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b, int horizon,
                       const StandardSpecs& specs, const MonteCarloConfig& mc, const FitOptions& options = {});

}  // namespace scgcomp
