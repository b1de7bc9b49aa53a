#include "scgcomp/alternatives.hpp"

#include "scgcomp/errors.hpp"

namespace scgcomp {

namespace {

void check_baseline_only(const SpecTemplate& tmpl, const PanelColumns& cols, int horizon)
{
    for (int t_c = 0; t_c < horizon; ++t_c) {
        for (const auto& term : tmpl.at(cols, t_c).terms) {
            for (const auto& s : term.factors) {
                if (s.is_action() && s.time_at(t_c) != 0)
                    throw UsageError("baseline-action estimator specs may only reference A0, found '" + s.label()
                                     + "' at time " + std::to_string(t_c));
            }
        }
    }
}

}  // namespace

PsiResult alt1_baseline_psi(const PanelDataset& data, int a0, int a0_prime, int horizon, const IceSpecs& specs,
                            const FitOptions& options)
{
    if (horizon < 1 || horizon > data.tau())
        throw UsageError("horizon " + std::to_string(horizon) + " outside 1.." + std::to_string(data.tau()));
    check_baseline_only(specs.outcome, data.columns(), horizon);
    check_baseline_only(specs.pseudo, data.columns(), horizon);
    const ActionOverride ov[2] = {ActionOverride::baseline_only(a0), ActionOverride::baseline_only(a0_prime)};
    const auto runs = ice_core(data, ov, horizon, specs, options);
    return make_psi(horizon, runs[0].proportions, runs[1].proportions);
}

PsiResult alt2_censor_terminal_psi(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b,
                                   int horizon, const IceSpecs& specs, const FitOptions& options)
{
    check_plan_horizon(plan_a, horizon, data.tau());
    check_plan_horizon(plan_b, horizon, data.tau());
    const ActionOverride ov[2] = {ActionOverride::from_plan(plan_a), ActionOverride::from_plan(plan_b)};
    const auto runs = ice_core(data, ov, horizon, specs, options, TerminalHandling::Censoring);
    return make_psi(horizon, runs[0].proportions, runs[1].proportions, false);
}

IceSpecs alt1_default_specs()
{
    ModelSpec spec;
    spec.terms.push_back(TermSpec::of(Source::baseline_action()));
    return IceSpecs::same(SpecTemplate::of(spec));
}

}  // namespace scgcomp
