#include "scgcomp/gcomp_ice.hpp"

#include "scgcomp/errors.hpp"

#include <limits>

namespace scgcomp {

void check_plan_horizon(const ActionPlan& plan, int horizon, int tau)
{
    if (horizon < 1 || horizon > tau)
        throw UsageError("horizon " + std::to_string(horizon) + " outside 1.." + std::to_string(tau));
    if (!plan.is_natural() && plan.size() < horizon)
        throw UsageError("action plan '" + plan.to_string() + "' is shorter than the horizon "
                         + std::to_string(horizon));
}

namespace {

void require_fit(const FittedMultinomial& fit, int k, const char* what)
{
    if (!fit.converged)
        throw FitError(std::string(what) + " model at interval " + std::to_string(k)
                       + (fit.separated ? " is separated" : " did not converge"));
}

void require_rows(const RowList& rows, int k)
{
    if (rows.empty())
        throw EmptyRiskSetError("no individuals at risk at interval " + std::to_string(k));
}

}  // namespace

std::vector<IceRun> ice_core(const PanelDataset& data, std::span<const ActionOverride> overrides, int horizon,
                             const IceSpecs& specs, const FitOptions& options, TerminalHandling terminal)
{
    if (horizon < 1 || horizon > data.tau())
        throw UsageError("horizon " + std::to_string(horizon) + " outside 1.." + std::to_string(data.tau()));
    const auto& cols = data.columns();
    const auto n = data.n();
    const bool censor_deaths = terminal == TerminalHandling::Censoring;
    auto is_death = [&](RowIndex i, int k) { return data.state(i, k) == code(OutcomeState::Terminal); };

    // Horizon step: hard labels, shared by every plan.
    const int t = horizon;
    RowList fit_rows = risk_set(data, t, RiskSetPurpose::OutcomeFit);
    Eigen::Index removed_t = 0;
    if (censor_deaths) {
        const auto before = static_cast<Eigen::Index>(fit_rows.size());
        std::erase_if(fit_rows, [&](RowIndex i) { return is_death(i, t); });
        removed_t = before - static_cast<Eigen::Index>(fit_rows.size());
    }
    require_rows(fit_rows, t);
    const ModelSpec spec_t = specs.outcome.at(cols, t - 1);
    check_spec(spec_t, cols, t - 1);
    std::vector<OutcomeState> labels;
    labels.reserve(fit_rows.size());
    Eigen::Index deaths_t = 0;
    for (RowIndex i : fit_rows) {
        labels.push_back(*data.outcome(i, t));
        deaths_t += is_death(i, t) ? 1 : 0;
    }
    const FittedMultinomial top =
        fit_multinomial(build_design(spec_t, cols, fit_rows, t - 1), labels, std::nullopt, options);
    require_fit(top, t, "outcome");
    const RowList top_pred = risk_set(data, t, RiskSetPurpose::Prediction);
    require_rows(top_pred, t);

    std::vector<IceRun> runs;
    runs.reserve(overrides.size());
    for (const auto& ov : overrides) {
        IceRun run;
        run.trace.horizon = t;
        IceStep top_step{t, static_cast<Eigen::Index>(fit_rows.size()), static_cast<Eigen::Index>(top_pred.size()),
                         censor_deaths ? 0 : deaths_t, removed_t, top.iterations, top.final_gradient_norm};
        run.trace.steps.push_back(top_step);

        // q(i) holds the predicted distribution of the horizon state given
        // history through the current step, for rows in the prediction set.
        Eigen::MatrixXd q = Eigen::MatrixXd::Constant(n, 3, std::numeric_limits<double>::quiet_NaN());
        {
            const Eigen::MatrixXd P = predict_multinomial(top, build_design(spec_t, cols, top_pred, t - 1, ov));
            for (std::size_t r = 0; r < top_pred.size(); ++r)
                q.row(top_pred[r]) = P.row(static_cast<Eigen::Index>(r));
        }

        for (int k = t - 1; k >= 1; --k) {
            RowList rows = risk_set(data, k, RiskSetPurpose::OutcomeFit);
            IceStep step;
            step.interval = k;
            if (censor_deaths) {
                const auto before = static_cast<Eigen::Index>(rows.size());
                std::erase_if(rows, [&](RowIndex i) { return is_death(i, k); });
                step.removed = before - static_cast<Eigen::Index>(rows.size());
            }
            require_rows(rows, k);
            Eigen::MatrixXd Y(static_cast<Eigen::Index>(rows.size()), 3);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const RowIndex i = rows[r];
                if (is_death(i, k)) {
                    Y.row(static_cast<Eigen::Index>(r)) = terminal_distribution().transpose();
                    ++step.replacements;
                } else {
                    Y.row(static_cast<Eigen::Index>(r)) = q.row(i);
                }
            }
            const ModelSpec spec_k = specs.pseudo.at(cols, k - 1);
            check_spec(spec_k, cols, k - 1);
            const FittedMultinomial fit =
                fit_multinomial(build_design(spec_k, cols, rows, k - 1), Y, std::nullopt, options);
            require_fit(fit, k, "pseudo-outcome");
            const RowList pred = risk_set(data, k, RiskSetPurpose::Prediction);
            require_rows(pred, k);
            const Eigen::MatrixXd P = predict_multinomial(fit, build_design(spec_k, cols, pred, k - 1, ov));
            q.setConstant(std::numeric_limits<double>::quiet_NaN());
            for (std::size_t r = 0; r < pred.size(); ++r)
                q.row(pred[r]) = P.row(static_cast<Eigen::Index>(r));
            step.fit_size = static_cast<Eigen::Index>(rows.size());
            step.prediction_size = static_cast<Eigen::Index>(pred.size());
            step.iterations = fit.iterations;
            step.gradient_norm = fit.final_gradient_norm;
            run.trace.steps.push_back(step);
        }

        // Mean over everyone alive at baseline.
        StateDistribution sum = StateDistribution::Zero();
        for (RowIndex i = 0; i < n; ++i) {
            if (std::isnan(q(i, 0)))
                sum += terminal_distribution();
            else
                sum += q.row(i).transpose();
        }
        run.proportions = sum / static_cast<double>(n);
        runs.push_back(std::move(run));
    }
    return runs;
}

std::pair<StateDistribution, IceTrace> ice_proportions(const PanelDataset& data, const ActionPlan& plan, int horizon,
                                                       const IceSpecs& specs, const FitOptions& options)
{
    check_plan_horizon(plan, horizon, data.tau());
    const ActionOverride ov = ActionOverride::from_plan(plan);
    auto runs = ice_core(data, std::span(&ov, 1), horizon, specs, options);
    return {runs.front().proportions, std::move(runs.front().trace)};
}

PsiResult ice_psi(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b, int horizon,
                  const IceSpecs& specs, const FitOptions& options)
{
    check_plan_horizon(plan_a, horizon, data.tau());
    check_plan_horizon(plan_b, horizon, data.tau());
    const ActionOverride ov[2] = {ActionOverride::from_plan(plan_a), ActionOverride::from_plan(plan_b)};
    const auto runs = ice_core(data, ov, horizon, specs, options);
    return make_psi(horizon, runs[0].proportions, runs[1].proportions);
}

std::vector<PsiResult> ice_trajectory(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b,
                                      const IceSpecs& specs, const FitOptions& options)
{
    std::vector<PsiResult> out;
    for (int t = 1; t <= data.tau(); ++t)
        out.push_back(ice_psi(data, plan_a, plan_b, t, specs, options));
    return out;
}

}  // namespace scgcomp
