#include "scgcomp/gcomp_standard.hpp"

#include "scgcomp/errors.hpp"
#include "scgcomp/parallel.hpp"
#include "scgcomp/rng.hpp"

#include <array>

namespace scgcomp {

namespace {

constexpr std::uint32_t kStageBaseline = 0;
std::uint32_t outcome_stage(int k) { return 1000u * static_cast<std::uint32_t>(k); }
std::uint32_t covariate_stage(int k, int j) { return 1000u * static_cast<std::uint32_t>(k) + 1u + static_cast<std::uint32_t>(j); }

void check_plan(const ActionPlan& plan, int horizon)
{
    if (plan.is_natural())
        throw UsageError("natural course is unsupported for standard g-computation");
    if (plan.size() < horizon)
        throw UsageError("action plan '" + plan.to_string() + "' is shorter than the horizon "
                         + std::to_string(horizon));
}

std::vector<int> time_varying_covariates(const PanelColumns& cols)
{
    std::vector<int> out;
    for (std::size_t j = 0; j < cols.covariates.size(); ++j) {
        if (cols.covariates[j].time_varying)
            out.push_back(static_cast<int>(j));
    }
    return out;
}

/// Simulates trajectories [begin, end) into fresh columns.
PanelColumns simulate_block(const SequentialModels& models, const PanelDataset& data, const ActionPlan& plan,
                            const CounterRng& rng, std::int64_t begin, std::int64_t end)
{
    const auto& src = data.columns();
    const auto m = static_cast<Eigen::Index>(end - begin);
    auto sim = PanelColumns::empty(m, src.tau, src.covariates, src.has_baseline_state);
    const auto n = static_cast<std::uint64_t>(data.n());
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto b = static_cast<std::uint64_t>(begin + r);
        const auto i = static_cast<Eigen::Index>(rng.index(n, b, kStageBaseline));
        sim.ids[static_cast<std::size_t>(r)] = "sim" + std::to_string(b);
        sim.state(r, 0) = src.state(i, 0);
        for (std::size_t j = 0; j < src.covariates.size(); ++j)
            sim.covariate[j](r, 0) = src.covariate[j](i, 0);
    }

    RowList alive(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r)
        alive[static_cast<std::size_t>(r)] = r;
    for (int k = 1; k <= models.horizon; ++k) {
        for (RowIndex r : alive)
            sim.action(r, k - 1) = plan.values()[static_cast<std::size_t>(k - 1)];
        const Eigen::MatrixXd P = predict_multinomial(models.outcome_models[static_cast<std::size_t>(k - 1)],
                                                      build_design(models.outcome_specs[static_cast<std::size_t>(k - 1)],
                                                                   sim, alive, k - 1));
        RowList still;
        still.reserve(alive.size());
        for (std::size_t a = 0; a < alive.size(); ++a) {
            const RowIndex r = alive[a];
            const auto b = static_cast<std::uint64_t>(begin + r);
            const auto row = static_cast<Eigen::Index>(a);
            const int c = rng.categorical3(P(row, 0), P(row, 1), b, outcome_stage(k));
            sim.censored(r, k) = 0;
            sim.state(r, k) = c + 1;
            if (c != index(OutcomeState::Terminal))
                still.push_back(r);
        }
        alive = std::move(still);
        if (k == models.horizon || k >= src.tau)
            break;
        for (const auto& cm : models.covariate_models[static_cast<std::size_t>(k - 1)]) {
            const Eigen::VectorXd p = predict_logistic(cm.fit, build_design(cm.spec, sim, alive, k));
            for (std::size_t a = 0; a < alive.size(); ++a) {
                const RowIndex r = alive[a];
                const auto b = static_cast<std::uint64_t>(begin + r);
                sim.covariate[static_cast<std::size_t>(cm.index)](r, k) =
                    rng.bernoulli(p(static_cast<Eigen::Index>(a)), b, covariate_stage(k, cm.index)) ? 1.0 : 0.0;
            }
        }
    }
    return sim;
}

CounterRng stream_rng(const MonteCarloConfig& mc, std::uint64_t stream)
{
    return CounterRng(derive_seed(mc.seed, {0x5354414E44ull, stream}));
}

}  // namespace

void MonteCarloConfig::check() const
{
    if (B < 1)
        throw UsageError("Monte Carlo size B must be at least 1");
    if (chunk < 1)
        throw UsageError("Monte Carlo chunk size must be at least 1");
}

StandardSpecs StandardSpecs::resolved(const PanelColumns& data) const
{
    StandardSpecs out;
    out.outcome = outcome.resolved(data);
    for (const auto& [name, tmpl] : covariate)
        out.covariate.emplace(name, tmpl.resolved(data));
    return out;
}

SequentialModels fit_sequential(const PanelDataset& data, const StandardSpecs& specs, int horizon,
                                const FitOptions& options)
{
    if (horizon < 1 || horizon > data.tau())
        throw UsageError("horizon " + std::to_string(horizon) + " outside 1.." + std::to_string(data.tau()));
    const auto& cols = data.columns();
    const auto tv = time_varying_covariates(cols);
    for (int j : tv) {
        const auto& info = cols.covariates[static_cast<std::size_t>(j)];
        if (info.type != CovariateType::Binary)
            throw UsageError("standard g-computation supports binary time-varying covariates only ('" + info.name
                             + "' is " + std::string(to_string(info.type)) + ")");
        if (!specs.covariate.contains(info.name))
            throw UsageError("no model specification for time-varying covariate '" + info.name + "'");
    }

    SequentialModels models;
    models.horizon = horizon;
    for (int k = 1; k <= horizon; ++k) {
        const RowList rows = risk_set(data, k, RiskSetPurpose::OutcomeFit);
        if (rows.empty())
            throw EmptyRiskSetError("no individuals at risk at interval " + std::to_string(k));
        ModelSpec spec = specs.outcome.at(cols, k - 1);
        check_spec(spec, cols, k - 1);
        std::vector<OutcomeState> y;
        y.reserve(rows.size());
        for (RowIndex i : rows)
            y.push_back(*data.outcome(i, k));
        FittedMultinomial fit = fit_multinomial(build_design(spec, cols, rows, k - 1), y, std::nullopt, options);
        if (!fit.converged)
            throw FitError("outcome model at interval " + std::to_string(k)
                           + (fit.separated ? " is separated" : " did not converge"));
        models.outcome_specs.push_back(std::move(spec));
        models.outcome_models.push_back(std::move(fit));
    }
    for (int k = 1; k < horizon; ++k) {
        std::vector<FittedCovariateModel> at_k;
        const RowList rows = risk_set(data, k, RiskSetPurpose::CovariateFit);
        if (rows.empty())
            throw EmptyRiskSetError("no individuals at risk at interval " + std::to_string(k));
        for (int j : tv) {
            const auto& info = cols.covariates[static_cast<std::size_t>(j)];
            FittedCovariateModel cm;
            cm.name = info.name;
            cm.index = j;
            cm.spec = specs.covariate.at(info.name).at(cols, k);
            check_spec(cm.spec, cols, k, j);
            Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const double v = data.covariate(j, rows[r], k);
                if (std::isnan(v))
                    throw ValidationError("missing covariate '" + info.name + "' for individual '"
                                          + data.ids()[static_cast<std::size_t>(rows[r])] + "' at time "
                                          + std::to_string(k));
                y(static_cast<Eigen::Index>(r)) = v;
            }
            cm.fit = fit_logistic(build_design(cm.spec, cols, rows, k), y, std::nullopt, options);
            if (!cm.fit.converged)
                throw FitError("covariate model for '" + info.name + "' at interval " + std::to_string(k)
                               + (cm.fit.separated ? " is separated" : " did not converge"));
            at_k.push_back(std::move(cm));
        }
        models.covariate_models.push_back(std::move(at_k));
    }
    return models;
}

PanelColumns simulate_cohort(const SequentialModels& models, const PanelDataset& data, const ActionPlan& plan,
                             const MonteCarloConfig& mc, std::uint64_t stream)
{
    mc.check();
    check_plan(plan, models.horizon);
    return simulate_block(models, data, plan, stream_rng(mc, stream), 0, mc.B);
}

StateDistribution simulate_proportions(const SequentialModels& models, const PanelDataset& data,
                                       const ActionPlan& plan, const MonteCarloConfig& mc, std::uint64_t stream)
{
    mc.check();
    check_plan(plan, models.horizon);
    const CounterRng rng = stream_rng(mc, stream);
    const std::int64_t blocks = (mc.B + mc.chunk - 1) / mc.chunk;
    std::vector<std::array<std::int64_t, 3>> counts(static_cast<std::size_t>(blocks), {0, 0, 0});
    parallel_for(blocks, mc.threads, [&](std::int64_t blk) {
        const std::int64_t begin = blk * mc.chunk;
        const std::int64_t end = std::min(mc.B, begin + mc.chunk);
        const PanelDataset sim(simulate_block(models, data, plan, rng, begin, end));
        auto& c = counts[static_cast<std::size_t>(blk)];
        for (Eigen::Index r = 0; r < sim.n(); ++r)
            ++c[static_cast<std::size_t>(index(compose_z(sim, r, models.horizon)))];
    });
    std::array<std::int64_t, 3> total{0, 0, 0};
    for (const auto& c : counts) {
        for (int s = 0; s < 3; ++s)
            total[static_cast<std::size_t>(s)] += c[static_cast<std::size_t>(s)];
    }
    const auto B = static_cast<double>(mc.B);
    return StateDistribution(static_cast<double>(total[0]) / B, static_cast<double>(total[1]) / B,
                             static_cast<double>(total[2]) / B);
}

StateDistribution standard_proportions(const PanelDataset& data, const ActionPlan& plan, int horizon,
                                       const StandardSpecs& specs, const MonteCarloConfig& mc,
                                       const FitOptions& options)
{
    check_plan(plan, horizon);
    return simulate_proportions(fit_sequential(data, specs, horizon, options), data, plan, mc);
}

PsiResult standard_psi(const PanelDataset& data, const ActionPlan& plan_a, const ActionPlan& plan_b, int horizon,
                       const StandardSpecs& specs, const MonteCarloConfig& mc, const FitOptions& options)
{
    check_plan(plan_a, horizon);
    check_plan(plan_b, horizon);
    const SequentialModels models = fit_sequential(data, specs, horizon, options);
    const StateDistribution a = simulate_proportions(models, data, plan_a, mc, 0);
    const StateDistribution b = simulate_proportions(models, data, plan_b, mc, mc.common_random_numbers ? 0 : 1);
    return make_psi(horizon, a, b);
}

}  // namespace scgcomp
