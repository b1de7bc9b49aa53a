#include "scgcomp/study.hpp"

#include "scgcomp/errors.hpp"
#include "scgcomp/inference.hpp"
#include "scgcomp/parallel.hpp"
#include "scgcomp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace scgcomp {

MetricsRow compute_metrics(std::span<const double> estimates, std::span<const double> ses,
                           std::span<const char> ci_hits, double truth)
{
    const auto m = estimates.size();
    if (m < 2)
        throw UsageError("metrics need at least 2 estimates");
    if (ses.size() != m || ci_hits.size() != m)
        throw UsageError("estimates, standard errors and interval hits differ in length");
    const auto em = Eigen::Map<const Eigen::VectorXd>(estimates.data(), static_cast<Eigen::Index>(m));
    const auto sm = Eigen::Map<const Eigen::VectorXd>(ses.data(), static_cast<Eigen::Index>(m));
    MetricsRow row;
    const double mean = em.mean();
    row.truth = truth;
    row.bias = mean - truth;
    row.ese = std::sqrt((em.array() - mean).square().sum() / static_cast<double>(m - 1));
    row.rmse = std::sqrt(row.bias * row.bias + row.ese * row.ese);
    row.ase = sm.mean();
    row.ser = row.ase / row.ese;
    row.coverage = static_cast<double>(std::count(ci_hits.begin(), ci_hits.end(), char{1})) / static_cast<double>(m);
    row.iterations = static_cast<int>(m);
    return row;
}

StandardSpecs dgm_standard_specs()
{
    ModelSpec outcome;
    outcome.terms = {TermSpec::of(Source::action(0)), TermSpec::of(Source::action(1)),
                     TermSpec::of(Source::covariate("L", 0)), TermSpec::of(Source::prior_state(0))};
    ModelSpec cov;
    cov.terms = {TermSpec::of(Source::covariate("L", 1)), TermSpec::of(Source::action(1))};
    StandardSpecs s;
    s.outcome = SpecTemplate::of(outcome);
    s.covariate.emplace("L", SpecTemplate::of(cov));
    return s;
}

IceSpecs dgm_ice_specs()
{
    IceSpecs s;
    s.outcome = dgm_standard_specs().outcome;
    s.pseudo = SpecTemplate::saturated(
        {Source::covariate("L", 0), Source::prior_state_indicator(0), Source::action(0)});
    return s;
}

void StudyConfig::check() const
{
    if (sample_sizes.empty())
        throw UsageError("study needs at least one sample size");
    for (auto n : sample_sizes) {
        if (n < 2)
            throw UsageError("study sample sizes must be at least 2");
    }
    if (iterations < 2)
        throw UsageError("study needs at least 2 iterations");
    if (boot < 2)
        throw UsageError("bootstrap needs at least 2 replicates");
    if (!(level > 0.0 && level < 1.0))
        throw UsageError("confidence level must lie in (0, 1)");
    if (estimators.empty())
        throw UsageError("study needs at least one estimator");
    for (const auto& e : estimators) {
        if (std::find(study_estimators().begin(), study_estimators().end(), e) == study_estimators().end())
            throw UsageError("unknown estimator '" + e + "'");
    }
    if (plan_a.is_natural() || plan_b.is_natural())
        throw UsageError("study plans must be deterministic");
    if (horizon < 1 || horizon > DgmConfig::kTau)
        throw UsageError("study horizon outside 1..3");
    if (plan_a.size() < horizon || plan_b.size() < horizon)
        throw UsageError("action plan is shorter than the horizon");
    if (mc_b < 1)
        throw UsageError("Monte Carlo size must be at least 1");
    dgm.check();
    fit.check();
}

PsiResult study_estimate(const std::string& estimator, const PanelDataset& data, const StudyConfig& config,
                         std::uint64_t mc_seed)
{
    if (estimator == "ice")
        return ice_psi(data, config.plan_a, config.plan_b, config.horizon, dgm_ice_specs(), config.fit);
    if (estimator == "standard") {
        MonteCarloConfig mc;
        mc.B = config.mc_b;
        mc.seed = mc_seed;
        return standard_psi(data, config.plan_a, config.plan_b, config.horizon, dgm_standard_specs(), mc,
                            config.fit);
    }
    if (estimator == "alt1")
        return alt1_baseline_psi(data, config.plan_a.values()[0], config.plan_b.values()[0], config.horizon,
                                 alt1_default_specs(), config.fit);
    if (estimator == "alt2")
        return alt2_censor_terminal_psi(data, config.plan_a, config.plan_b, config.horizon, dgm_ice_specs(),
                                        config.fit);
    throw UsageError("unknown estimator '" + estimator + "'");
}

namespace {

bool covers(const Interval& ci, double truth) { return ci.lower <= truth && truth <= ci.upper; }

}  // namespace

std::vector<MetricsRow> summarize_study(const StudyConfig& config, std::span<const IterationRecord> records,
                                        double truth2, double truth3)
{
    std::vector<MetricsRow> out;
    for (auto n : config.sample_sizes) {
        for (const auto& name : config.estimators) {
            for (int component = 2; component <= 3; ++component) {
                std::vector<double> est, se;
                std::vector<char> hit;
                int failures = 0;
                bool any_terminal = false;
                for (const auto& r : records) {
                    if (r.n != n || r.estimator != name)
                        continue;
                    if (!r.ok) {
                        ++failures;
                        continue;
                    }
                    if (component == 3 && !r.has_terminal)
                        continue;
                    any_terminal = any_terminal || r.has_terminal;
                    const double truth = component == 2 ? truth2 : truth3;
                    est.push_back(component == 2 ? r.psi2 : r.psi3);
                    se.push_back(component == 2 ? r.se2 : r.se3);
                    hit.push_back(covers(component == 2 ? r.ci2 : r.ci3, truth) ? 1 : 0);
                }
                if (component == 3 && !any_terminal)
                    continue;
                MetricsRow row;
                if (est.size() >= 2) {
                    row = compute_metrics(est, se, hit, component == 2 ? truth2 : truth3);
                } else {
                    const double nan = std::numeric_limits<double>::quiet_NaN();
                    row.truth = component == 2 ? truth2 : truth3;
                    row.bias = row.ese = row.rmse = row.ase = row.ser = row.coverage = nan;
                    row.iterations = static_cast<int>(est.size());
                }
                row.estimator = name;
                row.component = component == 2 ? "intermediate" : "terminal";
                row.n = n;
                row.failures = failures;
                out.push_back(std::move(row));
            }
        }
    }
    return out;
}

StudyResult run_study(const StudyConfig& config, const StudyProgress& progress)
{
    config.check();
    StudyResult result;
    if (config.truth) {
        result.truth2 = config.truth->first;
        result.truth3 = config.truth->second;
    } else {
        const StateDistribution a = dgm_exact_truth(config.plan_a, config.dgm, config.horizon);
        const StateDistribution b = dgm_exact_truth(config.plan_b, config.dgm, config.horizon);
        result.truth2 = a(1) - b(1);
        result.truth3 = a(2) - b(2);
    }
    const auto E = config.estimators.size();
    for (auto n : config.sample_sizes) {
        std::vector<IterationRecord> slots(static_cast<std::size_t>(config.iterations) * E);
        parallel_for(config.iterations, config.threads, [&](std::int64_t it) {
            const auto iter = static_cast<std::uint64_t>(it);
            const auto un = static_cast<std::uint64_t>(n);
            const PanelDataset data = dgm_sample(n, derive_seed(config.seed, {0x44415441ull, un, iter}), config.dgm);
            const std::uint64_t boot_seed = derive_seed(config.seed, {0x424F4F54ull, un, iter});
            const std::uint64_t mc_seed = derive_seed(config.seed, {0x4D43ull, un, iter});
            for (std::size_t e = 0; e < E; ++e) {
                const auto& name = config.estimators[e];
                IterationRecord rec;
                rec.n = n;
                rec.iteration = static_cast<int>(it);
                rec.estimator = name;
                try {
                    PsiResult point = study_estimate(name, data, config, mc_seed);
                    BootstrapConfig bc;
                    bc.R = config.boot;
                    bc.seed = boot_seed;
                    bc.level = config.level;
                    const auto b = bootstrap(
                        data,
                        [&](const PanelDataset& d) { return psi_quantities(study_estimate(name, d, config, mc_seed)); },
                        bc, psi_quantities(point));
                    attach_bootstrap(point, b);
                    rec.ok = true;
                    rec.has_terminal = point.has_terminal;
                    rec.psi2 = point.psi2;
                    rec.se2 = *point.se2;
                    rec.ci2 = *point.ci2;
                    if (point.has_terminal) {
                        rec.psi3 = *point.psi3;
                        rec.se3 = *point.se3;
                        rec.ci3 = *point.ci3;
                    }
                    rec.discarded = b.discarded;
                } catch (const Error& err) {
                    rec.ok = false;
                    rec.error = err.what();
                }
                slots[static_cast<std::size_t>(it) * E + e] = std::move(rec);
            }
            if (progress)
                progress(n, static_cast<int>(it));
        });
        std::move(slots.begin(), slots.end(), std::back_inserter(result.records));
    }
    result.metrics = summarize_study(config, result.records, result.truth2, result.truth3);
    return result;
}

}  // namespace scgcomp
