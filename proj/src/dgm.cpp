#include "scgcomp/dgm.hpp"

#include "scgcomp/errors.hpp"
#include "scgcomp/parallel.hpp"
#include "scgcomp/rng.hpp"

#include <array>
#include <cmath>

namespace scgcomp {

namespace {

constexpr std::uint32_t kStageL0 = 1;
std::uint32_t action_stage(int k) { return 10u + static_cast<std::uint32_t>(k); }
std::uint32_t censor_stage(int k) { return 20u + static_cast<std::uint32_t>(k); }
std::uint32_t outcome_stage(int k) { return 30u + static_cast<std::uint32_t>(k); }
std::uint32_t covariate_stage(int k) { return 40u + static_cast<std::uint32_t>(k); }

CounterRng dgm_rng(std::uint64_t seed) { return CounterRng(derive_seed(seed, {0x44474Dull})); }

/// One individual's path. `forced` holds the plan, or is null for observed
/// actions with censoring.
struct Path
{
    int l0 = 0;
    std::array<int, 3> a{kMissing, kMissing, kMissing};
    std::array<int, 4> c{0, kMissing, kMissing, kMissing};
    std::array<int, 4> y{kMissing, kMissing, kMissing, kMissing};
    std::array<int, 3> l{kMissing, kMissing, kMissing};
};

Path draw_path(const DgmConfig& cfg, const CounterRng& rng, std::uint64_t i, const std::vector<int>* forced,
               int horizon)
{
    Path p;
    p.l0 = rng.bernoulli(cfg.p_l0, i, kStageL0) ? 1 : 0;
    p.l[0] = p.l0;
    auto choose = [&](int k, double prob) {
        if (forced)
            return (*forced)[static_cast<std::size_t>(k)];
        return rng.bernoulli(prob, i, action_stage(k)) ? 1 : 0;
    };
    p.a[0] = choose(0, expit(cfg.action[0](0.0, p.l0)));
    // Action history as an integer key for potential-outcome draws.
    std::uint32_t prefix = 1;
    for (int k = 1; k <= horizon; ++k) {
        prefix = (prefix << 1) | static_cast<std::uint32_t>(p.a[static_cast<std::size_t>(k - 1)]);
        if (!forced && cfg.censoring
            && rng.bernoulli(expit(cfg.censor[static_cast<std::size_t>(k - 1)](p.a[static_cast<std::size_t>(k - 1)], 0.0)),
                             i, censor_stage(k))) {
            for (int j = k; j <= DgmConfig::kTau; ++j)
                p.c[static_cast<std::size_t>(j)] = 1;
            break;
        }
        p.c[static_cast<std::size_t>(k)] = 0;
        const int prev_y = k == 1 ? 0 : p.y[static_cast<std::size_t>(k - 1)];
        const StateDistribution pr = cfg.outcome_probabilities(
            k, p.a[static_cast<std::size_t>(k - 1)], p.a[static_cast<std::size_t>(cfg.eta3_action_time(k))],
            p.l[static_cast<std::size_t>(k - 1)], prev_y);
        const int y = rng.categorical3(pr(0), pr(1), i, outcome_stage(k), prefix) + 1;
        p.y[static_cast<std::size_t>(k)] = y;
        if (y == code(OutcomeState::Terminal) || k == DgmConfig::kTau || k == horizon)
            break;
        const auto& lp = cfg.covariate[static_cast<std::size_t>(k - 1)];
        p.l[static_cast<std::size_t>(k)] =
            rng.bernoulli(expit(lp(p.a[static_cast<std::size_t>(k - 1)], p.l[static_cast<std::size_t>(k - 1)])), i,
                          covariate_stage(k), prefix)
                ? 1
                : 0;
        p.a[static_cast<std::size_t>(k)] =
            choose(k, expit(cfg.action[static_cast<std::size_t>(k)](p.a[static_cast<std::size_t>(k - 1)],
                                                                      p.l[static_cast<std::size_t>(k)])));
    }
    return p;
}

}  // namespace

double expit(double x)
{
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void DgmConfig::check() const
{
    if (!(p_l0 >= 0.0 && p_l0 <= 1.0))
        throw UsageError("Pr(L0 = 1) must lie in [0, 1]");
    if (eta3_k3_action_lag != 1 && eta3_k3_action_lag != 2)
        throw UsageError("eta3_k3_action_lag must be 1 or 2");
    if (!std::isfinite(reference_eta))
        throw UsageError("reference linear predictor must be finite");
}

StateDistribution DgmConfig::outcome_probabilities(int k, int a_eta2, int a_eta3, int l, int y) const
{
    const auto j = static_cast<std::size_t>(k - 1);
    const double yv = k == 1 ? 0.0 : static_cast<double>(y);
    const Eigen::Vector3d eta(reference_eta, eta2[j](a_eta2, l, yv), eta3[j](a_eta3, l, yv));
    const Eigen::Vector3d e = (eta.array() - eta.maxCoeff()).exp();
    return e / e.sum();
}

PanelDataset dgm_sample(Eigen::Index n, std::uint64_t seed, const DgmConfig& config)
{
    config.check();
    if (n < 1)
        throw UsageError("sample size must be at least 1");
    const CounterRng rng = dgm_rng(seed);
    const std::vector<CovariateInfo> covs{CovariateInfo{"L", CovariateType::Binary, true, true, {}}};
    auto cols = PanelColumns::empty(n, DgmConfig::kTau, covs);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Path p = draw_path(config, rng, static_cast<std::uint64_t>(i), nullptr, DgmConfig::kTau);
        cols.ids[static_cast<std::size_t>(i)] = std::to_string(i + 1);
        for (int t = 0; t < DgmConfig::kTau; ++t) {
            cols.action(i, t) = p.a[static_cast<std::size_t>(t)];
            const int l = p.l[static_cast<std::size_t>(t)];
            if (l != kMissing)
                cols.covariate[0](i, t) = l;
        }
        for (int k = 1; k <= DgmConfig::kTau; ++k) {
            cols.censored(i, k) = p.c[static_cast<std::size_t>(k)];
            cols.state(i, k) = p.y[static_cast<std::size_t>(k)];
        }
    }
    return PanelDataset(std::move(cols));
}

StateDistribution dgm_truth(const ActionPlan& plan, std::int64_t N, std::uint64_t seed, const DgmConfig& config,
                            int threads, int horizon)
{
    config.check();
    if (plan.is_natural())
        throw UsageError("truth requires a deterministic plan");
    if (horizon < 1 || horizon > DgmConfig::kTau)
        throw UsageError("horizon outside 1..3");
    if (plan.size() < horizon)
        throw UsageError("action plan is shorter than the horizon");
    if (N < 1)
        throw UsageError("N must be at least 1");
    std::vector<int> forced = plan.values();
    forced.resize(DgmConfig::kTau, 0);
    const CounterRng rng = dgm_rng(seed);
    constexpr std::int64_t chunk = 1 << 16;
    const std::int64_t blocks = (N + chunk - 1) / chunk;
    std::vector<std::array<std::int64_t, 3>> counts(static_cast<std::size_t>(blocks), {0, 0, 0});
    parallel_for(blocks, threads, [&](std::int64_t b) {
        auto& c = counts[static_cast<std::size_t>(b)];
        for (std::int64_t i = b * chunk; i < std::min(N, (b + 1) * chunk); ++i) {
            const Path p = draw_path(config, rng, static_cast<std::uint64_t>(i), &forced, horizon);
            int z = p.y[static_cast<std::size_t>(horizon)];
            for (int k = 1; k <= horizon; ++k) {
                if (p.y[static_cast<std::size_t>(k)] == code(OutcomeState::Terminal))
                    z = code(OutcomeState::Terminal);
            }
            ++c[static_cast<std::size_t>(z - 1)];
        }
    });
    std::array<std::int64_t, 3> total{0, 0, 0};
    for (const auto& c : counts) {
        for (std::size_t s = 0; s < 3; ++s)
            total[s] += c[s];
    }
    const auto n = static_cast<double>(N);
    return {static_cast<double>(total[0]) / n, static_cast<double>(total[1]) / n, static_cast<double>(total[2]) / n};
}

DiscreteWorld to_discrete_world(const DgmConfig& config)
{
    config.check();
    constexpr int tau = DgmConfig::kTau;
    auto get = [](std::uint64_t h, int position) { return static_cast<int>((h >> position) & 1u); };
    auto action_at = [&](std::uint64_t h, int t) { return get(h, t == 0 ? 1 : 3 * t + 1); };
    auto covariate_at = [&](std::uint64_t h, int t) { return get(h, t == 0 ? 0 : 3 * t); };
    auto state_at = [&](std::uint64_t h, int t) { return get(h, 3 * t - 1) ? 2 : 1; };

    DiscreteWorld w;
    w.tau = tau;
    w.p_l0 = config.p_l0;
    for (int k = 0; k < tau; ++k) {
        Eigen::VectorXd t(Eigen::Index{1} << DiscreteWorld::bits_before_action(k));
        for (Eigen::Index h = 0; h < t.size(); ++h) {
            const auto u = static_cast<std::uint64_t>(h);
            t(h) = expit(k == 0 ? config.action[0](0.0, covariate_at(u, 0))
                                : config.action[static_cast<std::size_t>(k)](action_at(u, k - 1), covariate_at(u, k)));
        }
        w.action.push_back(std::move(t));
    }
    for (int k = 1; k <= tau; ++k) {
        const auto rows = Eigen::Index{1} << DiscreteWorld::bits_before_interval(k);
        Eigen::VectorXd c(rows);
        Eigen::MatrixXd y(rows, 3);
        for (Eigen::Index h = 0; h < rows; ++h) {
            const auto u = static_cast<std::uint64_t>(h);
            c(h) = config.censoring ? expit(config.censor[static_cast<std::size_t>(k - 1)](action_at(u, k - 1), 0.0))
                                    : 0.0;
            y.row(h) = config
                           .outcome_probabilities(k, action_at(u, k - 1), action_at(u, config.eta3_action_time(k)),
                                                  covariate_at(u, k - 1), k == 1 ? 0 : state_at(u, k - 1))
                           .transpose();
        }
        w.censor.push_back(std::move(c));
        w.outcome.push_back(std::move(y));
        if (k < tau) {
            Eigen::VectorXd l(Eigen::Index{1} << DiscreteWorld::bits_before_covariate(k));
            for (Eigen::Index h = 0; h < l.size(); ++h) {
                const auto u = static_cast<std::uint64_t>(h);
                l(h) = expit(config.covariate[static_cast<std::size_t>(k - 1)](action_at(u, k - 1),
                                                                               covariate_at(u, k - 1)));
            }
            w.covariate.push_back(std::move(l));
        }
    }
    w.check();
    return w;
}

StateDistribution dgm_exact_truth(const ActionPlan& plan, const DgmConfig& config, int horizon)
{
    if (plan.is_natural())
        throw UsageError("truth requires a deterministic plan");
    return enumerate_truth(to_discrete_world(config), plan, horizon);
}

}  // namespace scgcomp
