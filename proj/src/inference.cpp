#include "scgcomp/inference.hpp"

#include "scgcomp/errors.hpp"
#include "scgcomp/parallel.hpp"
#include "scgcomp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace scgcomp {

// Acklam's rational approximation followed by one Halley step.
double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0)
            return -std::numeric_limits<double>::infinity();
        if (p == 1.0)
            return std::numeric_limits<double>::infinity();
        throw UsageError("normal quantile requires p in (0, 1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double wald_z(double level)
{
    if (!(level > 0.0 && level < 1.0))
        throw UsageError("confidence level must lie in (0, 1)");
    return normal_quantile(0.5 + 0.5 * level);
}

Interval wald_interval(double estimate, double se, double level)
{
    if (!(se >= 0.0))
        throw UsageError("standard error must be nonnegative");
    const double h = wald_z(level) * se;
    return {estimate - h, estimate + h};
}

void BootstrapConfig::check() const
{
    if (R < 2)
        throw UsageError("bootstrap needs at least 2 replicates");
    if (!(level > 0.0 && level < 1.0))
        throw UsageError("confidence level must lie in (0, 1)");
}

std::vector<RowIndex> bootstrap_indices(const PanelDataset& data, std::uint64_t seed, int r)
{
    const auto n = data.n();
    std::vector<RowIndex> canonical(static_cast<std::size_t>(n));
    std::iota(canonical.begin(), canonical.end(), RowIndex{0});
    const auto& ids = data.ids();
    std::stable_sort(canonical.begin(), canonical.end(), [&ids](RowIndex a, RowIndex b) {
        return ids[static_cast<std::size_t>(a)] < ids[static_cast<std::size_t>(b)];
    });
    const CounterRng rng(derive_seed(seed, {0x424F4F54ull}));
    std::vector<RowIndex> out(static_cast<std::size_t>(n));
    for (RowIndex j = 0; j < n; ++j) {
        const auto pick = rng.index(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r), 0,
                                    static_cast<std::uint32_t>(j));
        out[static_cast<std::size_t>(j)] = canonical[static_cast<std::size_t>(pick)];
    }
    return out;
}

BootstrapResult bootstrap(const PanelDataset& data, const Estimator& estimator, const BootstrapConfig& config,
                          std::optional<Eigen::VectorXd> point)
{
    config.check();
    BootstrapResult res;
    res.level = config.level;
    res.point = point ? *point : estimator(data);
    const auto q = res.point.size();
    res.replicates = Eigen::MatrixXd::Constant(config.R, q, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> ok(static_cast<std::size_t>(config.R), 0);
    parallel_for(config.R, config.threads, [&](std::int64_t r) {
        const auto idx = bootstrap_indices(data, config.seed, static_cast<int>(r));
        try {
            const Eigen::VectorXd est = estimator(data.select_rows(idx));
            if (est.size() == q && est.allFinite()) {
                res.replicates.row(r) = est.transpose();
                ok[static_cast<std::size_t>(r)] = 1;
            }
        } catch (const Error&) {
            // counted as discarded below
        }
    });
    const auto retained = static_cast<Eigen::Index>(std::count(ok.begin(), ok.end(), 1));
    res.discarded = config.R - static_cast<int>(retained);
    if (retained < 2)
        throw Error("bootstrap failed: " + std::to_string(res.discarded) + " of " + std::to_string(config.R)
                    + " replicates discarded");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
    for (int r = 0; r < config.R; ++r) {
        if (ok[static_cast<std::size_t>(r)])
            mean += res.replicates.row(r).transpose();
    }
    mean /= static_cast<double>(retained);
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(q);
    for (int r = 0; r < config.R; ++r) {
        if (ok[static_cast<std::size_t>(r)])
            ss += (res.replicates.row(r).transpose() - mean).array().square().matrix();
    }
    res.se = (ss / static_cast<double>(retained - 1)).cwiseSqrt();
    for (Eigen::Index j = 0; j < q; ++j)
        res.ci.push_back(wald_interval(res.point(j), res.se(j), config.level));
    return res;
}

Eigen::VectorXd psi_quantities(const PsiResult& r)
{
    Eigen::VectorXd v(r.has_terminal ? 8 : 7);
    v.head<3>() = r.proportions_a;
    v.segment<3>(3) = r.proportions_b;
    v(6) = r.psi2;
    if (r.has_terminal)
        v(7) = r.psi3.value();
    return v;
}

void attach_bootstrap(PsiResult& r, const BootstrapResult& b)
{
    const Eigen::Index q = r.has_terminal ? 8 : 7;
    if (b.se.size() != q)
        throw UsageError("bootstrap quantities do not match the contrast");
    r.se_a = b.se.head<3>();
    r.se_b = b.se.segment<3>(3);
    r.ci_a = std::vector<Interval>(b.ci.begin(), b.ci.begin() + 3);
    r.ci_b = std::vector<Interval>(b.ci.begin() + 3, b.ci.begin() + 6);
    r.se2 = b.se(6);
    r.ci2 = b.ci[6];
    if (r.has_terminal) {
        r.se3 = b.se(7);
        r.ci3 = b.ci[7];
    }
    r.bootstrap_discarded = b.discarded;
}

}  // namespace scgcomp
