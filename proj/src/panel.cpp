#include "scgcomp/panel.hpp"

#include "scgcomp/errors.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace scgcomp {

std::string_view to_string(CovariateType t)
{
    switch (t) {
    case CovariateType::Binary:
        return "binary";
    case CovariateType::Continuous:
        return "continuous";
    case CovariateType::Categorical:
        return "categorical";
    }
    return "binary";
}

CovariateType parse_covariate_type(std::string_view s)
{
    if (s == "binary")
        return CovariateType::Binary;
    if (s == "continuous")
        return CovariateType::Continuous;
    if (s == "categorical")
        return CovariateType::Categorical;
    throw UsageError("unknown covariate type '" + std::string(s) + "'");
}

PanelColumns PanelColumns::empty(Eigen::Index n, int tau, std::vector<CovariateInfo> covariates,
                                 bool has_baseline_state)
{
    if (tau < 1)
        throw UsageError("tau must be at least 1");
    PanelColumns c;
    c.tau = tau;
    c.ids.resize(static_cast<std::size_t>(n));
    c.has_baseline_state = has_baseline_state;
    c.state = Eigen::MatrixXi::Constant(n, tau + 1, kMissing);
    c.state.col(0).setConstant(code(OutcomeState::EventFree));
    c.censored = Eigen::MatrixXi::Constant(n, tau + 1, kMissing);
    c.censored.col(0).setZero();
    c.action = Eigen::MatrixXi::Constant(n, tau, kMissing);
    c.covariate.assign(covariates.size(),
                       Eigen::MatrixXd::Constant(n, tau, std::numeric_limits<double>::quiet_NaN()));
    c.covariates = std::move(covariates);
    return c;
}

int PanelColumns::covariate_index(std::string_view name) const
{
    for (std::size_t j = 0; j < covariates.size(); ++j) {
        if (covariates[j].name == name)
            return static_cast<int>(j);
    }
    return -1;
}

PanelDataset::PanelDataset(PanelColumns columns) : cols_(std::move(columns))
{
    const auto n = cols_.rows();
    const int tau = cols_.tau;
    if (tau < 1)
        throw UsageError("tau must be at least 1");
    auto shape_ok = [&](const auto& m, Eigen::Index c) { return m.rows() == n && m.cols() == c; };
    if (!shape_ok(cols_.state, tau + 1) || !shape_ok(cols_.censored, tau + 1)
        || !shape_ok(cols_.action, tau) || cols_.covariate.size() != cols_.covariates.size())
        throw UsageError("panel columns have inconsistent shapes");
    for (const auto& m : cols_.covariate) {
        if (!shape_ok(m, tau))
            throw UsageError("panel covariate block has inconsistent shape");
    }
}

std::optional<OutcomeState> PanelDataset::outcome(RowIndex i, int k) const
{
    const int y = state(i, k);
    if (y < 1 || y > 3)
        return std::nullopt;
    return static_cast<OutcomeState>(y);
}

PanelDataset PanelDataset::select_rows(std::span<const RowIndex> rows) const
{
    PanelColumns out;
    out.tau = cols_.tau;
    out.covariates = cols_.covariates;
    out.has_baseline_state = cols_.has_baseline_state;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.ids.reserve(rows.size());
    out.state.resize(m, cols_.state.cols());
    out.censored.resize(m, cols_.censored.cols());
    out.action.resize(m, cols_.action.cols());
    out.covariate.assign(cols_.covariate.size(), Eigen::MatrixXd(m, cols_.tau));
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto i = rows[static_cast<std::size_t>(r)];
        out.ids.push_back(cols_.ids[static_cast<std::size_t>(i)]);
        out.state.row(r) = cols_.state.row(i);
        out.censored.row(r) = cols_.censored.row(i);
        out.action.row(r) = cols_.action.row(i);
        for (std::size_t j = 0; j < cols_.covariate.size(); ++j)
            out.covariate[j].row(r) = cols_.covariate[j].row(i);
    }
    return PanelDataset(std::move(out));
}

RowList risk_set(const PanelDataset& data, int k, RiskSetPurpose purpose)
{
    if (k < 1 || k > data.tau())
        throw UsageError("interval " + std::to_string(k) + " outside 1.." + std::to_string(data.tau()));
    RowList rows;
    rows.reserve(static_cast<std::size_t>(data.n()));
    for (RowIndex i = 0; i < data.n(); ++i) {
        bool in = false;
        switch (purpose) {
        case RiskSetPurpose::OutcomeFit:
            in = data.censored(i, k) == 0 && is_alive_code(data.state(i, k - 1));
            break;
        case RiskSetPurpose::CovariateFit:
            in = data.censored(i, k) == 0 && is_alive_code(data.state(i, k));
            break;
        case RiskSetPurpose::Prediction:
            in = data.censored(i, k - 1) == 0 && is_alive_code(data.state(i, k - 1));
            break;
        }
        if (in)
            rows.push_back(i);
    }
    return rows;
}

OutcomeState compose_z(std::span<const std::optional<OutcomeState>> outcomes, int t)
{
    if (t < 1 || t > static_cast<int>(outcomes.size()))
        throw UsageError("horizon out of range");
    for (int j = 1; j <= t; ++j) {
        const auto& y = outcomes[static_cast<std::size_t>(j - 1)];
        if (!y)
            throw InsufficientFollowUpError("insufficient follow-up: outcome at interval "
                                            + std::to_string(j) + " is missing");
        if (*y == OutcomeState::Terminal)
            return OutcomeState::Terminal;
    }
    return *outcomes[static_cast<std::size_t>(t - 1)];
}

OutcomeState compose_z(const PanelDataset& data, RowIndex i, int t)
{
    std::vector<std::optional<OutcomeState>> ys(static_cast<std::size_t>(data.tau()));
    for (int k = 1; k <= data.tau(); ++k)
        ys[static_cast<std::size_t>(k - 1)] = data.outcome(i, k);
    return compose_z(ys, t);
}

namespace {

bool present(int v) { return v != kMissing; }
bool present(double v) { return !std::isnan(v); }

}  // namespace

ValidationReport validate_panel(const PanelDataset& data)
{
    ValidationReport report;
    const int tau = data.tau();
    const auto& covs = data.covariates();
    const auto ncov = static_cast<int>(covs.size());

    std::unordered_set<std::string> seen;
    for (RowIndex i = 0; i < data.n(); ++i) {
        const std::string& id = data.ids()[static_cast<std::size_t>(i)];
        auto flag = [&](int k, std::string rule) { report.push_back({id, k, std::move(rule)}); };

        if (!seen.insert(id).second)
            flag(0, "duplicate id");

        // Cell-level value checks.
        for (int k = 0; k <= tau; ++k) {
            const int y = data.state(i, k);
            const int c = data.censored(i, k);
            if (present(y) && (y < 1 || y > 3))
                flag(k, "invalid value");
            if (present(c) && c != 0 && c != 1)
                flag(k, "invalid value");
            if (k < tau) {
                const int a = data.action(i, k);
                if (present(a) && a != 0 && a != 1)
                    flag(k, "invalid value");
                for (int j = 0; j < ncov; ++j) {
                    const double v = data.covariate(j, i, k);
                    if (covs[j].type == CovariateType::Binary && present(v) && v != 0.0 && v != 1.0)
                        flag(k, "invalid value");
                    if (present(v) && !std::isfinite(v))
                        flag(k, "invalid value");
                }
            }
        }

        const int y0 = data.state(i, 0);
        if (y0 == code(OutcomeState::Terminal))
            flag(0, "baseline state not alive");
        bool baseline_complete = present(data.action(i, 0)) && is_alive_code(y0);
        for (int j = 0; j < ncov; ++j) {
            if (covs[j].baseline && !present(data.covariate(j, i, 0)))
                baseline_complete = false;
        }
        if (!baseline_complete && y0 != code(OutcomeState::Terminal))
            flag(0, "missing baseline data");

        for (int k = 2; k <= tau; ++k) {
            if (data.censored(i, k - 1) == 1 && data.censored(i, k) == 0)
                flag(k, "non-monotone censoring");
        }

        auto any_data_at = [&](int k) {
            if (present(data.state(i, k)))
                return true;
            if (k < tau) {
                if (present(data.action(i, k)))
                    return true;
                for (int j = 0; j < ncov; ++j) {
                    if (present(data.covariate(j, i, k)))
                        return true;
                }
            }
            return false;
        };

        enum class Status { Active, Censored, Dead, Ended };
        Status status = Status::Active;
        for (int k = 1; k <= tau; ++k) {
            switch (status) {
            case Status::Dead:
                if (any_data_at(k))
                    flag(k, "terminal state not absorbing");
                continue;
            case Status::Censored:
            case Status::Ended:
                if (any_data_at(k))
                    flag(k, status == Status::Censored ? "data after censoring"
                                                       : "non-monotone missingness");
                continue;
            case Status::Active:
                break;
            }

            const int c = data.censored(i, k);
            if (!present(c)) {
                flag(k, "missing censoring status");
                status = Status::Ended;
                if (any_data_at(k))
                    flag(k, "non-monotone missingness");
                continue;
            }
            if (c == 1) {
                status = Status::Censored;
                if (any_data_at(k))
                    flag(k, "data after censoring");
                continue;
            }
            const int y = data.state(i, k);
            if (!present(y)) {
                flag(k, "missing outcome for uncensored individual");
                status = Status::Ended;
                continue;
            }
            if (y == code(OutcomeState::Terminal)) {
                status = Status::Dead;
                bool after = false;
                if (k < tau) {
                    after = present(data.action(i, k));
                    for (int j = 0; j < ncov; ++j)
                        after = after || present(data.covariate(j, i, k));
                }
                if (after)
                    flag(k, "terminal state not absorbing");
                continue;
            }
            if (k < tau) {
                bool complete = present(data.action(i, k));
                for (int j = 0; j < ncov; ++j) {
                    if (covs[j].time_varying && !present(data.covariate(j, i, k)))
                        complete = false;
                }
                if (!complete) {
                    flag(k, "non-monotone missingness");
                    status = Status::Ended;
                }
            }
        }
    }
    return report;
}

}  // namespace scgcomp
