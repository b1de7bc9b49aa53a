#include "scgcomp/report.hpp"

#include "scgcomp/panel_io.hpp"

#include <cmath>
#include <optional>

namespace scgcomp {

namespace {

json interval_json(const std::optional<Interval>& ci)
{
    if (!ci)
        return nullptr;
    return json::array({number_or_null(ci->lower), number_or_null(ci->upper)});
}

json state_json(const StateDistribution& p)
{
    return json::array({number_or_null(p(0)), number_or_null(p(1)), number_or_null(p(2))});
}

std::string cell(std::optional<double> v) { return v ? format_double(*v) : std::string(); }

void csv_row(std::ostream& out, const std::string& name, double est, std::optional<double> se,
             std::optional<Interval> ci)
{
    out << name << ',' << format_double(est) << ',' << cell(se) << ',' << cell(ci ? std::optional(ci->lower) : std::nullopt)
        << ',' << cell(ci ? std::optional(ci->upper) : std::nullopt) << '\n';
}

}  // namespace

json number_or_null(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

json to_json(const PsiResult& r)
{
    json j;
    j["horizon"] = r.horizon;
    j["proportions_a"] = state_json(r.proportions_a);
    j["proportions_b"] = state_json(r.proportions_b);
    j["psi1"] = r.has_terminal ? number_or_null(r.psi1()) : json(nullptr);
    j["psi2"] = number_or_null(r.psi2);
    j["psi3"] = r.psi3 ? number_or_null(*r.psi3) : json(nullptr);
    j["se2"] = r.se2 ? number_or_null(*r.se2) : json(nullptr);
    j["se3"] = r.se3 ? number_or_null(*r.se3) : json(nullptr);
    j["ci2"] = interval_json(r.ci2);
    j["ci3"] = interval_json(r.ci3);
    j["se_a"] = r.se_a ? state_json(*r.se_a) : json(nullptr);
    j["se_b"] = r.se_b ? state_json(*r.se_b) : json(nullptr);
    if (r.ci_a && r.ci_b) {
        json a = json::array(), b = json::array();
        for (const auto& c : *r.ci_a)
            a.push_back(interval_json(c));
        for (const auto& c : *r.ci_b)
            b.push_back(interval_json(c));
        j["ci_a"] = a;
        j["ci_b"] = b;
    }
    j["has_terminal"] = r.has_terminal;
    j["bootstrap_discarded"] = r.bootstrap_discarded;
    return j;
}

json to_json(const MetricsRow& m)
{
    return json{{"estimator", m.estimator},
                {"component", m.component},
                {"n", m.n},
                {"truth", number_or_null(m.truth)},
                {"bias", number_or_null(m.bias)},
                {"ese", number_or_null(m.ese)},
                {"rmse", number_or_null(m.rmse)},
                {"ase", number_or_null(m.ase)},
                {"ser", number_or_null(m.ser)},
                {"coverage", number_or_null(m.coverage)},
                {"iterations", m.iterations},
                {"failures", m.failures}};
}

void write_config_header(std::ostream& out, const json& config)
{
    out << "# config: " << config.dump() << '\n';
}

void write_psi_csv(std::ostream& out, const PsiResult& r, const json& config)
{
    write_config_header(out, config);
    out << "quantity,estimate,se,lo,hi\n";
    auto state_se = [](const std::optional<StateDistribution>& se, int s) -> std::optional<double> {
        if (!se)
            return std::nullopt;
        return (*se)(s);
    };
    auto state_ci = [](const std::optional<std::vector<Interval>>& ci, int s) -> std::optional<Interval> {
        if (!ci)
            return std::nullopt;
        return (*ci)[static_cast<std::size_t>(s)];
    };
    for (int s = 0; s < 3; ++s)
        csv_row(out, "p_a" + std::to_string(s + 1), r.proportions_a(s), state_se(r.se_a, s), state_ci(r.ci_a, s));
    for (int s = 0; s < 3; ++s)
        csv_row(out, "p_b" + std::to_string(s + 1), r.proportions_b(s), state_se(r.se_b, s), state_ci(r.ci_b, s));
    if (r.has_terminal)
        csv_row(out, "psi1", r.psi1(), std::nullopt, std::nullopt);
    csv_row(out, "psi2", r.psi2, r.se2, r.ci2);
    if (r.psi3)
        csv_row(out, "psi3", *r.psi3, r.se3, r.ci3);
}

void write_trajectory_csv(std::ostream& out, std::span<const PsiResult> trajectory, const json& config)
{
    write_config_header(out, config);
    out << "horizon,plan,state,proportion,lo,hi\n";
    auto line = [&out](int h, const char* plan, int state, double v, std::optional<Interval> ci) {
        out << h << ',' << plan << ',' << state << ',' << format_double(v) << ','
            << cell(ci ? std::optional(ci->lower) : std::nullopt) << ','
            << cell(ci ? std::optional(ci->upper) : std::nullopt) << '\n';
    };
    for (const auto& r : trajectory) {
        for (int s = 0; s < 3; ++s)
            line(r.horizon, "a", s + 1, r.proportions_a(s),
                 r.ci_a ? std::optional((*r.ci_a)[static_cast<std::size_t>(s)]) : std::nullopt);
        for (int s = 0; s < 3; ++s)
            line(r.horizon, "b", s + 1, r.proportions_b(s),
                 r.ci_b ? std::optional((*r.ci_b)[static_cast<std::size_t>(s)]) : std::nullopt);
        line(r.horizon, "a-b", 2, r.psi2, r.ci2);
        if (r.psi3)
            line(r.horizon, "a-b", 3, *r.psi3, r.ci3);
    }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows, const json& config)
{
    write_config_header(out, config);
    out << "estimator,component,n,truth,bias,ese,rmse,ase,ser,coverage,iterations,failures\n";
    for (const auto& m : rows) {
        out << m.estimator << ',' << m.component << ',' << m.n << ',' << format_double(m.truth) << ','
            << format_double(m.bias) << ',' << format_double(m.ese) << ',' << format_double(m.rmse) << ','
            << format_double(m.ase) << ',' << format_double(m.ser) << ',' << format_double(m.coverage) << ','
            << m.iterations << ',' << m.failures << '\n';
    }
}

}  // namespace scgcomp
