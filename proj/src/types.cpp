#include "scgcomp/types.hpp"

#include "scgcomp/errors.hpp"

#include <charconv>

namespace scgcomp {

ActionPlan ActionPlan::deterministic(std::vector<int> values)
{
    if (values.empty())
        throw UsageError("action plan must cover at least one interval");
    for (int v : values) {
        if (v != 0 && v != 1)
            throw UsageError("action plan values must be 0 or 1");
    }
    return ActionPlan(Kind::Deterministic, std::move(values));
}

ActionPlan ActionPlan::natural_course()
{
    return ActionPlan(Kind::NaturalCourse, {});
}

ActionPlan ActionPlan::parse(std::string_view text)
{
    if (text == "natural")
        return natural_course();
    std::vector<int> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        auto token = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
        while (!token.empty() && token.front() == ' ')
            token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ')
            token.remove_suffix(1);
        int v = -1;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            throw UsageError("cannot parse action plan '" + std::string(text) + "'");
        values.push_back(v);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return deterministic(std::move(values));
}

std::string ActionPlan::to_string() const
{
    if (is_natural())
        return "natural";
    std::string out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (i)
            out += ',';
        out += static_cast<char>('0' + values_[i]);
    }
    return out;
}

ActionOverride ActionOverride::from_plan(const ActionPlan& plan)
{
    if (plan.is_natural())
        return none();
    return ActionOverride{plan.values()};
}

ActionOverride ActionOverride::baseline_only(int a0)
{
    if (a0 != 0 && a0 != 1)
        throw UsageError("baseline action must be 0 or 1");
    return ActionOverride{{a0}};
}

PsiResult make_psi(int horizon, const StateDistribution& a, const StateDistribution& b,
                   bool has_terminal)
{
    PsiResult r;
    r.horizon = horizon;
    r.proportions_a = a;
    r.proportions_b = b;
    r.has_terminal = has_terminal;
    r.psi2 = a(1) - b(1);
    if (has_terminal)
        r.psi3 = a(2) - b(2);
    return r;
}

}  // namespace scgcomp
