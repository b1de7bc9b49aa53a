#include "scgcomp/dgm.hpp"
#include "scgcomp/errors.hpp"
#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>

using namespace scgcomp;

namespace {

const std::vector<CovariateInfo> kOneBinary{CovariateInfo{"L", CovariateType::Binary, true, true, {}}};

/// Three individuals over two intervals, all structurally valid:
/// 1 completes follow-up, 2 dies at interval 1, 3 is censored at interval 2.
PanelColumns small_panel()
{
    auto c = PanelColumns::empty(3, 2, kOneBinary);
    c.ids = {"a", "b", "c"};
    // a
    c.covariate[0](0, 0) = 1;
    c.action(0, 0) = 1;
    c.censored(0, 1) = 0;
    c.state(0, 1) = 2;
    c.covariate[0](0, 1) = 0;
    c.action(0, 1) = 1;
    c.censored(0, 2) = 0;
    c.state(0, 2) = 1;
    // b
    c.covariate[0](1, 0) = 0;
    c.action(1, 0) = 0;
    c.censored(1, 1) = 0;
    c.state(1, 1) = 3;
    // c
    c.covariate[0](2, 0) = 0;
    c.action(2, 0) = 1;
    c.censored(2, 1) = 0;
    c.state(2, 1) = 1;
    c.covariate[0](2, 1) = 1;
    c.action(2, 1) = 0;
    c.censored(2, 2) = 1;
    return c;
}

bool has_rule(const ValidationReport& r, const std::string& rule)
{
    return std::any_of(r.begin(), r.end(), [&](const Violation& v) { return v.rule == rule; });
}

}  // namespace

TEST_CASE("action plans parse bits and the natural course")
{
    const auto p = ActionPlan::parse("1,0,1");
    CHECK_FALSE(p.is_natural());
    CHECK(p.values() == std::vector<int>{1, 0, 1});
    CHECK(p.to_string() == "1,0,1");
    CHECK(ActionPlan::parse("natural").is_natural());
    CHECK(ActionPlan::parse(" 0 , 1 ").values() == std::vector<int>{0, 1});
    CHECK_THROWS_AS(ActionPlan::parse("1,2"), UsageError);
    CHECK_THROWS_AS(ActionPlan::parse(""), UsageError);
    CHECK_THROWS_AS(ActionPlan::parse("1,,0"), UsageError);
}

TEST_CASE("action overrides")
{
    const auto ov = ActionOverride::from_plan(ActionPlan::deterministic({1, 0}));
    CHECK(ov.overrides(0));
    CHECK(ov.overrides(1));
    CHECK_FALSE(ov.overrides(2));
    CHECK_FALSE(ActionOverride::from_plan(ActionPlan::natural_course()).overrides(0));
    const auto b = ActionOverride::baseline_only(1);
    CHECK(b.overrides(0));
    CHECK_FALSE(b.overrides(1));
}

TEST_CASE("composite state carries the terminal event forward")
{
    using S = std::optional<OutcomeState>;
    const std::vector<S> died{OutcomeState::Intermediate, OutcomeState::Terminal, std::nullopt};
    CHECK(compose_z(died, 1) == OutcomeState::Intermediate);
    CHECK(compose_z(died, 2) == OutcomeState::Terminal);
    CHECK(compose_z(died, 3) == OutcomeState::Terminal);
    const std::vector<S> alive{OutcomeState::Intermediate, OutcomeState::EventFree, std::nullopt};
    CHECK(compose_z(alive, 2) == OutcomeState::EventFree);
    CHECK_THROWS_AS(compose_z(alive, 3), InsufficientFollowUpError);
}

TEST_CASE("risk sets")
{
    const PanelDataset d(small_panel());
    CHECK(risk_set(d, 1, RiskSetPurpose::OutcomeFit) == RowList{0, 1, 2});
    CHECK(risk_set(d, 1, RiskSetPurpose::CovariateFit) == RowList{0, 2});
    CHECK(risk_set(d, 1, RiskSetPurpose::Prediction) == RowList{0, 1, 2});
    CHECK(risk_set(d, 2, RiskSetPurpose::OutcomeFit) == RowList{0});
    CHECK(risk_set(d, 2, RiskSetPurpose::Prediction) == RowList{0, 2});
    CHECK(compose_z(d, 1, 2) == OutcomeState::Terminal);
    CHECK_THROWS_AS(compose_z(d, 2, 2), InsufficientFollowUpError);
}

TEST_CASE("select_rows repeats rows")
{
    const PanelDataset d(small_panel());
    const RowList rows{2, 2, 0};
    const auto s = d.select_rows(rows);
    CHECK(s.n() == 3);
    CHECK(s.ids() == std::vector<std::string>{"c", "c", "a"});
    CHECK(s.state(2, 1) == 2);
    CHECK(s.covariate(0, 1, 1) == 1.0);
}

TEST_CASE("valid panels have no violations")
{
    CHECK(validate_panel(PanelDataset(small_panel())).empty());
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (Eigen::Index n : {1, 17, 2000})
            CHECK(validate_panel(dgm_sample(n, seed)).empty());
    }
}

TEST_CASE("each structural rule is detected")
{
    SUBCASE("duplicate id")
    {
        auto c = small_panel();
        c.ids[2] = "a";
        CHECK(has_rule(validate_panel(PanelDataset(c)), "duplicate id"));
    }
    SUBCASE("invalid value")
    {
        auto c = small_panel();
        c.state(0, 1) = 4;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "invalid value"));
        auto e = small_panel();
        e.covariate[0](0, 1) = 0.5;
        CHECK(has_rule(validate_panel(PanelDataset(e)), "invalid value"));
    }
    SUBCASE("missing baseline data")
    {
        auto c = small_panel();
        c.action(1, 0) = kMissing;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "missing baseline data"));
    }
    SUBCASE("non-monotone censoring")
    {
        auto c = small_panel();
        c.censored(0, 1) = 1;
        c.state(0, 1) = kMissing;
        c.covariate[0](0, 1) = std::numeric_limits<double>::quiet_NaN();
        c.action(0, 1) = kMissing;
        c.censored(0, 2) = 0;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "non-monotone censoring"));
    }
    SUBCASE("terminal state not absorbing")
    {
        auto c = small_panel();
        c.covariate[0](1, 1) = 0;
        c.action(1, 1) = 0;
        c.censored(1, 2) = 0;
        c.state(1, 2) = 1;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "terminal state not absorbing"));
    }
    SUBCASE("data after censoring")
    {
        auto c = small_panel();
        c.state(2, 2) = 1;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "data after censoring"));
    }
    SUBCASE("missing censoring status")
    {
        auto c = small_panel();
        c.censored(0, 2) = kMissing;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "missing censoring status"));
    }
    SUBCASE("missing outcome for uncensored individual")
    {
        auto c = small_panel();
        c.state(0, 2) = kMissing;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "missing outcome for uncensored individual"));
    }
    SUBCASE("non-monotone missingness")
    {
        auto c = small_panel();
        c.covariate[0](0, 1) = std::numeric_limits<double>::quiet_NaN();
        CHECK(has_rule(validate_panel(PanelDataset(c)), "non-monotone missingness"));
    }
    SUBCASE("baseline state not alive")
    {
        auto c = PanelColumns::empty(1, 1, kOneBinary, true);
        c.ids = {"x"};
        c.state(0, 0) = 3;
        c.covariate[0](0, 0) = 0;
        c.action(0, 0) = 0;
        c.censored(0, 1) = 0;
        c.state(0, 1) = 3;
        CHECK(has_rule(validate_panel(PanelDataset(c)), "baseline state not alive"));
    }
}

TEST_CASE("contrast components sum to zero")
{
    const StateDistribution a(0.5, 0.3, 0.2);
    const StateDistribution b(0.25, 0.45, 0.3);
    const auto r = make_psi(3, a, b);
    CHECK(r.psi2 == doctest::Approx(-0.15));
    CHECK(*r.psi3 == doctest::Approx(-0.1));
    CHECK(std::abs(r.psi1() + r.psi2 + *r.psi3) < 1e-15);
    CHECK_FALSE(make_psi(3, a, b, false).psi3.has_value());
    CHECK(is_state_distribution(a));
    CHECK_FALSE(is_state_distribution(StateDistribution(0.5, 0.5, 0.1)));
}
