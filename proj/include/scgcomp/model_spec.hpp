#pragma once

#include "scgcomp/errors.hpp"
#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scgcomp {

enum class SourceKind
{
    /// Baseline covariate L_0 by name, independent of the conditioning time.
    Baseline,
    /// Covariate measured at (conditioning time - lag).
    Covariate,
    /// Action at (conditioning time - lag).
    Action,
    /// A_0, independent of the conditioning time.
    BaselineAction,
    /// Outcome state at (conditioning time - lag), numeric code 1/2.
    PriorState,
    /// Indicator that the state at (conditioning time - lag) is Intermediate.
    PriorStateIndicator,
};

struct Source
{
    SourceKind kind = SourceKind::Action;
    std::string name;
    int lag = 0;

    static Source baseline(std::string name) { return {SourceKind::Baseline, std::move(name), 0}; }
    static Source covariate(std::string name, int lag) { return {SourceKind::Covariate, std::move(name), lag}; }
    static Source action(int lag) { return {SourceKind::Action, {}, lag}; }
    static Source baseline_action() { return {SourceKind::BaselineAction, {}, 0}; }
    static Source prior_state(int lag) { return {SourceKind::PriorState, {}, lag}; }
    static Source prior_state_indicator(int lag) { return {SourceKind::PriorStateIndicator, {}, lag}; }

    bool is_action() const { return kind == SourceKind::Action || kind == SourceKind::BaselineAction; }
    /// Whether the source looks back from the conditioning time.
    bool is_lagged() const
    {
        return kind == SourceKind::Covariate || kind == SourceKind::Action || kind == SourceKind::PriorState
               || kind == SourceKind::PriorStateIndicator;
    }
    /// Time index read at conditioning time t_c; negative when out of range.
    int time_at(int t_c) const { return is_lagged() ? t_c - lag : 0; }
    std::string label() const;

    friend bool operator==(const Source&, const Source&) = default;
};

enum class TransformKind
{
    Identity,
    DisjointIndicators,
    RQSpline,
};

struct Transform
{
    TransformKind kind = TransformKind::Identity;
    /// Omitted (reference) level; empty means the smallest level.
    std::optional<double> omitted;
    /// Non-omitted levels, in column order; filled by resolve_spec when empty.
    std::vector<double> levels;
    /// Spline knots; filled by resolve_spec when empty.
    std::vector<double> knots;

    static Transform identity() { return {}; }
    static Transform indicators(std::optional<double> omitted = std::nullopt, std::vector<double> levels = {})
    {
        return {TransformKind::DisjointIndicators, omitted, std::move(levels), {}};
    }
    static Transform rq_spline(std::vector<double> knots = {})
    {
        return {TransformKind::RQSpline, std::nullopt, {}, std::move(knots)};
    }
};

/// One model term: a product of sources passed through a transform.
struct TermSpec
{
    std::vector<Source> factors;
    Transform transform;

    static TermSpec of(Source s, Transform t = Transform::identity()) { return {{std::move(s)}, std::move(t)}; }
    static TermSpec product(std::vector<Source> s) { return {std::move(s), Transform::identity()}; }

    bool is_resolved() const;
    /// Number of design columns produced; requires a resolved term.
    int width() const;
    std::string label() const;
};

/// Intercept plus an ordered term list.
struct ModelSpec
{
    std::vector<TermSpec> terms;

    Eigen::Index columns() const;
    std::vector<std::string> column_names() const;
    bool references_actions() const;
};

inline constexpr int kMaxSaturatedSources = 12;

/// Default knot quantiles for restricted quadratic splines.
inline constexpr double kDefaultKnotQuantiles[] = {0.05, 0.35, 0.65, 0.95};

template<typename Derived>
void check_knots(const Eigen::DenseBase<Derived>& knots)
{
    if (knots.size() < 3)
        throw UsageError("restricted quadratic spline needs at least 3 knots");
    for (Eigen::Index j = 1; j < knots.size(); ++j) {
        if (!(knots(j) > knots(j - 1)))
            throw UsageError("spline knots must be strictly increasing");
    }
}

/// Restricted quadratic spline basis: x followed by K-2 restricted hinge terms.
template<typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rq_spline_basis(Scalar x, const Eigen::DenseBase<Derived>& knots)
{
    check_knots(knots);
    const Eigen::Index K = knots.size();
    auto hinge2 = [x](Scalar knot) {
        const Scalar u = x - knot;
        return u > Scalar(0) ? u * u : Scalar(0);
    };
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b(K - 1);
    b(0) = x;
    const Scalar last = hinge2(Scalar(knots(K - 1)));
    for (Eigen::Index j = 1; j + 1 < K; ++j)
        b(j) = hinge2(Scalar(knots(j))) - last;
    return b;
}

inline Eigen::VectorXd rq_spline_basis(double x, std::span<const double> knots)
{
    return rq_spline_basis(x, Eigen::Map<const Eigen::VectorXd>(knots.data(), static_cast<Eigen::Index>(knots.size())));
}

/// Value of a source for row i at conditioning time t_c, NaN when missing.
double source_value(const Source& s, const PanelColumns& data, RowIndex i, int t_c,
                    const ActionOverride& actions = ActionOverride::none());

/// Checks that every source is readable at conditioning time t_c.
/// A covariate model for covariate `target` at t_c may read Y at lag 0 and
/// covariates declared before `target` at lag 0, but not the action at t_c.
void check_spec(const ModelSpec& spec, const PanelColumns& data, int t_c,
                std::optional<int> covariate_target = std::nullopt);

/// Design matrix (|rows| x p) with a leading intercept column.
Eigen::MatrixXd build_design(const ModelSpec& spec, const PanelColumns& data, std::span<const RowIndex> rows,
                             int t_c, const ActionOverride& actions = ActionOverride::none());

inline Eigen::MatrixXd build_design(const ModelSpec& spec, const PanelDataset& data, std::span<const RowIndex> rows,
                                    int t_c, const ActionOverride& actions = ActionOverride::none())
{
    return build_design(spec, data.columns(), rows, t_c, actions);
}

/// Every product of a nonempty subset of the given binary sources.
ModelSpec saturated_spec(std::span<const Source> sources);

/// Binary history readable at conditioning time t_c, in temporal order:
/// L_0, A_0, then per interval I(Y_t = 2), L_t, A_t.
std::vector<Source> history_sources(const PanelColumns& data, int t_c, bool include_current_action = true);

/// Drops terms that reach before time 0 at conditioning time t_c.
ModelSpec restrict_to_time(const ModelSpec& spec, int t_c);

/// Fixes indicator levels and spline knots from the full dataset.
ModelSpec resolve_spec(const ModelSpec& spec, const PanelColumns& data);

/// A model specification that adapts to the conditioning time.
struct SpecTemplate
{
    /// Terms used at every time; those reaching before time 0 are dropped.
    ModelSpec base;
    /// When set, the model is saturated over these sources (or over the
    /// full binary history when the list is empty) instead of using `base`.
    std::optional<std::vector<Source>> saturate;
    /// Exact specs for particular conditioning times.
    std::map<int, ModelSpec> at_time;

    static SpecTemplate of(ModelSpec spec) { return {std::move(spec), std::nullopt, {}}; }
    static SpecTemplate saturated(std::vector<Source> sources = {}) { return {{}, std::move(sources), {}}; }

    /// Concrete spec at conditioning time t_c. Outcome-state sources at
    /// time 0 are dropped when the data carry no baseline state.
    ModelSpec at(const PanelColumns& data, int t_c) const;
    /// Resolves levels and knots of every contained spec.
    SpecTemplate resolved(const PanelColumns& data) const;
};

/// Observed non-missing values of a source across all readable times.
std::vector<double> pooled_values(const Source& s, const PanelColumns& data);

}  // namespace scgcomp
