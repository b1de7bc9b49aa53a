#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scgcomp {

/// Multistate outcome. Terminal is absorbing.
enum class OutcomeState : int
{
    EventFree = 1,
    Intermediate = 2,
    Terminal = 3,
};

inline constexpr int kMissing = -1;
inline constexpr int kNumStates = 3;

constexpr int code(OutcomeState s) { return static_cast<int>(s); }
constexpr int index(OutcomeState s) { return static_cast<int>(s) - 1; }

inline bool is_alive_code(int y) { return y == 1 || y == 2; }

/// Probabilities of (EventFree, Intermediate, Terminal).
template<typename Scalar>
using StateDistributionT = Eigen::Matrix<Scalar, 3, 1>;
using StateDistribution = StateDistributionT<double>;

template<typename Derived>
bool is_state_distribution(const Eigen::MatrixBase<Derived>& p, double tol = 1e-10)
{
    if (p.size() != 3)
        return false;
    for (Eigen::Index c = 0; c < 3; ++c) {
        if (!(p(c) >= 0.0 && p(c) <= 1.0))
            return false;
    }
    return std::abs(p.sum() - 1.0) <= tol;
}

inline StateDistribution terminal_distribution()
{
    return StateDistribution(0.0, 0.0, 1.0);
}

/// Either a fixed 0/1 action for every interval or the observed actions.
class ActionPlan
{
  public:
    enum class Kind
    {
        Deterministic,
        NaturalCourse,
    };

    static ActionPlan deterministic(std::vector<int> values);
    static ActionPlan natural_course();
    /// Parses "1,0,1" or "natural".
    static ActionPlan parse(std::string_view text);

    Kind kind() const { return kind_; }
    bool is_natural() const { return kind_ == Kind::NaturalCourse; }
    const std::vector<int>& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    std::string to_string() const;

    friend bool operator==(const ActionPlan&, const ActionPlan&) = default;

  private:
    ActionPlan(Kind kind, std::vector<int> values) : kind_(kind), values_(std::move(values)) {}

    Kind kind_ = Kind::NaturalCourse;
    std::vector<int> values_;
};

/// Per-interval forced action values used when building prediction designs.
/// Entry t is the value for A_t, or kMissing to keep the observed action.
struct ActionOverride
{
    std::vector<int> values;

    static ActionOverride none() { return {}; }
    static ActionOverride from_plan(const ActionPlan& plan);
    /// Forces A_0 only; later actions stay observed.
    static ActionOverride baseline_only(int a0);

    bool overrides(int t) const
    {
        return t >= 0 && t < static_cast<int>(values.size()) && values[t] != kMissing;
    }
};

struct Interval
{
    double lower = 0.0;
    double upper = 0.0;
};

/// Contrast of state proportions between two plans at one horizon.
struct PsiResult
{
    int horizon = 0;
    StateDistribution proportions_a = StateDistribution::Zero();
    StateDistribution proportions_b = StateDistribution::Zero();
    /// False when the estimator does not estimate terminal-state risk.
    bool has_terminal = true;
    double psi2 = 0.0;
    std::optional<double> psi3;
    std::optional<double> se2;
    std::optional<double> se3;
    std::optional<Interval> ci2;
    std::optional<Interval> ci3;
    /// Bootstrap standard errors and intervals for the per-plan proportions.
    std::optional<StateDistribution> se_a;
    std::optional<StateDistribution> se_b;
    std::optional<std::vector<Interval>> ci_a;
    std::optional<std::vector<Interval>> ci_b;
    int bootstrap_discarded = 0;

    /// EventFree difference; psi1 + psi2 + psi3 vanishes.
    double psi1() const { return proportions_a(0) - proportions_b(0); }
};

PsiResult make_psi(int horizon, const StateDistribution& a, const StateDistribution& b,
                   bool has_terminal = true);

}  // namespace scgcomp
