#pragma once

#include "scgcomp/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scgcomp {

enum class CovariateType
{
    Binary,
    Continuous,
    Categorical,
};

std::string_view to_string(CovariateType t);
CovariateType parse_covariate_type(std::string_view s);

struct CovariateInfo
{
    std::string name;
    CovariateType type = CovariateType::Binary;
    /// Measured at time 0 (column L0_<name>).
    bool baseline = true;
    /// Measured at times 1..tau-1 (columns L<k>_<name>).
    bool time_varying = false;
    /// Declared levels of a categorical covariate; empty means "from data".
    std::vector<double> levels;
};

using RowIndex = Eigen::Index;
using RowList = std::vector<RowIndex>;

/// Raw storage of a wide-format panel. Integer cells use kMissing, real
/// cells use NaN for missing values.
struct PanelColumns
{
    int tau = 0;
    std::vector<std::string> ids;
    std::vector<CovariateInfo> covariates;
    bool has_baseline_state = false;
    /// n x (tau+1); column k holds Y_k, column 0 the baseline state.
    Eigen::MatrixXi state;
    /// n x (tau+1); column k holds C_k, column 0 is always 0.
    Eigen::MatrixXi censored;
    /// n x tau; column t holds A_t.
    Eigen::MatrixXi action;
    /// One n x tau matrix per covariate; column t holds L_t.
    std::vector<Eigen::MatrixXd> covariate;

    /// Allocates all-missing storage for n individuals.
    static PanelColumns empty(Eigen::Index n, int tau, std::vector<CovariateInfo> covariates,
                              bool has_baseline_state = false);

    Eigen::Index rows() const { return static_cast<Eigen::Index>(ids.size()); }
    int covariate_index(std::string_view name) const;
};

/// Immutable longitudinal dataset, one row per individual.
class PanelDataset
{
  public:
    PanelDataset() = default;
    explicit PanelDataset(PanelColumns columns);

    Eigen::Index n() const { return cols_.rows(); }
    int tau() const { return cols_.tau; }
    const PanelColumns& columns() const { return cols_; }
    const std::vector<std::string>& ids() const { return cols_.ids; }
    const std::vector<CovariateInfo>& covariates() const { return cols_.covariates; }
    int covariate_index(std::string_view name) const { return cols_.covariate_index(name); }

    int state(RowIndex i, int k) const { return cols_.state(i, k); }
    int censored(RowIndex i, int k) const { return cols_.censored(i, k); }
    int action(RowIndex i, int t) const { return cols_.action(i, t); }
    double covariate(int j, RowIndex i, int t) const { return cols_.covariate[j](i, t); }

    std::optional<OutcomeState> outcome(RowIndex i, int k) const;

    /// New dataset made of the given rows (repeats allowed).
    PanelDataset select_rows(std::span<const RowIndex> rows) const;

  private:
    PanelColumns cols_;
};

enum class RiskSetPurpose
{
    /// C_k = 0 and Y_{k-1} alive: rows used to fit the model for Y_k.
    OutcomeFit,
    /// C_k = 0 and Y_k alive: rows used to fit models for L_k.
    CovariateFit,
    /// C_{k-1} = 0 and Y_{k-1} alive: rows that receive predictions for Y_k.
    Prediction,
};

RowList risk_set(const PanelDataset& data, int k, RiskSetPurpose purpose);

/// State at horizon t with earlier terminal events carried forward.
/// outcomes[j] holds Y_{j+1}.
OutcomeState compose_z(std::span<const std::optional<OutcomeState>> outcomes, int t);
OutcomeState compose_z(const PanelDataset& data, RowIndex i, int t);

struct Violation
{
    std::string id;
    int interval = 0;
    std::string rule;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_panel(const PanelDataset& data);

}  // namespace scgcomp
