#pragma once

#include "scgcomp/panel.hpp"
#include "scgcomp/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace scgcomp {

/// Standard normal quantile, accurate to about 1e-15 in the central range.
double normal_quantile(double p);

/// Two-sided critical value for the given coverage level.
double wald_z(double level);

Interval wald_interval(double estimate, double se, double level = 0.95);

struct BootstrapResult
{
    /// R x q; rows of discarded replicates are NaN.
    Eigen::MatrixXd replicates;
    int discarded = 0;
    Eigen::VectorXd point;
    Eigen::VectorXd se;
    std::vector<Interval> ci;
    double level = 0.95;

    int retained() const { return static_cast<int>(replicates.rows()) - discarded; }
};

using Estimator = std::function<Eigen::VectorXd(const PanelDataset&)>;

struct BootstrapConfig
{
    int R = 500;
    std::uint64_t seed = 0;
    double level = 0.95;
    int threads = 1;

    void check() const;
};

/// Resample indices of replicate r, drawn against the sorted-id order.
std::vector<RowIndex> bootstrap_indices(const PanelDataset& data, std::uint64_t seed, int r);

/// Nonparametric bootstrap. The point estimate is computed on the full
/// data when not supplied; replicate failures are counted as discarded.
BootstrapResult bootstrap(const PanelDataset& data, const Estimator& estimator, const BootstrapConfig& config,
                          std::optional<Eigen::VectorXd> point = std::nullopt);

/// Reported quantities of a contrast: proportions under each plan, then
/// psi2 and (when present) psi3.
Eigen::VectorXd psi_quantities(const PsiResult& r);

/// Copies standard errors and intervals from a bootstrap over psi_quantities.
void attach_bootstrap(PsiResult& r, const BootstrapResult& b);

}  // namespace scgcomp
