#pragma once

#include "scgcomp/alternatives.hpp"
#include "scgcomp/dgm.hpp"
#include "scgcomp/gcomp_ice.hpp"
#include "scgcomp/gcomp_standard.hpp"
#include "scgcomp/glm.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scgcomp {

/// Summary of an estimator's sampling behaviour for one contrast component.
struct MetricsRow
{
    std::string estimator;
    /// "intermediate" or "terminal".
    std::string component;
    Eigen::Index n = 0;
    double truth = 0.0;
    double bias = 0.0;
    double ese = 0.0;
    double rmse = 0.0;
    double ase = 0.0;
    double ser = 0.0;
    double coverage = 0.0;
    /// Iterations contributing to the row.
    int iterations = 0;
    /// Iterations whose estimate or bootstrap failed.
    int failures = 0;
};

/// Bias, ESE (n - 1 denominator), RMSE, ASE, SER and coverage.
MetricsRow compute_metrics(std::span<const double> estimates, std::span<const double> ses,
                           std::span<const char> ci_hits, double truth);

inline const std::vector<std::string>& study_estimators()
{
    static const std::vector<std::string> names{"standard", "ice", "alt1", "alt2"};
    return names;
}

/// Specs used for the mechanism's data by each estimator.
StandardSpecs dgm_standard_specs();
IceSpecs dgm_ice_specs();

struct StudyConfig
{
    std::vector<Eigen::Index> sample_sizes{500, 2000};
    int iterations = 2000;
    int boot = 500;
    std::uint64_t seed = 20240501;
    double level = 0.95;
    std::vector<std::string> estimators = study_estimators();
    ActionPlan plan_a = ActionPlan::deterministic({1, 1, 1});
    ActionPlan plan_b = ActionPlan::deterministic({0, 0, 0});
    int horizon = 3;
    DgmConfig dgm;
    FitOptions fit{1e-8, 100, 30, 1e-3, 30.0};
    /// Monte Carlo size for standard g-computation, per estimate.
    std::int64_t mc_b = 100000;
    int threads = 1;
    /// Truth override; exact enumeration of the mechanism otherwise.
    std::optional<std::pair<double, double>> truth;

    void check() const;
};

/// One estimator's result on one simulated dataset.
struct IterationRecord
{
    Eigen::Index n = 0;
    int iteration = 0;
    std::string estimator;
    bool ok = false;
    std::string error;
    double psi2 = 0.0;
    double psi3 = 0.0;
    double se2 = 0.0;
    double se3 = 0.0;
    Interval ci2;
    Interval ci3;
    bool has_terminal = true;
    int discarded = 0;
};

struct StudyResult
{
    double truth2 = 0.0;
    double truth3 = 0.0;
    std::vector<IterationRecord> records;
    std::vector<MetricsRow> metrics;
};

/// Point estimate of one named estimator under a study configuration.
PsiResult study_estimate(const std::string& estimator, const PanelDataset& data, const StudyConfig& config,
                         std::uint64_t mc_seed);

using StudyProgress = std::function<void(Eigen::Index n, int iteration)>;

/// Simulate, estimate and bootstrap for every sample size and iteration,
/// then summarize per estimator and component.
StudyResult run_study(const StudyConfig& config, const StudyProgress& progress = {});

/// Metrics from recorded iterations; iterations are parallel to `records`.
std::vector<MetricsRow> summarize_study(const StudyConfig& config, std::span<const IterationRecord> records,
                                        double truth2, double truth3);

}  // namespace scgcomp
