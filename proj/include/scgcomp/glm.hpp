#pragma once

#include "scgcomp/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <utility>

namespace scgcomp {

struct FitOptions
{
    /// Convergence threshold on the max-norm of the per-unit-weight gradient.
    double tolerance = 1e-8;
    int max_iterations = 100;
    int step_halving_max = 30;
    /// L2 penalty weight on all coefficients.
    double ridge = 0.0;
    /// Coefficient max-norm beyond which a fit is declared separated.
    double separation_norm = 30.0;

    void check() const;
};

/// Three-category logistic model with EventFree as the reference.
struct FittedMultinomial
{
    /// 3 x p; row c holds the linear predictor of category c. Rows of the
    /// reference and of inactive categories are zero.
    Eigen::Matrix<double, 3, Eigen::Dynamic> beta;
    /// Categories with positive total response weight. Inactive categories
    /// get probability exactly 0.
    std::array<bool, 3> active{true, true, true};
    bool converged = false;
    bool separated = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double loglik = 0.0;
    /// Rank of the design after dropping aliased columns.
    Eigen::Index rank = 0;

    Eigen::Index p() const { return beta.cols(); }
    OutcomeState reference_category() const;
    /// 2 x p coefficients of Intermediate and Terminal.
    Eigen::MatrixXd coefficients() const { return beta.bottomRows<2>(); }
};

struct FittedBinary
{
    Eigen::VectorXd coefficients;
    bool converged = false;
    bool separated = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double loglik = 0.0;
    Eigen::Index rank = 0;
};

using DesignRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Fits on n x 3 probability-vector responses; hard labels are one-hot rows.
FittedMultinomial fit_multinomial(const DesignRef& X, const DesignRef& Y,
                                  const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                                  const FitOptions& options = {});

/// Fits on hard state labels.
FittedMultinomial fit_multinomial(const DesignRef& X, std::span<const OutcomeState> y,
                                  const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                                  const FitOptions& options = {});

/// m x 3 matrix of predicted state probabilities.
Eigen::MatrixXd predict_multinomial(const FittedMultinomial& model, const DesignRef& X);

FittedBinary fit_logistic(const DesignRef& X, const VectorRef& y,
                          const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                          const FitOptions& options = {});

Eigen::VectorXd predict_logistic(const FittedBinary& model, const DesignRef& X);

/// Multinomial quasi-log-likelihood and its gradient at a 2 x p coefficient
/// matrix. The gradient stacks the Intermediate block before the Terminal block.
std::pair<double, Eigen::VectorXd> loglik_and_gradient(const DesignRef& beta, const DesignRef& X,
                                                       const DesignRef& Y,
                                                       const std::optional<Eigen::VectorXd>& weights = std::nullopt);

/// One-hot encoding of hard labels.
Eigen::MatrixXd one_hot(std::span<const OutcomeState> y);

template<typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
softmax_rows(const Eigen::MatrixBase<Derived>& eta)
{
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> p = eta;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const Scalar m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

}  // namespace scgcomp
