#include "scgcomp/glm.hpp"

#include "scgcomp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace scgcomp {

void FitOptions::check() const
{
    if (!(tolerance > 0.0))
        throw UsageError("fit tolerance must be positive");
    if (max_iterations < 1)
        throw UsageError("max_iterations must be at least 1");
    if (step_halving_max < 0)
        throw UsageError("step_halving_max must be nonnegative");
    if (!(ridge >= 0.0))
        throw UsageError("ridge must be nonnegative");
}

OutcomeState FittedMultinomial::reference_category() const
{
    for (int c = 0; c < kNumStates; ++c) {
        if (active[static_cast<std::size_t>(c)])
            return static_cast<OutcomeState>(c + 1);
    }
    return OutcomeState::EventFree;
}

Eigen::MatrixXd one_hot(std::span<const OutcomeState> y)
{
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), 3);
    for (std::size_t i = 0; i < y.size(); ++i)
        Y(static_cast<Eigen::Index>(i), index(y[i])) = 1.0;
    return Y;
}

namespace {

/// Unique design rows with summed weights and weighted responses.
struct Compressed
{
    Eigen::MatrixXd U;
    Eigen::MatrixXd R;
    Eigen::VectorXd W;
    double total = 0.0;
};

Eigen::VectorXd resolve_weights(const std::optional<Eigen::VectorXd>& weights, Eigen::Index n)
{
    if (!weights)
        return Eigen::VectorXd::Ones(n);
    if (weights->size() != n)
        throw UsageError("weight vector length does not match the design");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite((*weights)(i)) || (*weights)(i) < 0.0)
            throw UsageError("weights must be finite and nonnegative");
    }
    return *weights;
}

void check_design(const DesignRef& X)
{
    if (X.rows() < 1 || X.cols() < 1)
        throw UsageError("design matrix must have at least one row and one column");
    if (!X.allFinite())
        throw FitError("design matrix has non-finite entries");
}

Compressed compress(const DesignRef& X, const Eigen::MatrixXd& Y, const Eigen::VectorXd& w)
{
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto less = [&X, p](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (X(a, j) != X(b, j))
                return X(a, j) < X(b, j);
        }
        return false;
    };
    std::stable_sort(order.begin(), order.end(), less);

    Compressed c;
    c.U.resize(n, p);
    c.R.resize(n, Y.cols());
    c.W.resize(n);
    Eigen::Index u = -1;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Eigen::Index i = order[k];
        if (k == 0 || less(order[k - 1], i)) {
            ++u;
            c.U.row(u) = X.row(i);
            c.R.row(u).setZero();
            c.W(u) = 0.0;
        }
        c.R.row(u) += w(i) * Y.row(i);
        c.W(u) += w(i);
    }
    // Keep only cells carrying weight.
    Eigen::Index kept = 0;
    for (Eigen::Index r = 0; r <= u; ++r) {
        if (c.W(r) > 0.0) {
            if (kept != r) {
                c.U.row(kept) = c.U.row(r);
                c.R.row(kept) = c.R.row(r);
                c.W(kept) = c.W(r);
            }
            ++kept;
        }
    }
    c.U.conservativeResize(kept, p);
    c.R.conservativeResize(kept, Y.cols());
    c.W.conservativeResize(kept);
    c.total = c.W.sum();
    if (kept == 0)
        throw FitError("no observations with positive weight");
    return c;
}

/// Column indices of a maximal linearly independent subset, ascending.
std::vector<Eigen::Index> independent_columns(const Eigen::MatrixXd& U)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(U);
    qr.setThreshold(1e-10);
    const Eigen::Index r = qr.rank();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < r; ++j)
        cols.push_back(qr.colsPermutation().indices()(j));
    std::sort(cols.begin(), cols.end());
    return cols;
}

/// Softmax regression over a subset of active categories on compressed data.
class SoftmaxProblem
{
  public:
    SoftmaxProblem(const Eigen::MatrixXd& U, const Eigen::MatrixXd& R, const Eigen::VectorXd& W,
                   std::vector<int> active, double ridge)
        : U_(U), R_(R), W_(W), active_(std::move(active)), ridge_(ridge)
    {
    }

    Eigen::Index free_categories() const { return static_cast<Eigen::Index>(active_.size()) - 1; }
    Eigen::Index dim() const { return free_categories() * U_.cols(); }

    /// Objective, gradient and (optionally) the negated Hessian at theta.
    double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad, Eigen::MatrixXd* neg_hess) const
    {
        const Eigen::Index u = U_.rows();
        const Eigen::Index r = U_.cols();
        const Eigen::Index f = free_categories();
        const auto na = static_cast<Eigen::Index>(active_.size());

        Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(u, na);
        for (Eigen::Index c = 0; c < f; ++c)
            eta.col(c + 1) = U_ * theta.segment(c * r, r);
        Eigen::VectorXd lse(u);
        for (Eigen::Index i = 0; i < u; ++i) {
            const double m = eta.row(i).maxCoeff();
            lse(i) = m + std::log((eta.row(i).array() - m).exp().sum());
        }
        double obj = 0.0;
        for (Eigen::Index c = 0; c < na; ++c) {
            const auto& resp = R_.col(active_[static_cast<std::size_t>(c)]);
            for (Eigen::Index i = 0; i < u; ++i) {
                if (resp(i) != 0.0)
                    obj += resp(i) * (eta(i, c) - lse(i));
            }
        }
        obj -= 0.5 * ridge_ * theta.squaredNorm();
        if (!grad && !neg_hess)
            return obj;

        Eigen::MatrixXd P(u, na);
        for (Eigen::Index c = 0; c < na; ++c)
            P.col(c) = (eta.col(c) - lse).array().exp().matrix();
        if (grad) {
            grad->resize(dim());
            for (Eigen::Index c = 0; c < f; ++c) {
                const Eigen::VectorXd resid =
                    R_.col(active_[static_cast<std::size_t>(c + 1)]) - W_.cwiseProduct(P.col(c + 1));
                grad->segment(c * r, r) = U_.transpose() * resid - ridge_ * theta.segment(c * r, r);
            }
        }
        if (neg_hess) {
            neg_hess->resize(dim(), dim());
            for (Eigen::Index c = 0; c < f; ++c) {
                for (Eigen::Index d = c; d < f; ++d) {
                    Eigen::VectorXd s = W_.cwiseProduct(P.col(c + 1));
                    if (c == d)
                        s = s.cwiseProduct((1.0 - P.col(c + 1).array()).matrix());
                    else
                        s = -s.cwiseProduct(P.col(d + 1));
                    const Eigen::MatrixXd block = U_.transpose() * (U_.array().colwise() * s.array()).matrix();
                    neg_hess->block(c * r, d * r, r, r) = block;
                    if (c != d)
                        neg_hess->block(d * r, c * r, r, r) = block.transpose();
                }
                neg_hess->block(c * r, c * r, r, r).diagonal().array() += ridge_;
            }
        }
        return obj;
    }

  private:
    const Eigen::MatrixXd& U_;
    const Eigen::MatrixXd& R_;
    const Eigen::VectorXd& W_;
    std::vector<int> active_;
    double ridge_;
};

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& A, const Eigen::VectorXd& g)
{
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
        Eigen::VectorXd d = ldlt.solve(g);
        if (d.allFinite())
            return d;
    }
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(A).solve(g);
}

struct NewtonResult
{
    Eigen::VectorXd theta;
    bool converged = false;
    bool separated = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double objective = 0.0;
};

NewtonResult newton(const SoftmaxProblem& prob, double total_weight, const FitOptions& opt)
{
    NewtonResult res;
    res.theta = Eigen::VectorXd::Zero(prob.dim());
    if (prob.dim() == 0) {
        res.converged = true;
        res.objective = prob.evaluate(res.theta, nullptr, nullptr);
        return res;
    }
    Eigen::VectorXd g;
    Eigen::MatrixXd A;
    double obj = prob.evaluate(res.theta, &g, &A);
    while (true) {
        res.gradient_norm = g.lpNorm<Eigen::Infinity>() / total_weight;
        const Eigen::VectorXd d = newton_direction(A, g);
        const double scale = 1.0 + res.theta.lpNorm<Eigen::Infinity>();
        if (res.gradient_norm <= opt.tolerance && d.lpNorm<Eigen::Infinity>() <= 1e-6 * scale) {
            res.converged = true;
            // Final Newton step; quadratic convergence makes it nearly exact.
            const Eigen::VectorXd polished = res.theta + d;
            const double polished_obj = prob.evaluate(polished, nullptr, nullptr);
            if (std::isfinite(polished_obj) && polished_obj >= obj - 1e-13 * (1.0 + std::abs(obj))) {
                res.theta = polished;
                obj = prob.evaluate(res.theta, &g, &A);
                res.gradient_norm = g.lpNorm<Eigen::Infinity>() / total_weight;
            }
            break;
        }
        if (res.iterations >= opt.max_iterations)
            break;

        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        double trial_obj = 0.0;
        const double slack = 1e-13 * (1.0 + std::abs(obj));
        for (int h = 0; h <= opt.step_halving_max; ++h) {
            trial = res.theta + step * d;
            trial_obj = prob.evaluate(trial, nullptr, nullptr);
            if (std::isfinite(trial_obj) && trial_obj >= obj - slack) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No further progress possible; accept a stationary point.
            res.converged = res.gradient_norm <= opt.tolerance;
            break;
        }
        ++res.iterations;
        res.theta = std::move(trial);
        obj = prob.evaluate(res.theta, &g, &A);
        if (res.theta.lpNorm<Eigen::Infinity>() > opt.separation_norm) {
            res.gradient_norm = g.lpNorm<Eigen::Infinity>() / total_weight;
            res.separated = true;
            break;
        }
    }
    res.objective = obj;
    if (res.separated)
        res.converged = false;
    return res;
}

}  // namespace

FittedMultinomial fit_multinomial(const DesignRef& X, const DesignRef& Y, const std::optional<Eigen::VectorXd>& weights,
                                  const FitOptions& options)
{
    options.check();
    check_design(X);
    if (Y.rows() != X.rows() || Y.cols() != 3)
        throw UsageError("response must be an n x 3 matrix matching the design");
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        if (!Y.row(i).allFinite() || (Y.row(i).array() < 0.0).any() || std::abs(Y.row(i).sum() - 1.0) > 1e-8)
            throw UsageError("response row " + std::to_string(i) + " is not a probability vector");
    }
    const Eigen::VectorXd w = resolve_weights(weights, X.rows());
    const Compressed c = compress(X, Y, w);

    FittedMultinomial fit;
    fit.beta = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, X.cols());
    std::vector<int> active;
    for (int k = 0; k < 3; ++k) {
        fit.active[static_cast<std::size_t>(k)] = c.R.col(k).sum() > 0.0;
        if (fit.active[static_cast<std::size_t>(k)])
            active.push_back(k);
    }
    const auto cols = independent_columns(c.U);
    fit.rank = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd Ur(c.U.rows(), fit.rank);
    for (Eigen::Index j = 0; j < fit.rank; ++j)
        Ur.col(j) = c.U.col(cols[static_cast<std::size_t>(j)]);

    const SoftmaxProblem prob(Ur, c.R, c.W, active, options.ridge);
    const NewtonResult nr = newton(prob, c.total, options);
    for (std::size_t a = 1; a < active.size(); ++a) {
        for (Eigen::Index j = 0; j < fit.rank; ++j)
            fit.beta(active[a], cols[static_cast<std::size_t>(j)]) =
                nr.theta(static_cast<Eigen::Index>(a - 1) * fit.rank + j);
    }
    fit.converged = nr.converged;
    fit.separated = nr.separated;
    fit.iterations = nr.iterations;
    fit.final_gradient_norm = nr.gradient_norm;
    fit.loglik = nr.objective;
    return fit;
}

FittedMultinomial fit_multinomial(const DesignRef& X, std::span<const OutcomeState> y,
                                  const std::optional<Eigen::VectorXd>& weights, const FitOptions& options)
{
    return fit_multinomial(X, one_hot(y), weights, options);
}

Eigen::MatrixXd predict_multinomial(const FittedMultinomial& model, const DesignRef& X)
{
    if (X.cols() != model.p())
        throw UsageError("design has " + std::to_string(X.cols()) + " columns, model expects "
                         + std::to_string(model.p()));
    Eigen::MatrixXd eta = X * model.beta.transpose();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(X.rows(), 3);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < 3; ++c) {
            if (model.active[static_cast<std::size_t>(c)])
                m = std::max(m, eta(i, c));
        }
        double s = 0.0;
        for (int c = 0; c < 3; ++c) {
            if (model.active[static_cast<std::size_t>(c)]) {
                P(i, c) = std::exp(eta(i, c) - m);
                s += P(i, c);
            }
        }
        P.row(i) /= s;
    }
    return P;
}

FittedBinary fit_logistic(const DesignRef& X, const VectorRef& y, const std::optional<Eigen::VectorXd>& weights,
                          const FitOptions& options)
{
    options.check();
    check_design(X);
    if (y.size() != X.rows())
        throw UsageError("response length does not match the design");
    if (!y.allFinite() || (y.array() < 0.0).any() || (y.array() > 1.0).any())
        throw UsageError("binary response must lie in [0, 1]");
    const Eigen::VectorXd w = resolve_weights(weights, X.rows());
    Eigen::MatrixXd Y(X.rows(), 2);
    Y.col(0) = (1.0 - y.array()).matrix();
    Y.col(1) = y;
    const Compressed c = compress(X, Y, w);
    const auto cols = independent_columns(c.U);

    FittedBinary fit;
    fit.rank = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd Ur(c.U.rows(), fit.rank);
    for (Eigen::Index j = 0; j < fit.rank; ++j)
        Ur.col(j) = c.U.col(cols[static_cast<std::size_t>(j)]);
    const SoftmaxProblem prob(Ur, c.R, c.W, {0, 1}, options.ridge);
    const NewtonResult nr = newton(prob, c.total, options);
    fit.coefficients = Eigen::VectorXd::Zero(X.cols());
    for (Eigen::Index j = 0; j < fit.rank; ++j)
        fit.coefficients(cols[static_cast<std::size_t>(j)]) = nr.theta(j);
    fit.converged = nr.converged;
    fit.separated = nr.separated;
    fit.iterations = nr.iterations;
    fit.final_gradient_norm = nr.gradient_norm;
    fit.loglik = nr.objective;
    return fit;
}

Eigen::VectorXd predict_logistic(const FittedBinary& model, const DesignRef& X)
{
    if (X.cols() != model.coefficients.size())
        throw UsageError("design has " + std::to_string(X.cols()) + " columns, model expects "
                         + std::to_string(model.coefficients.size()));
    const Eigen::VectorXd eta = X * model.coefficients;
    return eta.unaryExpr([](double e) {
        return e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
    });
}

std::pair<double, Eigen::VectorXd> loglik_and_gradient(const DesignRef& beta, const DesignRef& X, const DesignRef& Y,
                                                       const std::optional<Eigen::VectorXd>& weights)
{
    const Eigen::Index p = X.cols();
    if (beta.rows() != 2 || beta.cols() != p || Y.rows() != X.rows() || Y.cols() != 3)
        throw UsageError("inconsistent shapes in loglik_and_gradient");
    const Eigen::VectorXd w = resolve_weights(weights, X.rows());
    Eigen::MatrixXd eta(X.rows(), 3);
    eta.col(0).setZero();
    eta.rightCols<2>() = X * beta.transpose();
    const Eigen::MatrixXd P = softmax_rows(eta);
    double obj = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int c = 0; c < 3; ++c) {
            if (Y(i, c) != 0.0)
                obj += w(i) * Y(i, c) * std::log(P(i, c));
        }
    }
    Eigen::VectorXd g(2 * p);
    for (int c = 0; c < 2; ++c)
        g.segment(c * p, p) = X.transpose() * w.cwiseProduct(Y.col(c + 1) - P.col(c + 1));
    return {obj, g};
}

}  // namespace scgcomp
