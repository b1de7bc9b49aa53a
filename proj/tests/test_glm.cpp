#include "scgcomp/errors.hpp"
#include "scgcomp/glm.hpp"
#include "scgcomp/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace scgcomp;

namespace {

/// n x p design with an intercept and standard-ish uniform columns.
Eigen::MatrixXd random_design(Eigen::Index n, Eigen::Index p, const CounterRng& rng)
{
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (Eigen::Index j = 1; j < p; ++j)
            X(i, j) = 2.0 * rng.uniform(static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(j)) - 1.0;
    }
    return X;
}

Eigen::MatrixXd random_fractional(Eigen::Index n, const CounterRng& rng)
{
    Eigen::MatrixXd Y(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c)
            Y(i, c) = rng.uniform(static_cast<std::uint64_t>(i), 100, static_cast<std::uint32_t>(c));
        Y.row(i) /= Y.row(i).sum();
    }
    return Y;
}

}  // namespace

TEST_CASE("analytic gradient matches central differences")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const CounterRng rng(seed);
        const Eigen::Index p = 2 + static_cast<Eigen::Index>(seed % 4);
        const Eigen::MatrixXd X = random_design(40, p, rng);
        const Eigen::MatrixXd Y = random_fractional(40, rng);
        Eigen::VectorXd w(40);
        for (Eigen::Index i = 0; i < 40; ++i)
            w(i) = 0.5 + rng.uniform(static_cast<std::uint64_t>(i), 200);
        Eigen::MatrixXd beta(2, p);
        for (Eigen::Index j = 0; j < 2 * p; ++j)
            beta(j / p, j % p) = 2.0 * rng.uniform(static_cast<std::uint64_t>(j), 300) - 1.0;
        const auto [ll, grad] = loglik_and_gradient(beta, X, Y, w);
        for (Eigen::Index j = 0; j < 2 * p; ++j) {
            const double h = 1e-5;
            Eigen::MatrixXd bp = beta, bm = beta;
            bp(j / p, j % p) += h;
            bm(j / p, j % p) -= h;
            const double fd = (loglik_and_gradient(bp, X, Y, w).first - loglik_and_gradient(bm, X, Y, w).first) / (2 * h);
            CHECK(std::abs(fd - grad(j)) <= 1e-5 * std::max(1.0, std::abs(grad(j))));
        }
    }
}

TEST_CASE("saturated fit reproduces cell frequencies")
{
    // Two binary factors with interaction; counts chosen by hand.
    const int counts[4][3] = {{10, 5, 3}, {4, 8, 2}, {7, 1, 6}, {2, 2, 9}};
    std::vector<OutcomeState> y;
    Eigen::MatrixXd X(0, 4);
    std::vector<Eigen::RowVector4d> rows;
    for (int cell = 0; cell < 4; ++cell) {
        const double a = cell & 1, b = (cell >> 1) & 1;
        for (int c = 0; c < 3; ++c) {
            for (int k = 0; k < counts[cell][c]; ++k) {
                rows.emplace_back(1.0, a, b, a * b);
                y.push_back(static_cast<OutcomeState>(c + 1));
            }
        }
    }
    X.resize(static_cast<Eigen::Index>(rows.size()), 4);
    for (std::size_t r = 0; r < rows.size(); ++r)
        X.row(static_cast<Eigen::Index>(r)) = rows[r];
    const auto fit = fit_multinomial(X, y);
    REQUIRE(fit.converged);
    Eigen::MatrixXd cells(4, 4);
    for (int cell = 0; cell < 4; ++cell) {
        const double a = cell & 1, b = (cell >> 1) & 1;
        cells.row(cell) << 1.0, a, b, a * b;
    }
    const Eigen::MatrixXd P = predict_multinomial(fit, cells);
    for (int cell = 0; cell < 4; ++cell) {
        const double total = counts[cell][0] + counts[cell][1] + counts[cell][2];
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(P(cell, c) - counts[cell][c] / total) < 1e-8);
    }
}

TEST_CASE("balanced intercept-only fit has zero coefficients")
{
    std::vector<OutcomeState> y;
    for (int r = 0; r < 5; ++r) {
        y.push_back(OutcomeState::EventFree);
        y.push_back(OutcomeState::Intermediate);
        y.push_back(OutcomeState::Terminal);
    }
    const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(15, 1);
    const auto fit = fit_multinomial(X, y);
    CHECK(fit.converged);
    CHECK(fit.coefficients().cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd yb = (Eigen::VectorXd(4) << 0, 1, 0, 1).finished();
    const auto lf = fit_logistic(Eigen::MatrixXd::Ones(4, 1), yb);
    CHECK(lf.converged);
    CHECK(std::abs(lf.coefficients(0)) < 1e-12);
}

TEST_CASE("fractional responses: intercept-only fit equals the mean response")
{
    const CounterRng rng(7);
    const Eigen::MatrixXd Y = random_fractional(60, rng);
    const auto fit = fit_multinomial(Eigen::MatrixXd::Ones(60, 1), Y);
    REQUIRE(fit.converged);
    const Eigen::MatrixXd P = predict_multinomial(fit, Eigen::MatrixXd::Ones(1, 1));
    const Eigen::RowVector3d mean = Y.colwise().mean();
    CHECK((P.row(0) - mean).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("weights act as replication")
{
    const CounterRng rng(11);
    const Eigen::MatrixXd X = random_design(20, 3, rng);
    const Eigen::MatrixXd Y = random_fractional(20, rng);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(20);
    w(3) = 2.0;
    Eigen::MatrixXd X2(21, 3), Y2(21, 3);
    X2 << X, X.row(3);
    Y2 << Y, Y.row(3);
    const auto a = fit_multinomial(X, Y, w);
    const auto b = fit_multinomial(X2, Y2);
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("absent categories get probability zero")
{
    std::vector<OutcomeState> y{OutcomeState::EventFree, OutcomeState::Intermediate, OutcomeState::EventFree,
                                OutcomeState::EventFree, OutcomeState::Intermediate};
    Eigen::MatrixXd X(5, 2);
    X << 1, 0, 1, 1, 1, 0, 1, 1, 1, 0;
    const auto fit = fit_multinomial(X, y);
    CHECK(fit.converged);
    CHECK_FALSE(fit.active[2]);
    const Eigen::MatrixXd P = predict_multinomial(fit, X);
    CHECK(P.col(2).isZero());
    CHECK(P(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(P(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("reference category is the first active one")
{
    std::vector<OutcomeState> y{OutcomeState::Intermediate, OutcomeState::Terminal, OutcomeState::Intermediate};
    const auto fit = fit_multinomial(Eigen::MatrixXd::Ones(3, 1), y);
    CHECK(fit.reference_category() == OutcomeState::Intermediate);
    const Eigen::MatrixXd P = predict_multinomial(fit, Eigen::MatrixXd::Ones(1, 1));
    CHECK(P(0, 0) == 0.0);
    CHECK(P(0, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("aliased columns are dropped without changing predictions")
{
    const CounterRng rng(5);
    Eigen::MatrixXd X = random_design(50, 3, rng);
    Eigen::MatrixXd Xa(50, 4);
    Xa << X, 2.0 * X.col(1);
    const Eigen::MatrixXd Y = random_fractional(50, rng);
    const auto a = fit_multinomial(X, Y);
    const auto b = fit_multinomial(Xa, Y);
    CHECK(b.converged);
    CHECK(b.rank == 3);
    CHECK((predict_multinomial(a, X) - predict_multinomial(b, Xa)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("separated data are flagged")
{
    Eigen::MatrixXd X(6, 2);
    X << 1, -1, 1, -2, 1, -3, 1, 1, 1, 2, 1, 3;
    const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished();
    const auto lf = fit_logistic(X, y);
    CHECK_FALSE(lf.converged);
    CHECK(lf.separated);
    std::vector<OutcomeState> s{OutcomeState::EventFree, OutcomeState::EventFree, OutcomeState::EventFree,
                                OutcomeState::Terminal,  OutcomeState::Terminal,  OutcomeState::Terminal};
    const auto mf = fit_multinomial(X, s);
    CHECK_FALSE(mf.converged);
    CHECK(mf.separated);
    FitOptions ridge;
    ridge.ridge = 1e-3;
    CHECK(fit_logistic(X, y, std::nullopt, ridge).converged);
}

TEST_CASE("logistic fit agrees with the two-category multinomial")
{
    const CounterRng rng(3);
    const Eigen::MatrixXd X = random_design(80, 3, rng);
    Eigen::VectorXd y(80);
    std::vector<OutcomeState> s;
    for (Eigen::Index i = 0; i < 80; ++i) {
        const double eta = 0.3 + X(i, 1) - 0.5 * X(i, 2);
        y(i) = rng.uniform(static_cast<std::uint64_t>(i), 400) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        s.push_back(y(i) > 0 ? OutcomeState::Terminal : OutcomeState::EventFree);
    }
    const auto lf = fit_logistic(X, y);
    const auto mf = fit_multinomial(X, s);
    REQUIRE(lf.converged);
    REQUIRE(mf.converged);
    CHECK((lf.coefficients - mf.beta.row(2).transpose()).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((predict_logistic(lf, X) - predict_multinomial(mf, X).col(2)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("input checks")
{
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
    Eigen::MatrixXd bad(3, 3);
    bad << 0.5, 0.5, 0.5, 1, 0, 0, 0, 1, 0;
    CHECK_THROWS_AS(fit_multinomial(X, bad), UsageError);
    CHECK_THROWS_AS(fit_multinomial(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Identity(3, 3)), UsageError);
    FitOptions o;
    o.ridge = -1.0;
    CHECK_THROWS_AS(o.check(), UsageError);
}

TEST_CASE("softmax rows are stable for large predictors")
{
    Eigen::MatrixXd eta(1, 3);
    eta << 1000.0, 1000.0, -1000.0;
    const Eigen::MatrixXd p = softmax_rows(eta);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p(0, 2) == 0.0);
}
