#include <doctest.h>

#include <cmath>
#include <random>

#include "saferoute/errors.hpp"
#include "saferoute/linear_models.hpp"
#include "test_support.hpp"

using namespace saferoute;

namespace {

DesignMatrix design(const std::vector<std::vector<double>>& x_rows,
                    const std::vector<double>& y) {
    DesignMatrix d;
    d.X.resize(static_cast<Eigen::Index>(x_rows.size()),
               static_cast<Eigen::Index>(x_rows[0].size()));
    d.y.resize(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < x_rows.size(); ++i) {
        for (std::size_t j = 0; j < x_rows[i].size(); ++j)
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x_rows[i][j];
        d.y[static_cast<Eigen::Index>(i)] = y[i];
    }
    return d;
}

DesignMatrix random_design(std::uint64_t seed, int n, int p) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DesignMatrix d;
    d.X.resize(n, p);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        d.X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) d.X(i, j) = gauss(rng);
        d.y[i] = 2.0 + 0.5 * d.X(i, p - 1) + 0.1 * gauss(rng);
    }
    return d;
}

// Log-likelihood the Poisson fitter maximizes, written independently.
double poisson_loglik(const DesignMatrix& d, const Eigen::VectorXd& theta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const double eta = d.X.row(i).dot(theta);
        ll += d.y[i] * eta - std::exp(eta);
    }
    return ll;
}

// Penalized least-squares objective fit_lasso documents: residual sum of
// squares plus lambda times the l1 norm of the *scaled* non-intercept
// coefficients (population standard deviation scaling).
double lasso_objective(const DesignMatrix& d, double b0, double b1, double lambda) {
    double rss = 0.0;
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const double r = d.y[i] - b0 - b1 * d.X(i, 1);
        rss += r * r;
    }
    const Eigen::Index n = d.X.rows();
    const double mean = d.X.col(1).mean();
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double c = d.X(i, 1) - mean;
        var += c * c;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    return rss + lambda * std::abs(b1 * sd);
}

}  // namespace

TEST_CASE("time_design builds (1, normalized index) features") {
    const auto d = time_design({5, 7, 9, 11, 13});
    REQUIRE(d.X.rows() == 5);
    REQUIRE(d.X.cols() == 2);
    for (int i = 0; i < 5; ++i) {
        CHECK(d.X(i, 0) == 1.0);
        CHECK(d.X(i, 1) == doctest::Approx(i / 4.0));
        CHECK(d.y[i] == 5.0 + 2.0 * i);
    }
    CHECK(time_features(4, 5)[1] == 1.0);
    CHECK(time_features(5, 5)[1] == doctest::Approx(5.0 / 4.0));  // extrapolation
}

TEST_CASE("ols recovers an exact line") {
    // y = 1 + 2x sampled exactly
    const auto d = design({{1, 0.0}, {1, 0.5}, {1, 1.0}, {1, 1.5}}, {1, 2, 3, 4});
    const auto m = fit_ols(d);
    CHECK(std::abs(m.theta[0] - 1.0) < 1e-10);
    CHECK(std::abs(m.theta[1] - 2.0) < 1e-10);
    CHECK(m.model_kind == ModelKind::Ols);
}

TEST_CASE("ols on all-zero response is the zero vector") {
    const auto d = design({{1, 0.0}, {1, 0.5}, {1, 1.0}}, {0, 0, 0});
    const auto m = fit_ols(d);
    CHECK(m.theta.norm() < 1e-12);
}

TEST_CASE("ols matches the Gaussian-elimination oracle to 1e-9") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto d = random_design(seed, 20, 2);
        const auto m = fit_ols(d);

        // Assemble and solve the normal equations with plain loops.
        const int p = 2;
        std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
        std::vector<double> xty(p, 0.0);
        for (int i = 0; i < 20; ++i) {
            for (int a = 0; a < p; ++a) {
                xty[a] += d.X(i, a) * d.y[i];
                for (int b = 0; b < p; ++b) xtx[a][b] += d.X(i, a) * d.X(i, b);
            }
        }
        const auto oracle = test_support::gauss_solve(xtx, xty);
        for (int j = 0; j < p; ++j) {
            CAPTURE(seed);
            CHECK(std::abs(m.theta[j] - oracle[j]) < 1e-9);
        }
    }
}

TEST_CASE("ols rejects singular designs and recommends ridge") {
    // duplicated column: X'X is singular
    const auto d = design({{1, 1.0}, {1, 1.0}, {1, 1.0}}, {1, 2, 3});
    CHECK_THROWS_WITH_AS(fit_ols(d), doctest::Contains("ridge"), FitError);
}

TEST_CASE("ridge at vanishing lambda matches ols") {
    const auto d = random_design(11, 20, 2);
    const auto ols = fit_ols(d);
    const auto ridge = fit_ridge(d, 1e-12);
    CHECK((ridge.theta - ols.theta).norm() < 1e-6);
}

TEST_CASE("ridge on the identity design shrinks y by 1/(1+lambda)") {
    const auto d = design({{1.0, 0.0}, {0.0, 1.0}}, {2, 4});
    const auto m = fit_ridge(d, 1.0);
    CHECK(m.theta[0] == doctest::Approx(1.0));
    CHECK(m.theta[1] == doctest::Approx(2.0));
    CHECK(m.lambda == 1.0);
}

TEST_CASE("huge lambda crushes the coefficients") {
    const auto d = random_design(12, 20, 2);
    const auto m = fit_ridge(d, 1e9);
    const double xty_norm = (d.X.transpose() * d.y).norm();
    CHECK(m.theta.norm() < 1e-6 * xty_norm);
}

TEST_CASE("ridge norm shrinks monotonically in lambda") {
    const auto d = random_design(13, 24, 2);
    double prev = fit_ols(d).theta.norm();
    for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
        const double cur = fit_ridge(d, lambda).theta.norm();
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("ridge requires a positive lambda") {
    const auto d = random_design(14, 10, 2);
    CHECK_THROWS_AS(fit_ridge(d, 0.0), DomainError);
    CHECK_THROWS_AS(fit_ridge(d, -1.0), DomainError);
}

TEST_CASE("soft threshold cases") {
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-3.0, 1.0) == -2.0);
    CHECK(soft_threshold(0.0, 0.0) == 0.0);
    CHECK(soft_threshold(2.0, 0.0) == 2.0);
    CHECK_THROWS_AS(soft_threshold(1.0, -0.5), DomainError);
}

TEST_CASE("lasso at the computed lambda_max zeroes every penalized coefficient") {
    const auto d = random_design(21, 24, 2);
    const double lmax = lasso_lambda_max(d);
    const auto at_max = fit_lasso(d, lmax);
    CHECK(std::abs(at_max.theta[1]) < 1e-10);
    // and just below the threshold the coefficient wakes up
    const auto below = fit_lasso(d, 0.9 * lmax);
    CHECK(std::abs(below.theta[1]) > 1e-10);
}

TEST_CASE("lasso with a vanishing penalty matches ols") {
    const auto d = random_design(22, 24, 2);
    const auto ols = fit_ols(d);
    const auto m = fit_lasso(d, 1e-10);
    CHECK((m.theta - ols.theta).norm() < 1e-4);
}

TEST_CASE("one-feature lasso matches a grid search of its objective") {
    const auto d = random_design(23, 24, 2);
    const double lambda = 3.0;
    const auto m = fit_lasso(d, lambda);

    // Brute-force scan over the slope; the unpenalized intercept is profiled
    // out in closed form for each candidate.
    const double x_mean = d.X.col(1).mean();
    const double y_mean = d.y.mean();
    auto profiled = [&](double b1) {
        const double b0 = y_mean - b1 * x_mean;
        return lasso_objective(d, b0, b1, lambda);
    };
    double best = 0.0, best_obj = profiled(0.0);
    double lo = -10.0, hi = 10.0, step = 1e-2;
    for (int refine = 0; refine < 3; ++refine) {
        for (double b = lo; b <= hi; b += step) {
            const double obj = profiled(b);
            if (obj < best_obj) {
                best_obj = obj;
                best = b;
            }
        }
        lo = best - 2 * step;
        hi = best + 2 * step;
        step *= 1e-2;
    }
    CHECK(std::abs(m.theta[1] - best) < 1e-4);
    // and the returned point scores no worse than the scan winner
    CHECK(profiled(m.theta[1]) <= best_obj + 1e-9);
}

TEST_CASE("lasso zero-set only grows with lambda") {
    const auto d = random_design(24, 24, 3);
    const double lmax = lasso_lambda_max(d);
    std::size_t prev_zero = 0;
    for (double f : {0.001, 0.01, 0.1, 0.5, 1.0}) {
        const auto m = fit_lasso(d, f * lmax);
        std::size_t zeros = 0;
        for (Eigen::Index j = 1; j < m.theta.size(); ++j)
            if (std::abs(m.theta[j]) <= 1e-10) ++zeros;
        CHECK(zeros >= prev_zero);
        prev_zero = zeros;
    }
    CHECK(prev_zero == 2);  // everything penalized is off at lambda_max
}

TEST_CASE("intercept-only poisson recovers the log of the mean") {
    const auto d = design({{1.0}, {1.0}, {1.0}}, {1, 2, 3});
    const auto m = fit_poisson(d);
    CHECK(std::abs(m.theta[0] - std::log(2.0)) < 1e-6);
    CHECK(m.diagnostics.converged);

    // independent check: golden-section search of the log-likelihood
    double lo = -5.0, hi = 5.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    while (hi - lo > 1e-10) {
        const double a = hi - phi * (hi - lo);
        const double b = lo + phi * (hi - lo);
        Eigen::VectorXd ta(1), tb(1);
        ta << a;
        tb << b;
        if (poisson_loglik(d, ta) < poisson_loglik(d, tb))
            lo = a;
        else
            hi = b;
    }
    CHECK(std::abs(m.theta[0] - 0.5 * (lo + hi)) < 1e-6);
}

TEST_CASE("constant counts give exactly log of the constant") {
    const auto d = design({{1.0}, {1.0}, {1.0}, {1.0}}, {5, 5, 5, 5});
    const auto m = fit_poisson(d);
    CHECK(std::abs(m.theta[0] - std::log(5.0)) < 1e-9);
}

TEST_CASE("two-parameter poisson matches a refined grid scan") {
    const auto d = design({{1, 0.0}, {1, 0.25}, {1, 0.5}, {1, 0.75}, {1, 1.0}},
                          {2, 3, 3, 5, 8});
    const auto m = fit_poisson(d);

    double b0 = 0.0, b1 = 0.0, best = -1e300;
    double c0 = 0.0, c1 = 0.0, radius = 4.0, step = 0.1;
    for (int refine = 0; refine < 4; ++refine) {
        for (double a = c0 - radius; a <= c0 + radius; a += step) {
            for (double b = c1 - radius; b <= c1 + radius; b += step) {
                Eigen::VectorXd t(2);
                t << a, b;
                const double ll = poisson_loglik(d, t);
                if (ll > best) {
                    best = ll;
                    b0 = a;
                    b1 = b;
                }
            }
        }
        c0 = b0;
        c1 = b1;
        radius = 2 * step;
        step *= 0.05;
    }
    CHECK(std::abs(m.theta[0] - b0) < 1e-4);
    CHECK(std::abs(m.theta[1] - b1) < 1e-4);
}

TEST_CASE("poisson satisfies the intercept score equation") {
    const auto d = design({{1, 0.0}, {1, 0.5}, {1, 1.0}, {1, 1.5}}, {1, 0, 3, 2});
    const auto m = fit_poisson(d);
    double fitted_sum = 0.0;
    for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        fitted_sum += std::exp(d.X.row(i).dot(m.theta));
    CHECK(std::abs(fitted_sum - d.y.sum()) < 1e-6);
}

TEST_CASE("poisson input validation") {
    CHECK_THROWS_AS(fit_poisson(design({{1.0}, {1.0}}, {-1, 2})), DomainError);
    CHECK_THROWS_AS(fit_poisson(design({{1.0}, {1.0}}, {1.5, 2})), DomainError);
    CHECK_THROWS_WITH_AS(fit_poisson(design({{1.0}, {1.0}}, {0, 0})),
                         doctest::Contains("pseudocount"), FitError);
    // the pseudocount escape hatch works
    const auto m = fit_poisson(design({{1.0}, {1.0}}, {0, 0}), 0.5);
    CHECK(std::abs(m.theta[0] - std::log(0.5)) < 1e-6);
}

TEST_CASE("predict dispatches on model kind") {
    ModelCoefficients poisson;
    poisson.model_kind = ModelKind::Poisson;
    poisson.theta.resize(2);
    poisson.theta << std::log(2.0), 0.0;
    Eigen::VectorXd x(2);
    x << 1.0, 7.0;
    CHECK(predict(poisson, x) == doctest::Approx(2.0));

    ModelCoefficients ols;
    ols.model_kind = ModelKind::Ols;
    ols.theta.resize(2);
    ols.theta << 1.0, 2.0;
    Eigen::VectorXd x2(2);
    x2 << 1.0, 3.0;
    CHECK(predict(ols, x2) == 7.0);

    ModelCoefficients ridge;
    ridge.model_kind = ModelKind::Ridge;
    ridge.theta = Eigen::VectorXd::Zero(2);
    CHECK(predict(ridge, x2) == 0.0);

    Eigen::VectorXd wrong(3);
    wrong << 1, 2, 3;
    CHECK_THROWS_AS(predict(ols, wrong), DomainError);
}

TEST_CASE("fitters are bit-deterministic") {
    const auto d = random_design(31, 24, 2);
    for (int trial = 0; trial < 2; ++trial) {
        CHECK(fit_ols(d).theta == fit_ols(d).theta);
        CHECK(fit_ridge(d, 0.1).theta == fit_ridge(d, 0.1).theta);
        CHECK(fit_lasso(d, 0.1).theta == fit_lasso(d, 0.1).theta);
        CHECK(fit_poisson(time_design({1, 2, 3, 2, 4})).theta ==
              fit_poisson(time_design({1, 2, 3, 2, 4})).theta);
    }
}

TEST_CASE("model kind names round-trip") {
    for (ModelKind k : kAllModelKinds) {
        CHECK(parse_model_kind(model_kind_name(k)) == k);
    }
    CHECK_FALSE(parse_model_kind("arima").has_value());
}
