#include "saferoute/linear_models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "saferoute/errors.hpp"

namespace saferoute {

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Poisson: return "poisson";
        case ModelKind::Ols: return "ols";
        case ModelKind::Ridge: return "ridge";
        case ModelKind::Lasso: return "lasso";
        case ModelKind::Lstm: return "lstm";
        case ModelKind::Gru: return "gru";
    }
    return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
    for (ModelKind k : kAllModelKinds)
        if (model_kind_name(k) == name) return k;
    return std::nullopt;
}

DesignMatrix time_design(const std::vector<std::uint64_t>& counts) {
    const auto n = counts.size();
    DesignMatrix d;
    d.X.resize(static_cast<Eigen::Index>(n), 2);
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd row = time_features(i, n);
        d.X.row(static_cast<Eigen::Index>(i)) = row.transpose();
        d.y(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]);
    }
    return d;
}

Eigen::VectorXd time_features(std::size_t index, std::size_t train_length) {
    Eigen::VectorXd x(2);
    x(0) = 1.0;
    x(1) = train_length > 1
               ? static_cast<double>(index) / static_cast<double>(train_length - 1)
               : 0.0;
    return x;
}

namespace {

void check_design(const DesignMatrix& d) {
    if (d.X.rows() != d.y.rows())
        throw DomainError("design matrix and response have different lengths");
    if (d.X.rows() < d.X.cols())
        throw DomainError("need at least as many observations as parameters");
    if (!d.X.allFinite() || !d.y.allFinite())
        throw DomainError("design matrix contains non-finite entries");
}

// Solves (X'X + lambda I) theta = X'y with a condition check on the
// regularized matrix.
Eigen::VectorXd solve_normal_equations(const DesignMatrix& d, double lambda) {
    Eigen::MatrixXd A = d.X.transpose() * d.X;
    if (lambda != 0.0) A.diagonal().array() += lambda;
    Eigen::VectorXd b = d.X.transpose() * d.y;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw FitError("X'X is singular or ill-conditioned (condition > 1e12); "
                       "consider fit_ridge with a positive lambda");
    return A.ldlt().solve(b);
}

}  // namespace

ModelCoefficients fit_ols(const DesignMatrix& d) {
    check_design(d);
    ModelCoefficients m;
    m.model_kind = ModelKind::Ols;
    m.theta = solve_normal_equations(d, 0.0);
    m.diagnostics.iterations = 1;
    m.diagnostics.final_objective = (d.y - d.X * m.theta).squaredNorm();
    return m;
}

ModelCoefficients fit_ridge(const DesignMatrix& d, double lambda) {
    check_design(d);
    if (!(lambda > 0.0))
        throw DomainError("ridge lambda must be > 0 (use fit_ols for lambda = 0)");
    ModelCoefficients m;
    m.model_kind = ModelKind::Ridge;
    m.lambda = lambda;
    m.theta = solve_normal_equations(d, lambda);
    m.diagnostics.iterations = 1;
    m.diagnostics.final_objective =
        (d.y - d.X * m.theta).squaredNorm() + lambda * m.theta.squaredNorm();
    return m;
}

double soft_threshold(double z, double gamma) {
    if (gamma < 0.0) throw DomainError("soft_threshold gamma must be >= 0");
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

namespace {

// Population standard deviation per column; columns with zero spread keep
// scale 1 so the coordinate update stays well defined.
Eigen::VectorXd column_scales(const Eigen::MatrixXd& X) {
    Eigen::VectorXd scales = Eigen::VectorXd::Ones(X.cols());
    for (Eigen::Index j = 1; j < X.cols(); ++j) {
        double mean = X.col(j).mean();
        double var = (X.col(j).array() - mean).square().mean();
        if (var > 0.0) scales(j) = std::sqrt(var);
    }
    return scales;
}

}  // namespace

double lasso_lambda_max(const DesignMatrix& d) {
    check_design(d);
    Eigen::VectorXd scales = column_scales(d.X);
    Eigen::VectorXd centered = d.y.array() - d.y.mean();
    double best = 0.0;
    for (Eigen::Index j = 1; j < d.X.cols(); ++j) {
        double corr = std::abs((d.X.col(j) / scales(j)).dot(centered));
        best = std::max(best, corr);
    }
    return 2.0 * best;
}

ModelCoefficients fit_lasso(const DesignMatrix& d, double lambda) {
    check_design(d);
    if (!(lambda > 0.0)) throw DomainError("lasso lambda must be > 0");

    constexpr int kMaxSweeps = 10000;
    constexpr double kTol = 1e-8;

    const Eigen::Index p = d.X.cols();
    Eigen::VectorXd scales = column_scales(d.X);
    Eigen::MatrixXd Xs = d.X;
    for (Eigen::Index j = 1; j < p; ++j) Xs.col(j) /= scales(j);

    Eigen::VectorXd col_sq(p);
    for (Eigen::Index j = 0; j < p; ++j) col_sq(j) = Xs.col(j).squaredNorm();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd residual = d.y;  // y - Xs * beta

    int sweep = 0;
    double max_change = std::numeric_limits<double>::infinity();
    for (; sweep < kMaxSweeps && max_change >= kTol; ++sweep) {
        max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq(j) == 0.0) continue;
            double rho = Xs.col(j).dot(residual) + col_sq(j) * beta(j);
            double updated = (j == 0) ? rho / col_sq(j)
                                      : soft_threshold(rho, lambda / 2.0) / col_sq(j);
            double change = updated - beta(j);
            if (change != 0.0) {
                residual -= Xs.col(j) * change;
                beta(j) = updated;
            }
            max_change = std::max(max_change, std::abs(change));
        }
    }

    ModelCoefficients m;
    m.model_kind = ModelKind::Lasso;
    m.lambda = lambda;
    m.theta = beta;
    for (Eigen::Index j = 1; j < p; ++j) m.theta(j) /= scales(j);
    m.diagnostics.iterations = sweep;
    m.diagnostics.converged = max_change < kTol;
    m.diagnostics.final_objective =
        residual.squaredNorm() + lambda * beta.tail(p - 1).lpNorm<1>();
    return m;
}

namespace {

double poisson_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& theta) {
    Eigen::VectorXd eta = X * theta;
    double ll = y.dot(eta) - eta.array().exp().sum();
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
}

}  // namespace

ModelCoefficients fit_poisson(const DesignMatrix& d, double pseudocount) {
    check_design(d);
    if (pseudocount < 0.0) throw DomainError("pseudocount must be >= 0");

    Eigen::VectorXd y = d.y;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) < 0.0 || std::abs(y(i) - std::round(y(i))) > 1e-9)
            throw DomainError("Poisson fitting needs non-negative integer counts");
    }
    if (pseudocount > 0.0) y.array() += pseudocount;
    if (y.maxCoeff() <= 0.0)
        throw FitError("all counts are zero: the Poisson intercept diverges to -inf; "
                       "pass a pseudocount (e.g. 1) or use a linear model");

    constexpr double kTol = 1e-8;
    constexpr int kMaxIter = 100;
    constexpr int kMaxHalvings = 50;

    const Eigen::Index p = d.X.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
    // Start the intercept at log(mean) when column 0 is the usual ones column.
    if ((d.X.col(0).array() == 1.0).all()) theta(0) = std::log(y.mean());

    double ll = poisson_loglik(d.X, y, theta);
    int iter = 0;
    bool converged = false;
    for (; iter < kMaxIter; ++iter) {
        Eigen::VectorXd mu = (d.X * theta).array().exp();
        Eigen::VectorXd grad = d.X.transpose() * (y - mu);
        if (grad.norm() < kTol) {
            converged = true;
            break;
        }

        // Newton direction: (X' diag(mu) X) dir = grad
        Eigen::MatrixXd H = d.X.transpose() * mu.asDiagonal() * d.X;
        Eigen::VectorXd dir = H.ldlt().solve(grad);
        if (!dir.allFinite())
            throw FitError("Poisson Newton step failed; consider rescaling features");

        // Newton decrement: the gain a full step can still buy. Once it drops
        // below the log-likelihood's floating-point resolution the line search
        // would only chase rounding noise, so the optimum is reached as
        // closely as doubles can measure it (large-count series get here with
        // the gradient a few orders above kTol but the fit already exact to
        // machine precision).
        const double decrement = 0.5 * grad.dot(dir);
        if (decrement <= std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll))) {
            converged = true;
            break;
        }

        double step = 1.0;
        int halvings = 0;
        double next_ll = poisson_loglik(d.X, y, theta + step * dir);
        while (next_ll < ll && halvings < kMaxHalvings) {
            step *= 0.5;
            ++halvings;
            next_ll = poisson_loglik(d.X, y, theta + step * dir);
        }
        if (next_ll < ll)
            throw FitError("Poisson fit diverged (objective still decreasing after 50 "
                           "halvings); consider rescaling features");
        theta += step * dir;
        ll = next_ll;
    }
    if (!converged)
        throw FitError("Poisson fit did not reach gradient tolerance in 100 iterations");

    ModelCoefficients m;
    m.model_kind = ModelKind::Poisson;
    m.theta = theta;
    m.diagnostics.iterations = iter;
    m.diagnostics.final_objective = ll;
    return m;
}

double predict(const ModelCoefficients& m, const Eigen::VectorXd& x_row) {
    if (x_row.size() != m.theta.size())
        throw DomainError("feature row has " + std::to_string(x_row.size()) +
                          " entries but the model has " + std::to_string(m.theta.size()));
    double eta = m.theta.dot(x_row);
    return m.model_kind == ModelKind::Poisson ? std::exp(eta) : eta;
}

}  // namespace saferoute
