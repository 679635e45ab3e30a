#pragma once

#include <Eigen/Dense>
#include <vector>

#include "saferoute/model_kind.hpp"

namespace saferoute {

// Design matrix plus response. Column 0 is the all-ones intercept column by
// pipeline convention; the remaining columns are time features.
struct DesignMatrix {
    Eigen::MatrixXd X;  // n x p
    Eigen::VectorXd y;  // n

    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
};

// Builds the (1, normalized bucket index) design for a count series. Index i
// maps to i / (n - 1), so the training window spans [0, 1] and forecasts
// extrapolate slightly beyond it.
DesignMatrix time_design(const std::vector<std::uint64_t>& counts);
// Feature row for bucket index i under the same normalization.
Eigen::VectorXd time_features(std::size_t index, std::size_t train_length);

struct FitDiagnostics {
    int iterations = 0;
    double final_objective = 0.0;
    bool converged = true;
};

struct ModelCoefficients {
    Eigen::VectorXd theta;
    ModelKind model_kind = ModelKind::Ols;
    double lambda = 0.0;  // meaningful for ridge/lasso only
    FitDiagnostics diagnostics;
};

// Ordinary least squares via the normal equations X'X theta = X'y.
// Throws FitError when X'X is singular or ill-conditioned (use ridge).
ModelCoefficients fit_ols(const DesignMatrix& d);

// Ridge: solves (X'X + lambda I) theta = X'y. The penalty applies to every
// coordinate including column 0, matching the closed form. lambda must be > 0
// (use fit_ols for the unpenalized case).
ModelCoefficients fit_ridge(const DesignMatrix& d, double lambda);

// sign(z) * max(|z| - gamma, 0). gamma must be >= 0.
double soft_threshold(double z, double gamma);

// Lasso: minimizes sum (y - X beta)^2 + lambda * sum_{j>=1} |beta_j| by cyclic
// coordinate descent with per-coordinate soft thresholding. Non-intercept
// columns are scaled to unit variance internally (the penalty acts on the
// scaled coefficients; diagnostics.final_objective reports that objective);
// returned coefficients are on the original scale. The intercept is never
// penalized. Stops when the largest scaled-coefficient change in a sweep
// drops below 1e-8 or after 10,000 sweeps (then diagnostics.converged is
// false but the result is still returned).
ModelCoefficients fit_lasso(const DesignMatrix& d, double lambda);

// Smallest lambda at which fit_lasso zeroes every penalized coefficient:
// 2 * max_j |Xs_j' (y - mean(y))| over the internally scaled columns.
double lasso_lambda_max(const DesignMatrix& d);

// Poisson regression: maximizes the log-likelihood
//   sum_i ( y_i theta'x_i - exp(theta'x_i) )
// by Newton-Raphson with step halving. At return the gradient norm
// ||X'(y - exp(X theta))|| is below 1e-8.
// y must hold non-negative integers. All-zero y cannot be fit (the intercept
// runs to -inf); pass pseudocount > 0 to add it to every count, or use a
// linear model. Divergence after 50 halvings raises FitError suggesting
// feature rescaling.
ModelCoefficients fit_poisson(const DesignMatrix& d, double pseudocount = 0.0);

// Model response for one feature row: exp(theta'x) for Poisson, theta'x
// otherwise. Throws DomainError on dimension mismatch.
double predict(const ModelCoefficients& m, const Eigen::VectorXd& x_row);

}  // namespace saferoute
