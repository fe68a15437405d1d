#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ivpsr/kernel.hpp"

namespace ivpsr {

/// ols and ridge share the linear solver (ols is ridge with lambda0 = 0).
/// gaussian_moment regresses the first-order block linearly and predicts
/// [mu; vec(mu mu^T + R)] with R the residual covariance.
enum class RegressionMethod { ols, ridge, logistic, lasso, kernel_ridge, gaussian_moment };

std::string to_string(RegressionMethod method);
RegressionMethod regression_method_from_string(const std::string& name);

struct RegressorSpec {
  RegressionMethod method = RegressionMethod::ols;
  double lambda0 = 0.0;  // ridge / kernel_ridge / gaussian_moment
  double alpha = 0.0;    // lasso
  int max_iter = 0;      // 0: method default (100 logistic, 10000 lasso)
  double tol = 1e-8;
  bool strict = false;   // rank-deficient design with lambda0 = 0 is an error
  Kernel kernel;         // kernel_ridge

  void validate() const;
};

struct FittedRegressor {
  RegressionMethod method = RegressionMethod::ols;
  Eigen::MatrixXd weights;       // d_out x d_in (first-order block for gaussian_moment)
  Eigen::VectorXd intercept;     // d_out (zero for linear fits)
  Eigen::MatrixXd residual_cov;  // weighted covariance of training residuals
  int n_train = 0;
  int d_in = 0;
  int d_out = 0;
  bool converged = true;
  bool rank_fallback = false;
  std::vector<int> unconverged_outputs;
  double kkt_residual = 0.0;  // lasso: worst KKT violation over outputs

  // kernel_ridge: prediction = k(h, train_inputs) * weights^T
  Eigen::MatrixXd train_inputs;
  std::optional<Kernel> kernel;

  Eigen::VectorXd predict(const Eigen::VectorXd& h) const;
  /// Row-wise prediction, N x d_out.
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& H) const;
};

struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Weighted ridge: W minimizes sum_i w_i |y_i - W x_i|^2 + lambda0 |W|_F^2.
/// Empty weights mean all ones.
FittedRegressor fit_linear(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda0,
                           const Eigen::VectorXd& weights = {}, bool strict = false);

/// Per-output Bernoulli maximum likelihood with intercept; targets in [0, 1].
FittedRegressor fit_logistic(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const Eigen::VectorXd& weights = {}, int max_iter = 100,
                             double tol = 1e-8);

/// Weighted Bernoulli log-likelihood of one output at (beta, b), minus the
/// ridge jitter term.
double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& weights, const Eigen::VectorXd& beta, double b,
                          double jitter = 1e-8);
/// Gradient of logistic_objective over [beta; b].
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                                  double b, double jitter = 1e-8);

struct LassoResult {
  Eigen::VectorXd beta;  // original scale
  double intercept = 0.0;
  bool converged = false;
  int iterations = 0;
  double kkt_residual = 0.0;  // in the standardized problem actually solved
};

/// Coordinate descent on (1/2N) sum_i w_i (y_i - b - x_i beta)^2 + alpha |beta_s|_1 where
/// beta_s are the coefficients of the centered, unit-variance columns.
LassoResult fit_lasso_single(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                             const Eigen::VectorXd& weights = {}, int max_iter = 10000,
                             double tol = 1e-8);

/// Independent lasso per output column.
FittedRegressor fit_lasso(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha,
                          const Eigen::VectorXd& weights = {}, int max_iter = 10000,
                          double tol = 1e-8);

/// Kernel ridge with coefficients (G + lambda0 I)^{-1} Y.
FittedRegressor fit_kernel_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 const Kernel& kernel, double lambda0);

/// Linear fit of the first d_first columns of Y, predicting moment-stacked
/// outputs with the residual covariance as second-moment correction.
FittedRegressor fit_gaussian_moment(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y_first,
                                    double lambda0, const Eigen::VectorXd& weights = {});

/// Conditional mean embedding weights B = (G + lambda0 I)^{-1} G.
Eigen::MatrixXd fit_cme(const Eigen::MatrixXd& G, double lambda0);

/// Dispatch on spec.method. For gaussian_moment, Y holds moment-stacked
/// rows and only the first-order block is regressed.
FittedRegressor fit_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Y, const Eigen::VectorXd& weights = {});

}  // namespace ivpsr
