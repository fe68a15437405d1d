#include "ivpsr/regress.hpp"

#include <algorithm>
#include <cmath>

#include "ivpsr/features.hpp"
#include "ivpsr/linalg.hpp"
#include "ivpsr/seqdata.hpp"

namespace ivpsr {

namespace {

Eigen::VectorXd resolve_weights(const Eigen::VectorXd& weights, Eigen::Index n) {
  if (weights.size() == 0) return Eigen::VectorXd::Ones(n);
  if (weights.size() != n) throw ParameterError("weights length differs from sample count");
  if ((weights.array() < 0.0).any()) throw ParameterError("weights must be nonnegative");
  if (!(weights.sum() > 0.0)) throw ParameterError("weights sum to zero");
  return weights;
}

void check_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() < 1) throw ParameterError("regression needs at least one sample");
  if (X.rows() != Y.rows()) throw ParameterError("X and Y sample counts differ");
}

Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& residuals, const Eigen::VectorXd& w) {
  Eigen::MatrixXd r = residuals.transpose() * w.asDiagonal() * residuals / w.sum();
  return symmetrize(r);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct LogisticFit {
  Eigen::VectorXd beta;
  double b = 0.0;
  bool converged = false;
};

LogisticFit logistic_newton(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& w, int max_iter, double tol) {
  const Eigen::Index d = X.cols();
  const double jitter = 1e-8;
  Eigen::MatrixXd Xa(X.rows(), d + 1);
  Xa << X, Eigen::VectorXd::Ones(X.rows());

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  double obj = logistic_objective(X, y, w, theta.head(d), theta(d), jitter);
  LogisticFit fit;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd z = Xa * theta;
    Eigen::VectorXd mu(z.size()), s(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      mu(i) = sigmoid(z(i));
      s(i) = w(i) * mu(i) * (1.0 - mu(i));
    }
    Eigen::VectorXd grad = Xa.transpose() * (w.asDiagonal() * (y - mu)) - jitter * theta;
    Eigen::MatrixXd hess = Xa.transpose() * s.asDiagonal() * Xa;
    hess.diagonal().array() += jitter;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);

    double t = 1.0;
    double next = obj;
    Eigen::VectorXd candidate = theta;
    for (int ls = 0; ls < 50; ++ls) {
      candidate = theta + t * step;
      next = logistic_objective(X, y, w, candidate.head(d), candidate(d), jitter);
      if (next >= obj - 1e-12 * std::abs(obj)) break;
      t *= 0.5;
    }
    if (!(next >= obj - 1e-12 * std::abs(obj)) || !std::isfinite(next)) break;
    const double change = (candidate - theta).cwiseAbs().maxCoeff();
    theta = candidate;
    obj = next;
    if (change < tol || grad.norm() <= 1e-10 * w.sum()) {
      fit.converged = true;
      break;
    }
  }
  fit.beta = theta.head(d);
  fit.b = theta(d);
  return fit;
}

}  // namespace

std::string to_string(RegressionMethod method) {
  switch (method) {
    case RegressionMethod::ols: return "ols";
    case RegressionMethod::ridge: return "ridge";
    case RegressionMethod::logistic: return "logistic";
    case RegressionMethod::lasso: return "lasso";
    case RegressionMethod::kernel_ridge: return "kernel_ridge";
    case RegressionMethod::gaussian_moment: return "gaussian_moment";
  }
  return "unknown";
}

RegressionMethod regression_method_from_string(const std::string& name) {
  for (auto m : {RegressionMethod::ols, RegressionMethod::ridge, RegressionMethod::logistic,
                 RegressionMethod::lasso, RegressionMethod::kernel_ridge,
                 RegressionMethod::gaussian_moment}) {
    if (to_string(m) == name) return m;
  }
  throw ParameterError("unknown regression method '" + name + "'");
}

void RegressorSpec::validate() const {
  if (lambda0 < 0.0) throw ParameterError("lambda0 must be >= 0");
  if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
  if (!(tol > 0.0)) throw ParameterError("tol must be > 0");
  if (max_iter < 0) throw ParameterError("max_iter must be >= 0");
  if (method == RegressionMethod::kernel_ridge && !(lambda0 > 0.0)) {
    throw ParameterError("kernel_ridge needs lambda0 > 0");
  }
}

Eigen::VectorXd FittedRegressor::predict(const Eigen::VectorXd& h) const {
  if (h.size() != d_in) {
    throw ParameterError("predict: input dimension " + std::to_string(h.size()) + ", expected " +
                         std::to_string(d_in));
  }
  return predict_rows(h.transpose()).row(0).transpose();
}

Eigen::MatrixXd FittedRegressor::predict_rows(const Eigen::MatrixXd& H) const {
  if (H.cols() != d_in) throw ParameterError("predict: input dimension mismatch");
  switch (method) {
    case RegressionMethod::kernel_ridge:
      return cross_gram(H, train_inputs, *kernel) * weights.transpose();
    case RegressionMethod::logistic: {
      Eigen::MatrixXd z = H * weights.transpose();
      z.rowwise() += intercept.transpose();
      return z.unaryExpr([](double v) { return sigmoid(v); });
    }
    case RegressionMethod::gaussian_moment: {
      Eigen::MatrixXd mu = H * weights.transpose();
      mu.rowwise() += intercept.transpose();
      const Eigen::Index d = mu.cols();
      Eigen::MatrixXd out(H.rows(), d + d * d);
      for (Eigen::Index i = 0; i < H.rows(); ++i) {
        const Eigen::VectorXd m = mu.row(i).transpose();
        Eigen::MatrixXd second = m * m.transpose() + residual_cov;
        out.row(i).head(d) = m.transpose();
        out.row(i).tail(d * d) = Eigen::Map<const Eigen::RowVectorXd>(second.data(), d * d);
      }
      return out;
    }
    default: {
      Eigen::MatrixXd out = H * weights.transpose();
      out.rowwise() += intercept.transpose();
      return out;
    }
  }
}

FittedRegressor fit_linear(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda0,
                           const Eigen::VectorXd& weights, bool strict) {
  check_design(X, Y);
  if (lambda0 < 0.0) throw ParameterError("lambda0 must be >= 0");
  const Eigen::VectorXd w = resolve_weights(weights, X.rows());
  const Eigen::MatrixXd xtw = X.transpose() * w.asDiagonal();
  const Eigen::MatrixXd gram = symmetrize(xtw * X);
  const Eigen::MatrixXd cross = xtw * Y;

  FittedRegressor reg;
  reg.method = lambda0 > 0.0 ? RegressionMethod::ridge : RegressionMethod::ols;
  bool fallback = false;
  reg.weights = solve_psd(gram, cross, lambda0, &fallback).transpose();
  if (fallback && strict) throw ParameterError("fit_linear: rank-deficient design with lambda0 = 0");
  reg.rank_fallback = fallback;
  reg.intercept = Eigen::VectorXd::Zero(Y.cols());
  reg.n_train = static_cast<int>(X.rows());
  reg.d_in = static_cast<int>(X.cols());
  reg.d_out = static_cast<int>(Y.cols());
  reg.residual_cov = residual_covariance(Y - X * reg.weights.transpose(), w);
  return reg;
}

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& weights, const Eigen::VectorXd& beta, double b,
                          double jitter) {
  const Eigen::VectorXd w = resolve_weights(weights, X.rows());
  const Eigen::VectorXd z = (X * beta).array() + b;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) ll += w(i) * (y(i) * z(i) - softplus(z(i)));
  return ll - 0.5 * jitter * (beta.squaredNorm() + b * b);
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& weights, const Eigen::VectorXd& beta,
                                  double b, double jitter) {
  const Eigen::VectorXd w = resolve_weights(weights, X.rows());
  const Eigen::VectorXd z = (X * beta).array() + b;
  Eigen::VectorXd r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = w(i) * (y(i) - sigmoid(z(i)));
  Eigen::VectorXd g(beta.size() + 1);
  g.head(beta.size()) = X.transpose() * r - jitter * beta;
  g(beta.size()) = r.sum() - jitter * b;
  return g;
}

FittedRegressor fit_logistic(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const Eigen::VectorXd& weights, int max_iter, double tol) {
  check_design(X, Y);
  if ((Y.array() < 0.0).any() || (Y.array() > 1.0).any()) {
    throw ParameterError("fit_logistic: targets must lie in [0, 1]");
  }
  const Eigen::VectorXd w = resolve_weights(weights, X.rows());
  FittedRegressor reg;
  reg.method = RegressionMethod::logistic;
  reg.weights.resize(Y.cols(), X.cols());
  reg.intercept.resize(Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const LogisticFit fit = logistic_newton(X, Y.col(j), w, max_iter, tol);
    reg.weights.row(j) = fit.beta.transpose();
    reg.intercept(j) = fit.b;
    if (!fit.converged) {
      reg.converged = false;
      reg.unconverged_outputs.push_back(static_cast<int>(j));
    }
  }
  reg.n_train = static_cast<int>(X.rows());
  reg.d_in = static_cast<int>(X.cols());
  reg.d_out = static_cast<int>(Y.cols());
  reg.residual_cov = residual_covariance(Y - reg.predict_rows(X), w);
  return reg;
}

LassoResult fit_lasso_single(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                             const Eigen::VectorXd& weights, int max_iter, double tol) {
  if (X.rows() < 1 || X.rows() != y.size()) throw ParameterError("fit_lasso: bad dimensions");
  if (alpha < 0.0) throw ParameterError("fit_lasso: alpha must be >= 0");
  const Eigen::VectorXd w = resolve_weights(weights, X.rows());
  const double wsum = w.sum();
  const Eigen::Index d = X.cols();

  const Eigen::RowVectorXd xmean = (w.transpose() * X) / wsum;
  const double ymean = w.dot(y) / wsum;
  Eigen::MatrixXd xs = X.rowwise() - xmean;
  Eigen::VectorXd scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = w.dot(xs.col(j).cwiseAbs2()) / wsum;
    scale(j) = var > 1e-24 ? std::sqrt(var) : 0.0;
    if (scale(j) > 0.0) xs.col(j) /= scale(j);
  }
  const Eigen::VectorXd yc = y.array() - ymean;

  // Covariance updates: gradient g = c - G beta with G = Xs^T W Xs / N, c = Xs^T W y / N.
  const Eigen::MatrixXd xtw = xs.transpose() * w.asDiagonal();
  const Eigen::MatrixXd G = xtw * xs / wsum;
  const Eigen::VectorXd c = xtw * yc / wsum;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad = c;

  LassoResult result;
  for (int iter = 0; iter < max_iter; ++iter) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (scale(j) == 0.0) continue;
      const double gjj = G(j, j);
      const double rho = grad(j) + gjj * beta(j);
      const double updated = std::copysign(std::max(std::abs(rho) - alpha, 0.0), rho) / gjj;
      const double delta = updated - beta(j);
      if (delta != 0.0) {
        grad -= G.col(j) * delta;
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    result.iterations = iter + 1;
    if (max_change < tol) {
      result.converged = true;
      break;
    }
  }

  grad = c - G * beta;
  double kkt = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (scale(j) == 0.0) continue;
    const double v = beta(j) == 0.0 ? std::max(std::abs(grad(j)) - alpha, 0.0)
                                    : std::abs(grad(j) - alpha * (beta(j) > 0 ? 1.0 : -1.0));
    kkt = std::max(kkt, v);
  }
  result.kkt_residual = kkt;
  result.beta = Eigen::VectorXd::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (scale(j) > 0.0) result.beta(j) = beta(j) / scale(j);
  }
  result.intercept = ymean - xmean.dot(result.beta);
  return result;
}

FittedRegressor fit_lasso(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha,
                          const Eigen::VectorXd& weights, int max_iter, double tol) {
  check_design(X, Y);
  const Eigen::VectorXd w = resolve_weights(weights, X.rows());
  FittedRegressor reg;
  reg.method = RegressionMethod::lasso;
  reg.weights.resize(Y.cols(), X.cols());
  reg.intercept.resize(Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const LassoResult r = fit_lasso_single(X, Y.col(j), alpha, w, max_iter, tol);
    reg.weights.row(j) = r.beta.transpose();
    reg.intercept(j) = r.intercept;
    reg.kkt_residual = std::max(reg.kkt_residual, r.kkt_residual);
    if (!r.converged) {
      reg.converged = false;
      reg.unconverged_outputs.push_back(static_cast<int>(j));
    }
  }
  reg.n_train = static_cast<int>(X.rows());
  reg.d_in = static_cast<int>(X.cols());
  reg.d_out = static_cast<int>(Y.cols());
  reg.residual_cov = residual_covariance(Y - reg.predict_rows(X), w);
  return reg;
}

FittedRegressor fit_kernel_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 const Kernel& kernel, double lambda0) {
  check_design(X, Y);
  if (!(lambda0 > 0.0)) throw ParameterError("kernel_ridge needs lambda0 > 0");
  FittedRegressor reg;
  reg.method = RegressionMethod::kernel_ridge;
  reg.kernel = resolve_bandwidth(kernel, X);
  reg.train_inputs = X;
  const Eigen::MatrixXd G = gram(X, *reg.kernel);
  reg.weights = solve_psd(G, Y, lambda0).transpose();
  reg.intercept = Eigen::VectorXd::Zero(Y.cols());
  reg.n_train = static_cast<int>(X.rows());
  reg.d_in = static_cast<int>(X.cols());
  reg.d_out = static_cast<int>(Y.cols());
  reg.residual_cov =
      residual_covariance(Y - G * reg.weights.transpose(), Eigen::VectorXd::Ones(X.rows()));
  return reg;
}

FittedRegressor fit_gaussian_moment(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y_first,
                                    double lambda0, const Eigen::VectorXd& weights) {
  FittedRegressor reg = fit_linear(X, Y_first, lambda0, weights);
  reg.method = RegressionMethod::gaussian_moment;
  const Eigen::Index d = Y_first.cols();
  reg.d_out = static_cast<int>(d + d * d);
  return reg;
}

Eigen::MatrixXd fit_cme(const Eigen::MatrixXd& G, double lambda0) {
  if (!(lambda0 > 0.0)) throw ParameterError("fit_cme: lambda0 must be > 0");
  if (G.rows() != G.cols()) throw ParameterError("fit_cme: Gram matrix must be square");
  Eigen::MatrixXd a = G;
  a.diagonal().array() += lambda0;
  return a.ldlt().solve(G);
}

FittedRegressor fit_regressor(const RegressorSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Y, const Eigen::VectorXd& weights) {
  spec.validate();
  switch (spec.method) {
    case RegressionMethod::ols:
      return fit_linear(X, Y, 0.0, weights, spec.strict);
    case RegressionMethod::ridge:
      return fit_linear(X, Y, spec.lambda0, weights, spec.strict);
    case RegressionMethod::logistic:
      return fit_logistic(X, Y, weights, spec.max_iter > 0 ? spec.max_iter : 100, spec.tol);
    case RegressionMethod::lasso:
      return fit_lasso(X, Y, spec.alpha, weights, spec.max_iter > 0 ? spec.max_iter : 10000,
                       spec.tol);
    case RegressionMethod::kernel_ridge:
      if (weights.size() != 0 && (weights.array() != 1.0).any()) {
        throw ParameterError("kernel_ridge does not support sample weights");
      }
      return fit_kernel_ridge(X, Y, spec.kernel, spec.lambda0);
    case RegressionMethod::gaussian_moment: {
      const auto c = static_cast<double>(Y.cols());
      const auto d = static_cast<Eigen::Index>(std::llround((std::sqrt(1.0 + 4.0 * c) - 1.0) / 2.0));
      if (moment_dim(static_cast<int>(d)) != Y.cols()) {
        throw ParameterError("gaussian_moment: targets are not moment-stacked");
      }
      return fit_gaussian_moment(X, Y.leftCols(d), spec.lambda0, weights);
    }
  }
  throw ParameterError("unknown regression method");
}

}  // namespace ivpsr
