#pragma once

#include <Eigen/Dense>

namespace ivpsr {

/// Gaussian over a stacked observation window.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Reads [mu; vec(E[x x^T])] back into (mu, E[x x^T] - mu mu^T), symmetrized
/// and eigenvalue-clipped at zero. *clipped receives the clipped magnitude.
GaussianBelief gaussian_extended_from_moments(const Eigen::VectorXd& p, double* clipped = nullptr);

/// Inverse of gaussian_extended_from_moments.
Eigen::VectorXd gaussian_to_moments(const GaussianBelief& belief);

/// Conditions a joint belief over (o, f) on o = obs, where o is the leading
/// d_obs block. Sigma_oo gets jitter 1e-9 tr(Sigma_oo)/d_obs before inversion.
GaussianBelief gaussian_condition(const GaussianBelief& joint, int d_obs,
                                  const Eigen::VectorXd& obs);

/// Drops the leading d_obs block.
GaussianBelief gaussian_marginalize(const GaussianBelief& joint, int d_obs);

/// Moment-space operator for a linear-Gaussian window map y = A x + noise with
/// noise covariance C: returns (blockdiag(A, A (x) A), [0; vec(C)]).
struct MomentOperator {
  Eigen::MatrixXd W;
  Eigen::VectorXd offset;
};
MomentOperator moment_operator(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

}  // namespace ivpsr
