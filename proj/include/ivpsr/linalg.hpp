#pragma once

#include <Eigen/Dense>

namespace ivpsr {

/// Truncated-SVD pseudo-inverse; singular values below rel_tol * sigma_max
/// are dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

/// Numerical rank with the same truncation rule as pseudo_inverse.
int numerical_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-10);

/// Solves (A + ridge I) X = B for symmetric PSD A. When ridge is zero and A
/// is singular to rel_tol, falls back to the pseudo-inverse and sets
/// *used_fallback.
Eigen::MatrixXd solve_psd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ridge,
                          bool* used_fallback = nullptr, double rel_tol = 1e-10);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Symmetrizes and clips negative eigenvalues to zero. Returns the largest
/// clipped magnitude through *clipped.
Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& a, double* clipped = nullptr);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Largest singular value by power iteration on A^T A, stopping at a
/// relative change below tol.
double operator_norm(const Eigen::MatrixXd& a, double tol = 1e-8, int max_iter = 10000);

/// Spectral radius (largest eigenvalue magnitude) of a square matrix.
double spectral_radius(const Eigen::MatrixXd& a);

/// Symmetric square root factor L with L L^T = a for a PSD matrix (zero
/// directions stay exactly zero).
Eigen::MatrixXd psd_sqrt_factor(const Eigen::MatrixXd& a);

/// Fixed point of S = T S T^T + Q by iteration; requires spectral_radius(T) < 1.
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& transition,
                                      const Eigen::MatrixXd& noise_cov, double tol = 1e-14,
                                      int max_iter = 100000);

}  // namespace ivpsr
