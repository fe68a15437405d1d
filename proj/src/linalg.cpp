#include "ivpsr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace ivpsr {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = rel_tol * s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) ++rank;
  }
  return rank;
}

Eigen::MatrixXd solve_psd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ridge,
                          bool* used_fallback, double rel_tol) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw std::invalid_argument("solve_psd: dimension mismatch");
  }
  if (used_fallback) *used_fallback = false;
  Eigen::MatrixXd m = symmetrize(a);
  m.diagonal().array() += ridge;
  if (ridge <= 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double top = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
    if (ev.size() == 0 || ev.minCoeff() <= rel_tol * top) {
      if (used_fallback) *used_fallback = true;
      return pseudo_inverse(m, rel_tol) * b;
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    if (used_fallback) *used_fallback = true;
    return pseudo_inverse(m, rel_tol) * b;
  }
  return ldlt.solve(b);
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& a, double* clipped) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(a));
  Eigen::VectorXd ev = eig.eigenvalues();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      worst = std::max(worst, -ev(i));
      ev(i) = 0.0;
    }
  }
  if (clipped) *clipped = worst;
  if (worst == 0.0) return symmetrize(a);
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return symmetrize(v * ev.asDiagonal() * v.transpose());
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double operator_norm(const Eigen::MatrixXd& a, double tol, int max_iter) {
  if (a.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = a.transpose() * a;
  // deterministic, non-degenerate start vector
  Eigen::VectorXd v(gram.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + 3.0 * i);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = w.dot(gram * w);
    v = w;
    if (it > 0 && std::abs(next - estimate) <= tol * std::abs(next)) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return std::sqrt(std::max(estimate, 0.0));
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd psd_sqrt_factor(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return a;
  if (a.isZero(0.0)) return Eigen::MatrixXd::Zero(a.rows(), a.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(a));
  Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& transition,
                                      const Eigen::MatrixXd& noise_cov, double tol,
                                      int max_iter) {
  if (spectral_radius(transition) >= 1.0) {
    throw std::invalid_argument("stationary_covariance: transition is not stable");
  }
  Eigen::MatrixXd sigma = noise_cov;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd next = transition * sigma * transition.transpose() + noise_cov;
    const double change = (next - sigma).norm();
    sigma = symmetrize(next);
    if (change <= tol * std::max(1.0, sigma.norm())) break;
  }
  return sigma;
}

}  // namespace ivpsr
