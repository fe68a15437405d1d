#include "ivpsr/gaussian.hpp"

#include <cmath>

#include "ivpsr/features.hpp"
#include "ivpsr/linalg.hpp"
#include "ivpsr/seqdata.hpp"

namespace ivpsr {

GaussianBelief gaussian_extended_from_moments(const Eigen::VectorXd& p, double* clipped) {
  const auto c = static_cast<double>(p.size());
  const auto d = static_cast<Eigen::Index>(std::llround((std::sqrt(1.0 + 4.0 * c) - 1.0) / 2.0));
  if (moment_dim(static_cast<int>(d)) != p.size()) {
    throw ParameterError("moment vector length is not d + d^2");
  }
  GaussianBelief b;
  b.mean = p.head(d);
  const Eigen::Map<const Eigen::MatrixXd> second(p.data() + d, d, d);
  b.cov = clip_psd(second - b.mean * b.mean.transpose(), clipped);
  return b;
}

Eigen::VectorXd gaussian_to_moments(const GaussianBelief& belief) {
  const Eigen::Index d = belief.mean.size();
  Eigen::VectorXd p(d + d * d);
  p.head(d) = belief.mean;
  const Eigen::MatrixXd second = belief.cov + belief.mean * belief.mean.transpose();
  p.tail(d * d) = Eigen::Map<const Eigen::VectorXd>(second.data(), d * d);
  return p;
}

GaussianBelief gaussian_condition(const GaussianBelief& joint, int d_obs,
                                  const Eigen::VectorXd& obs) {
  const Eigen::Index d = joint.mean.size();
  if (d_obs < 0 || d_obs > d) throw ParameterError("gaussian_condition: bad observation block");
  if (obs.size() != d_obs) throw ParameterError("gaussian_condition: observation dimension");
  if (d_obs == 0) return joint;
  const Eigen::Index f = d - d_obs;
  Eigen::MatrixXd soo = joint.cov.topLeftCorner(d_obs, d_obs);
  const double jitter = 1e-9 * soo.trace() / d_obs;
  soo.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(soo);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("gaussian_condition: observation covariance is singular");
  }
  const Eigen::MatrixXd sfo = joint.cov.bottomLeftCorner(f, d_obs);
  const Eigen::MatrixXd gain = llt.solve(sfo.transpose()).transpose();  // f x d_obs
  GaussianBelief out;
  out.mean = joint.mean.tail(f) + gain * (obs - joint.mean.head(d_obs));
  out.cov = symmetrize(joint.cov.bottomRightCorner(f, f) - gain * sfo.transpose());
  return out;
}

GaussianBelief gaussian_marginalize(const GaussianBelief& joint, int d_obs) {
  const Eigen::Index d = joint.mean.size();
  if (d_obs < 0 || d_obs > d) throw ParameterError("gaussian_marginalize: bad observation block");
  const Eigen::Index f = d - d_obs;
  return {joint.mean.tail(f), joint.cov.bottomRightCorner(f, f)};
}

MomentOperator moment_operator(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  if (C.rows() != A.rows() || C.cols() != A.rows()) {
    throw ParameterError("moment_operator: noise covariance dimension");
  }
  const Eigen::Index r = A.rows();
  const Eigen::Index c = A.cols();
  MomentOperator op;
  op.W = Eigen::MatrixXd::Zero(r + r * r, c + c * c);
  op.W.topLeftCorner(r, c) = A;
  op.W.bottomRightCorner(r * r, c * c) = kron(A, A);
  op.offset = Eigen::VectorXd::Zero(r + r * r);
  op.offset.tail(r * r) = Eigen::Map<const Eigen::VectorXd>(C.data(), r * r);
  return op;
}

}  // namespace ivpsr
