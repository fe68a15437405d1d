#include "ivpsr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ivpsr/seqdata.hpp"

namespace ivpsr {

std::string to_string(KernelKind kind) { return kind == KernelKind::rbf ? "rbf" : "delta"; }

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "rbf") return KernelKind::rbf;
  if (name == "delta") return KernelKind::delta;
  throw ParameterError("unknown kernel '" + name + "'");
}

double Kernel::operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (kind == KernelKind::delta) return x == y ? 1.0 : 0.0;
  if (!bandwidth) throw ParameterError("rbf kernel bandwidth not resolved");
  const double s = *bandwidth;
  return std::exp(-(x - y).squaredNorm() / (2.0 * s * s));
}

double median_heuristic(const Eigen::MatrixXd& points, bool* fallback) {
  const Eigen::Index n = points.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) dists.push_back((points.row(i) - points.row(j)).norm());
  }
  double median = 0.0;
  if (!dists.empty()) {
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    median = *mid;
  }
  const bool degenerate = !(median > 0.0);
  if (fallback) *fallback = degenerate;
  return degenerate ? 1.0 : median;
}

Kernel resolve_bandwidth(const Kernel& kernel, const Eigen::MatrixXd& points, bool* fallback) {
  Kernel out = kernel;
  if (fallback) *fallback = false;
  if (out.kind == KernelKind::rbf) {
    if (out.bandwidth) {
      if (!(*out.bandwidth > 0.0)) throw ParameterError("rbf bandwidth must be positive");
    } else {
      out.bandwidth = median_heuristic(points, fallback);
    }
  }
  return out;
}

Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Kernel& kernel) {
  if (a.cols() != b.cols()) throw ParameterError("cross_gram: point dimensions differ");
  Eigen::MatrixXd g(a.rows(), b.rows());
  if (kernel.kind == KernelKind::delta) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.rows(); ++j) g(i, j) = a.row(i) == b.row(j) ? 1.0 : 0.0;
    }
    return g;
  }
  if (!kernel.bandwidth) throw ParameterError("rbf kernel bandwidth not resolved");
  const double s = *kernel.bandwidth;
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  g.noalias() = -2.0 * a * b.transpose();
  g.colwise() += na;
  g.rowwise() += nb.transpose();
  return (-g.cwiseMax(0.0) / (2.0 * s * s)).array().exp().matrix();
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& points, const Kernel& kernel) {
  if (points.rows() == 0) throw ParameterError("gram: empty point set");
  Eigen::MatrixXd g = cross_gram(points, points, kernel);
  g = 0.5 * (g + g.transpose()).eval();
  if (kernel.kind == KernelKind::rbf) g.diagonal().setOnes();
  return g;
}

}  // namespace ivpsr
