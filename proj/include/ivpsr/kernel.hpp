#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace ivpsr {

enum class KernelKind { rbf, delta };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// k(x, y) = exp(-|x - y|^2 / (2 sigma^2)) for rbf, [x == y] for delta.
struct Kernel {
  KernelKind kind = KernelKind::rbf;
  std::optional<double> bandwidth;  // unset: median heuristic at fit time

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
};

/// Median pairwise Euclidean distance between rows. Returns 1.0 and sets
/// *fallback when the median is zero.
double median_heuristic(const Eigen::MatrixXd& points, bool* fallback = nullptr);

/// Copy of `kernel` with the bandwidth fixed (median heuristic if unset).
Kernel resolve_bandwidth(const Kernel& kernel, const Eigen::MatrixXd& points,
                         bool* fallback = nullptr);

/// Gram matrix over the rows of `points`. The kernel must have its bandwidth
/// resolved when rbf.
Eigen::MatrixXd gram(const Eigen::MatrixXd& points, const Kernel& kernel);

/// G(i, j) = k(a_i, b_j) over rows.
Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Kernel& kernel);

}  // namespace ivpsr
