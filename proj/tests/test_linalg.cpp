#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ivpsr/linalg.hpp"
#include "oracles.hpp"

using namespace ivpsr;

TEST_CASE("pseudo_inverse satisfies the Penrose conditions on a rank-deficient matrix") {
  Eigen::MatrixXd a(3, 3);
  a << 1, 2, 3, 2, 4, 6, 1, 0, 1;
  const Eigen::MatrixXd p = pseudo_inverse(a);
  CHECK((a * p * a - a).norm() < 1e-10);
  CHECK((p * a * p - p).norm() < 1e-10);
  CHECK(numerical_rank(a) == 2);
}

TEST_CASE("solve_psd with ridge and pseudo-inverse fallback") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 0, 0, 0;
  const Eigen::MatrixXd b = Eigen::MatrixXd::Ones(2, 1);
  bool fallback = false;
  const Eigen::MatrixXd x = solve_psd(a, b, 0.0, &fallback);
  CHECK(fallback);
  CHECK(x(0, 0) == doctest::Approx(0.5));
  CHECK(x(1, 0) == doctest::Approx(0.0));
  fallback = false;
  const Eigen::MatrixXd y = solve_psd(a, b, 1.0, &fallback);
  CHECK_FALSE(fallback);
  CHECK(y(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("kron matches the entrywise definition") {
  Eigen::MatrixXd a(2, 2), b(2, 3);
  a << 1, 2, 3, 4;
  b << 0, 1, 2, 3, 4, 5;
  const Eigen::MatrixXd k = kron(a, b);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) CHECK(k(i * 2 + r, j * 3 + c) == a(i, j) * b(r, c));
}

TEST_CASE("clip_psd removes negative eigenvalues") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;  // eigenvalues 3, -1
  double clipped = 0;
  const Eigen::MatrixXd c = clip_psd(a, &clipped);
  CHECK(clipped == doctest::Approx(1.0));
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("operator_norm and spectral_radius") {
  Eigen::MatrixXd a(2, 2);
  a << 3, 0, 4, 5;
  const double sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
  CHECK(operator_norm(a) == doctest::Approx(sv).epsilon(1e-8));
  Eigen::MatrixXd r(2, 2);
  r << 0, -0.5, 0.5, 0;  // eigenvalues +-0.5i
  CHECK(spectral_radius(r) == doctest::Approx(0.5));
}

TEST_CASE("psd_sqrt_factor reproduces the matrix") {
  Eigen::MatrixXd a(3, 3);
  a << 2, 1, 0, 1, 2, 0, 0, 0, 0;
  const Eigen::MatrixXd l = psd_sqrt_factor(a);
  CHECK((l * l.transpose() - a).norm() < 1e-12);
}

TEST_CASE("stationary_covariance against the Lyapunov iteration oracle") {
  Eigen::MatrixXd t(2, 2), q(2, 2);
  t << 0.8, 0.3, -0.2, 0.5;
  q << 1.0, 0.2, 0.2, 0.5;
  CHECK((stationary_covariance(t, q) - oracle::lyapunov(t, q)).norm() < 1e-10);
}
