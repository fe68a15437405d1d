#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ivpsr/twostage.hpp"

namespace ivpsr {

struct BoundInputs {
  double c = 1.0;          // almost-sure norm bound
  double lambda1_x = 1.0;  // top eigenvalue of Sigma_x
  double lambda1_y = 1.0;
  double tr_x = 1.0;
  double tr_y = 1.0;
  double norm_yx = 0.0;    // |Sigma_yx|
  double n = 1.0;          // sample count
  double delta = 0.1;

  void validate() const;
};

struct BoundResult {
  double value = 0.0;
  std::map<std::string, double> intermediates;
};

/// sqrt(2 v t / N) + r t / (3 N) with t = max(2.6, 2 log(4k / (delta v))),
/// r = c^2 + |Sigma_yx|, v = c^2 max(l1y, l1x) + |Sigma_xy|^2, k = c^2 (tr_x + tr_y).
BoundResult zeta_xy(const BoundInputs& in);
/// Same form with r = c^2 + l1x, v = c^2 l1x + l1x^2, k = c^2 tr_x.
BoundResult zeta_xx(const BoundInputs& in);
/// scale sqrt(d_z / N) log((d_x + d_y) / delta).
BoundResult eta_ols(double d_x, double d_y, double d_z, double n, double delta, double scale = 1.0);

/// Bounded samplers with exactly known second moments.
///  basis_uniform: x, y independent, each uniform on {+-e_i} in R^d.
///  point_mass:    x = y = e_1 always.
enum class SamplerKind { basis_uniform, point_mass };
std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct SamplerSpec {
  SamplerKind kind = SamplerKind::basis_uniform;
  int dim = 5;

  /// Exact population constants for the pair (x, y).
  BoundInputs population(double n, double delta) const;
};

struct CoverageResult {
  int trials = 0;
  int violations = 0;
  double rate = 0.0;
  double std_error = 0.0;
  double wilson_upper = 0.0;  // 95% upper Wilson bound
  double threshold = 0.0;     // delta/2 + 3 sqrt(p0 (1 - p0) / trials), p0 = delta/2
  double zeta_xx = 0.0;
  double zeta_xy = 0.0;
  bool within_threshold() const { return rate <= threshold; }
};

/// Fraction of trials in which |Sigma_hat_xx - Sigma_xx| >= zeta_xx or
/// |Sigma_hat_yx - Sigma_yx| >= zeta_xy (operator norms by power iteration).
CoverageResult check_cov_coverage(const SamplerSpec& sampler, int n, double delta, int trials,
                                  std::uint64_t seed);

/// One-step prediction error of the spectral HMM pipeline against the exact
/// forward algorithm on a fixed random HMM.
struct ConvergenceSpec {
  int n_states = 3;
  int n_obs = 4;
  std::uint64_t system_seed = 1;
  double stickiness = 0.5;
  int train_seq_len = 22;   // b + k + 20 triplets per sequence
  int test_seqs = 20;
  int test_len = 50;
  std::optional<double> s2_lambda;
  // Default when s2_lambda is unset. The 1e-4 trace rule barely regularizes
  // the weak third singular direction of these systems.
  LambdaRule lambda_rule = LambdaRule::trace_sqrt_n;
};

struct ConvergenceCell {
  int n = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double error = 0.0;  // mean L1 distance over held-out steps
  bool ok = true;
  std::string failure;
};

struct ConvergenceRow {
  int n = 0;
  double median_error = 0.0;
};

ConvergenceCell convergence_cell(const ConvergenceSpec& spec, int n, std::uint64_t seed,
                                 std::optional<double> lambda);
std::vector<ConvergenceCell> convergence_grid(const ConvergenceSpec& spec,
                                              const std::vector<int>& ns,
                                              const std::vector<std::uint64_t>& seeds);
std::vector<ConvergenceRow> convergence_curve(const std::vector<ConvergenceCell>& cells);
/// Error of the model trained on exact population moments (the N = infinity limit).
double exact_moment_error(const ConvergenceSpec& spec);
/// Fixed N, varying S2 lambda: median error over seeds per lambda.
std::vector<std::pair<double, double>> lambda_sweep(const ConvergenceSpec& spec, int n,
                                                    const std::vector<double>& lambdas,
                                                    const std::vector<std::uint64_t>& seeds);

double median(std::vector<double> values);

}  // namespace ivpsr
