#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ivpsr/features.hpp"
#include "ivpsr/seqdata.hpp"

namespace ivpsr {

/// Observable-operator form of a discrete predictive-state model.
struct HmmOperators {
  std::vector<Eigen::MatrixXd> B;  // one m x m operator per symbol
  Eigen::VectorXd b_inf;           // normalizer, m
  std::optional<Basis> basis;      // unset in the full-rank (unprojected) case

  int alphabet_size() const { return static_cast<int>(B.size()); }
  int dim() const { return B.empty() ? 0 : static_cast<int>(B.front().rows()); }
};

struct LayoutError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Splits W (n m x m) into per-symbol row blocks. The normalizer is 1 in the
/// full-rank case and U^T 1 with a basis.
HmmOperators hmm_operators_from_w(const Eigen::MatrixXd& W, int alphabet_size,
                                  const std::optional<Basis>& basis = std::nullopt);

/// b_inf^T = mean_h^T (U^T W_s1a P11)^+: the normalizer that maps every
/// denoised future estimate to total probability one. W_s1a is the unprojected
/// S1 weight matrix (future x history), P11 the history second moment and
/// mean_h the history mean.
Eigen::VectorXd hmm_normalizer(const Eigen::MatrixXd& W_s1a, const Basis& basis,
                               const Eigen::MatrixXd& P11, const Eigen::VectorXd& mean_h,
                               bool* rank_deficient = nullptr);
/// One-hot histories: P11 = diag(P1_hat), mean_h = P1_hat.
Eigen::VectorXd hmm_normalizer(const Eigen::MatrixXd& W_s1a, const Basis& basis,
                               const Eigen::VectorXd& P1_hat, bool* rank_deficient = nullptr);

/// Clamps entries below eps to eps and renormalizes to sum one.
Eigen::VectorXd clamp_probabilities(const Eigen::VectorXd& p, double eps = 1e-9);

struct HmmFilterResult {
  Eigen::VectorXd q;
  bool lost_track = false;
  double normalizer = 0.0;
};

/// q' = B_x q / (b_inf^T B_x q), clamped to the simplex (through U when projected). A normalizer below
/// 1e-12 in magnitude reports lost_track and leaves q' = q.
HmmFilterResult hmm_filter(const HmmOperators& ops, const Eigen::VectorXd& q, int x,
                           double clamp_eps = 1e-9);

/// Sum_x B_x q.
Eigen::VectorXd hmm_predict(const HmmOperators& ops, const Eigen::VectorXd& q);

/// Forward algorithm. Column t of `predictive` is P(o_t | o_{0..t-1}).
struct ForwardResult {
  Eigen::MatrixXd predictive;  // n_obs x L
  Eigen::MatrixXd filtered;    // n_states x L, P(s_t | o_{0..t})
  double log_likelihood = 0.0;
};
ForwardResult hmm_forward(const HmmParams& params, const std::vector<int>& symbols);

}  // namespace ivpsr

namespace ivpsr {

/// Population triplets of an HMM observed from `start` (a distribution over
/// the state that emits the oldest history symbol): one weighted row per
/// history window z with weight P(z), psi = E[psi | z], xi = E[xi | z].
/// Histories of probability zero are dropped. Discrete, unprojected specs only.
TripletDataset exact_triplets(const HmmParams& params, const FeatureSpec& spec,
                              const Eigen::VectorXd& start);

/// E[psi_0] when the first state is drawn from `start`.
Eigen::VectorXd exact_initial_state(const HmmParams& params, const FeatureSpec& spec,
                                    const Eigen::VectorXd& start);

}  // namespace ivpsr
