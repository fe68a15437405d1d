#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ivpsr/kernel.hpp"
#include "ivpsr/seqdata.hpp"

namespace ivpsr {

struct KernelSpec {
  Kernel history_kernel;
  Kernel future_kernel;
  Kernel obs_kernel;
  double lambda0 = 1e-3;  // S1 (conditional mean embedding) regularizer
  double lambda = 1e-3;   // S2 and Bayes-rule regularizer, scaled by N in solves
  int history_len = 1;
  int k = 1;
  int max_atoms = 2000;   // evenly strided subsample above this
  int min_seq_len = 1;

  void validate() const;
};

/// Training atoms: for each triplet, the raw history window, the future
/// window starting at t, the window shifted by one step, and o_t.
struct KernelAtoms {
  Eigen::MatrixXd history;  // N x (b d)
  Eigen::MatrixXd future;   // N x (k d)
  Eigen::MatrixXd shifted;  // N x (k d)
  Eigen::MatrixXd obs;      // N x d
  int obs_dim = 1;

  int size() const { return static_cast<int>(history.rows()); }
};

KernelAtoms kernel_atoms(const std::vector<ObservationSeq>& seqs, const KernelSpec& spec);

/// Weights over the future atoms (shifted == false) or the shifted-future
/// atoms (shifted == true).
struct KernelState {
  Eigen::VectorXd alpha;
  bool shifted = false;
  bool lost_track = false;  // the update degenerated and the state was reset
};

/// Gram-form S2 operator: extended weights = K g where g holds the inner
/// products of the state embedding with every future atom.
struct KernelS2 {
  Eigen::MatrixXd K;  // N x N
  double lambda = 0.0;  // effective value after any retries
  int retries = 0;

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const { return K * g; }
};

/// K = Gamma (B^T G_xx B + lambda N I)^{-1} B^T. On solve failure lambda grows
/// tenfold up to three times before throwing.
KernelS2 kernel_s2(const Eigen::MatrixXd& G_xx, const Eigen::MatrixXd& B,
                   const Eigen::MatrixXd& Gamma, double lambda);

/// Conditional mean embedding weights (G_zz + lambda0 I)^{-1} G_zz.
Eigen::MatrixXd kernel_s1_weights(const Eigen::MatrixXd& G_zz, double lambda0);

/// Pivoted Cholesky G ~ L L^T stopping when every residual diagonal is below
/// tol. Returns N x r.
Eigen::MatrixXd pivoted_cholesky(const Eigen::MatrixXd& G, double tol = 1e-12);

struct KernelPsrModel {
  KernelSpec spec;  // bandwidths resolved
  KernelAtoms atoms;
  Eigen::MatrixXd G_hh, G_ff, G_fs, G_oo;  // G_fs(i, j) = k(future_i, shifted_j)
  Eigen::MatrixXd B;         // S1 weights
  KernelS2 s2;
  Eigen::MatrixXd L_oo;      // low-rank factor of G_oo
  KernelState initial;       // uniform over the future atoms
  int n() const { return atoms.size(); }
};

KernelPsrModel fit_kernel_psr(const std::vector<ObservationSeq>& seqs, const KernelSpec& spec);

/// Extended weights for a state: K (Psi^* q).
Eigen::VectorXd kernel_extended(const KernelPsrModel& model, const KernelState& state);

/// Bayes-rule update a = D G ((D G)^2 + lambda N I)^{-1} D g_o with
/// D = diag(extended weights), evaluated through the low-rank factor of G_oo and
/// rescaled to unit total weight.
KernelState kbr_filter_step(const KernelPsrModel& model, const KernelState& state,
                            const Eigen::VectorXd& obs);
/// As kbr_filter_step with g_o replaced by G_oo times the extended weights.
KernelState kbr_predict_step(const KernelPsrModel& model, const KernelState& state);

/// The same update by the literal dense N x N solve.
Eigen::VectorXd kbr_update_dense(const Eigen::VectorXd& extended, const Eigen::MatrixXd& G_oo,
                                 const Eigen::VectorXd& g_o, double lambda_n);
/// Low-rank evaluation of the same update with G_oo = L L^T.
Eigen::VectorXd kbr_update_lowrank(const Eigen::VectorXd& extended, const Eigen::MatrixXd& L,
                                   const Eigen::VectorXd& g_o, double lambda_n);

/// Mean of o_t under the state: sum_s a_s o_s / sum_s a_s over the first
/// observation of each atom's window.
Eigen::VectorXd kernel_predict_mean(const KernelPsrModel& model, const KernelState& state);
/// Discrete alphabet: P(o_t = x) = sum over atoms whose window starts with x,
/// clamped and renormalized.
Eigen::VectorXd kernel_predict_probs(const KernelPsrModel& model, const KernelState& state,
                                     int alphabet_size, double clamp_eps = 1e-9);

}  // namespace ivpsr
