#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ivpsr/features.hpp"
#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/regress.hpp"
#include "ivpsr/seqdata.hpp"

namespace ivpsr {

/// Filter/predict binding. Kernel models live in kernelpsr.hpp; the tag is
/// kept here so configs can name all three.
enum class Plugin { hmm, gaussian, kernel };
/// Source matrix for a reduced-rank basis: the S1 future regression weights,
/// or the raw future/history cross moment.
enum class BasisSource { s1_weights, cross_moment };
/// first_step: mean psi at t = 0 over sequences. ergodic: mean over all t.
enum class InitialStateMode { first_step, ergodic };
/// basis_sum: b_inf = U^T 1. regression: the S1-based pseudo-inverse estimator.
enum class NormalizerMode { basis_sum, regression };

std::string to_string(Plugin p);
Plugin plugin_from_string(const std::string& s);
std::string to_string(BasisSource s);
BasisSource basis_source_from_string(const std::string& s);
std::string to_string(InitialStateMode m);
InitialStateMode initial_state_mode_from_string(const std::string& s);
std::string to_string(NormalizerMode m);
NormalizerMode normalizer_mode_from_string(const std::string& s);

struct S1Model {
  FittedRegressor reg_psi;  // h -> psi
  FittedRegressor reg_xi;   // h -> xi
};

struct S1Result {
  S1Model model;
  Eigen::MatrixXd Xhat;  // N x d_psi, denoised psi
  Eigen::MatrixXd Yhat;  // N x d_xi, denoised xi
};

S1Result s1_denoise(const TripletDataset& data, const RegressorSpec& psi_spec,
                    const RegressorSpec& xi_spec);

struct S2Result {
  Eigen::MatrixXd W;  // d_xi x d_psi
  double lambda = 0.0;
  bool used_fallback = false;
};

/// Default S2 regularizer, with T = tr(sum_t w_t x_t x_t^T) over N rows:
///  trace:        1e-4 T / d_psi
///  trace_sqrt_n: T / (d_psi sqrt(N)), i.e. lambda / N shrinking like 1/sqrt(N)
enum class LambdaRule { trace, trace_sqrt_n };
std::string to_string(LambdaRule r);
LambdaRule lambda_rule_from_string(const std::string& s);

double default_s2_lambda(const Eigen::MatrixXd& Xhat, const Eigen::VectorXd& weights = {},
                         LambdaRule rule = LambdaRule::trace);

/// W = (sum_t w_t y_t x_t^T)(sum_t w_t x_t x_t^T + lambda I)^{-1}. Unset lambda
/// selects default_s2_lambda; lambda = 0 falls back to the pseudo-inverse when
/// singular.
S2Result s2_regress(const Eigen::MatrixXd& Xhat, const Eigen::MatrixXd& Yhat,
                    std::optional<double> lambda = std::nullopt,
                    const Eigen::VectorXd& weights = {},
                    LambdaRule rule = LambdaRule::trace);

Eigen::VectorXd estimate_initial_state(const std::vector<ObservationSeq>& seqs,
                                       const FeatureSpec& spec,
                                       InitialStateMode mode = InitialStateMode::first_step);

struct TrainingInfo {
  bool s1_rank_fallback = false;
  bool s1_converged = true;
  bool s2_fallback = false;
  bool basis_rank_deficient = false;
  bool normalizer_rank_deficient = false;
  std::size_t n_triplets = 0;
};

struct PredictiveModel {
  Eigen::MatrixXd W;       // d_xi x d_psi
  Eigen::VectorXd offset;  // d_xi; nonzero only for the gaussian plugin
  Eigen::VectorXd q1;
  FeatureSpec spec;        // with the basis, if any
  Plugin plugin = Plugin::hmm;
  double lambda = 0.0;
  double clamp_eps = 1e-9;
  Eigen::VectorXd b_inf;   // hmm normalizer
  TrainingInfo info;

  int state_dim() const { return static_cast<int>(W.cols()); }
  /// Extended state p = W q + offset.
  Eigen::VectorXd extended(const Eigen::VectorXd& q) const;
  HmmOperators hmm_operators() const;
  void validate() const;
};

struct ModelConfig {
  FeatureSpec features;
  RegressorSpec s1_psi;
  RegressorSpec s1_xi;
  Plugin plugin = Plugin::hmm;
  std::optional<double> s2_lambda;
  LambdaRule s2_lambda_rule = LambdaRule::trace;  // used when s2_lambda is unset
  int rank = 0;  // 0: no projection
  BasisSource basis_source = BasisSource::s1_weights;
  InitialStateMode initial_state = InitialStateMode::first_step;
  NormalizerMode normalizer = NormalizerMode::basis_sum;
  double clamp_eps = 1e-9;
};

PredictiveModel train_model(const std::vector<ObservationSeq>& seqs, const ModelConfig& config);

/// Trains from an unprojected (possibly weighted) dataset with a given
/// unprojected initial state.
PredictiveModel train_model_from_dataset(const TripletDataset& raw, const ModelConfig& config,
                                         const Eigen::VectorXd& q1_raw);

struct StepResult {
  Eigen::VectorXd q;
  bool lost_track = false;  // q was reset to q1
};

StepResult filter_step(const PredictiveModel& model, const Eigen::VectorXd& q,
                       const Observation& obs);
Eigen::VectorXd predict_step(const PredictiveModel& model, const Eigen::VectorXd& q);

/// Discrete plugins fill `probs`; the gaussian plugin fills mean and cov.
struct ObservationPrediction {
  Eigen::VectorXd probs;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
ObservationPrediction predict_observation(const PredictiveModel& model, const Eigen::VectorXd& q);

struct FilterTrace {
  std::vector<ObservationPrediction> predictions;  // prediction of o_t before seeing it
  int lost_track_events = 0;
};

/// Filters a sequence from q1, predicting each o_t before conditioning on it.
FilterTrace run_filter(const PredictiveModel& model, const ObservationSeq& seq);

}  // namespace ivpsr
