#include "ivpsr/twostage.hpp"

#include <cmath>

#include "ivpsr/gaussian.hpp"
#include "ivpsr/linalg.hpp"

namespace ivpsr {

namespace {

template <typename E>
E enum_from(const std::string& s, std::initializer_list<E> values, const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw ParameterError(std::string("unknown ") + what + " '" + s + "'");
}

Eigen::VectorXd resolve_weights(const Eigen::VectorXd& w, Eigen::Index n) {
  if (w.size() == 0) return Eigen::VectorXd::Ones(n);
  if (w.size() != n) throw ParameterError("weights length differs from row count");
  return w;
}

// Marginal over o_t from a raw joint future distribution over n^k symbols.
Eigen::MatrixXd first_symbol_marginalizer(int n, int k) {
  const int total = static_cast<int>(std::lround(std::pow(n, k)));
  const int block = total / n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, total);
  for (int idx = 0; idx < total; ++idx) m(idx / block, idx) = 1.0;
  return m;
}

// Weighted mean over rows of (second moment block - first moment outer).
Eigen::MatrixXd mean_residual_cov(const Eigen::MatrixXd& stacked, int d, const Eigen::VectorXd& w) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < stacked.rows(); ++i) {
    const Eigen::VectorXd mu = stacked.row(i).head(d).transpose();
    const Eigen::VectorXd second = stacked.row(i).tail(d * d).transpose();
    acc += w(i) * (Eigen::Map<const Eigen::MatrixXd>(second.data(), d, d) - mu * mu.transpose());
  }
  return symmetrize(acc / w.sum());
}

}  // namespace

std::string to_string(Plugin p) {
  switch (p) {
    case Plugin::hmm: return "hmm";
    case Plugin::gaussian: return "gaussian";
    case Plugin::kernel: return "kernel";
  }
  return "unknown";
}
Plugin plugin_from_string(const std::string& s) {
  return enum_from(s, {Plugin::hmm, Plugin::gaussian, Plugin::kernel}, "plugin");
}
std::string to_string(BasisSource s) {
  return s == BasisSource::s1_weights ? "s1_weights" : "cross_moment";
}
BasisSource basis_source_from_string(const std::string& s) {
  return enum_from(s, {BasisSource::s1_weights, BasisSource::cross_moment}, "basis source");
}
std::string to_string(InitialStateMode m) {
  return m == InitialStateMode::first_step ? "first_step" : "ergodic";
}
InitialStateMode initial_state_mode_from_string(const std::string& s) {
  return enum_from(s, {InitialStateMode::first_step, InitialStateMode::ergodic},
                   "initial state mode");
}
std::string to_string(NormalizerMode m) {
  return m == NormalizerMode::basis_sum ? "basis_sum" : "regression";
}
NormalizerMode normalizer_mode_from_string(const std::string& s) {
  return enum_from(s, {NormalizerMode::basis_sum, NormalizerMode::regression}, "normalizer");
}

S1Result s1_denoise(const TripletDataset& data, const RegressorSpec& psi_spec,
                    const RegressorSpec& xi_spec) {
  if (data.size() == 0) throw EmptyDatasetError("s1_denoise: empty dataset");
  const Eigen::VectorXd w = resolve_weights(data.weights, data.H.rows());
  S1Result r;
  r.model.reg_psi = fit_regressor(psi_spec, data.H, data.Psi, w);
  r.model.reg_xi = fit_regressor(xi_spec, data.H, data.Xi, w);
  r.Xhat = r.model.reg_psi.predict_rows(data.H);
  r.Yhat = r.model.reg_xi.predict_rows(data.H);
  return r;
}

std::string to_string(LambdaRule r) {
  return r == LambdaRule::trace ? "trace" : "trace_sqrt_n";
}

LambdaRule lambda_rule_from_string(const std::string& s) {
  return enum_from(s, {LambdaRule::trace, LambdaRule::trace_sqrt_n}, "lambda rule");
}

double default_s2_lambda(const Eigen::MatrixXd& Xhat, const Eigen::VectorXd& weights,
                         LambdaRule rule) {
  const Eigen::VectorXd w = resolve_weights(weights, Xhat.rows());
  double tr = 0.0;
  for (Eigen::Index i = 0; i < Xhat.rows(); ++i) tr += w(i) * Xhat.row(i).squaredNorm();
  const double d = static_cast<double>(Xhat.cols());
  if (rule == LambdaRule::trace) return 1e-4 * tr / d;
  return tr / (d * std::sqrt(static_cast<double>(Xhat.rows())));
}

S2Result s2_regress(const Eigen::MatrixXd& Xhat, const Eigen::MatrixXd& Yhat,
                    std::optional<double> lambda, const Eigen::VectorXd& weights,
                    LambdaRule rule) {
  if (Xhat.rows() < 1) throw EmptyDatasetError("s2_regress: no rows");
  if (Xhat.rows() != Yhat.rows()) throw ParameterError("s2_regress: row counts differ");
  const Eigen::VectorXd w = resolve_weights(weights, Xhat.rows());
  S2Result r;
  r.lambda = lambda ? *lambda : default_s2_lambda(Xhat, w, rule);
  if (r.lambda < 0.0) throw ParameterError("s2_regress: lambda must be >= 0");
  const Eigen::MatrixXd xtw = Xhat.transpose() * w.asDiagonal();
  const Eigen::MatrixXd cxx = symmetrize(xtw * Xhat);
  const Eigen::MatrixXd cxy = xtw * Yhat;
  r.W = solve_psd(cxx, cxy, r.lambda, &r.used_fallback).transpose();
  return r;
}

Eigen::VectorXd estimate_initial_state(const std::vector<ObservationSeq>& seqs,
                                       const FeatureSpec& spec, InitialStateMode mode) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec.future_dim());
  std::size_t count = 0;
  const auto k = static_cast<std::size_t>(spec.k);
  for (const auto& seq : seqs) {
    if (seq.length() < k || seq.length() < static_cast<std::size_t>(spec.min_seq_len)) continue;
    if (mode == InitialStateMode::first_step) {
      sum += future_features(seq, 0, spec);
      ++count;
    } else {
      for (std::size_t t = 0; t + k <= seq.length(); ++t, ++count) {
        sum += future_features(seq, t, spec);
      }
    }
  }
  if (count == 0) throw EmptyDatasetError("estimate_initial_state: no usable sequence");
  return sum / static_cast<double>(count);
}

Eigen::VectorXd PredictiveModel::extended(const Eigen::VectorXd& q) const {
  if (q.size() != W.cols()) throw ParameterError("state dimension mismatch");
  Eigen::VectorXd p = W * q;
  if (offset.size() == p.size()) p += offset;
  return p;
}

HmmOperators PredictiveModel::hmm_operators() const {
  HmmOperators ops = hmm_operators_from_w(W, spec.alphabet_size, spec.projection);
  if (b_inf.size() == ops.dim()) ops.b_inf = b_inf;
  return ops;
}

void PredictiveModel::validate() const {
  spec.validate();
  if (W.cols() != spec.future_dim() || W.rows() != spec.extended_dim()) {
    throw ParameterError("PredictiveModel: W dimensions disagree with the feature spec");
  }
  if (q1.size() != W.cols() || !q1.allFinite()) throw ParameterError("PredictiveModel: bad q1");
  if (offset.size() != 0 && offset.size() != W.rows()) {
    throw ParameterError("PredictiveModel: offset dimension");
  }
  if (plugin == Plugin::hmm && !spec.discrete()) {
    throw ParameterError("hmm plugin needs a discrete feature kind");
  }
  if (plugin == Plugin::gaussian && !spec.moments()) {
    throw ParameterError("gaussian plugin needs moment_stacked_window features");
  }
  if (plugin == Plugin::kernel) throw ParameterError("kernel models are built by kernelpsr");
}

PredictiveModel train_model(const std::vector<ObservationSeq>& seqs, const ModelConfig& config) {
  if (config.features.projection) {
    throw ParameterError("train_model: the feature spec must not carry a basis");
  }
  const TripletDataset raw = extract_triplets(seqs, config.features);
  const Eigen::VectorXd q1 =
      estimate_initial_state(seqs, config.features, config.initial_state);
  return train_model_from_dataset(raw, config, q1);
}

PredictiveModel train_model_from_dataset(const TripletDataset& raw, const ModelConfig& config,
                                         const Eigen::VectorXd& q1_raw) {
  const FeatureSpec& spec = raw.spec;
  if (spec.projection) throw ParameterError("train_model: dataset must be unprojected");
  if (config.plugin == Plugin::kernel) throw ParameterError("kernel models are built by kernelpsr");
  if (config.plugin == Plugin::hmm && !spec.discrete()) {
    throw ParameterError("hmm plugin needs a discrete feature kind");
  }
  if (config.plugin == Plugin::gaussian && !spec.moments()) {
    throw ParameterError("gaussian plugin needs moment_stacked_window features");
  }
  if (q1_raw.size() != spec.future_dim()) throw ParameterError("q1 dimension mismatch");
  const Eigen::VectorXd w = resolve_weights(raw.weights, raw.H.rows());

  PredictiveModel model;
  model.plugin = config.plugin;
  model.clamp_eps = config.clamp_eps;
  model.info.n_triplets = raw.size();

  S1Result s1 = s1_denoise(raw, config.s1_psi, config.s1_xi);
  model.info.s1_rank_fallback = s1.model.reg_psi.rank_fallback || s1.model.reg_xi.rank_fallback;
  model.info.s1_converged = s1.model.reg_psi.converged && s1.model.reg_xi.converged;

  Eigen::MatrixXd Xhat = s1.Xhat;
  Eigen::MatrixXd Yhat = s1.Yhat;
  model.spec = spec;
  model.q1 = q1_raw;
  if (config.rank > 0) {
    const int d_raw = spec.raw_state_dim();
    if (config.rank > d_raw) throw ParameterError("rank exceeds the future feature dimension");
    Basis basis;
    if (config.basis_source == BasisSource::s1_weights) {
      basis = learn_basis(Eigen::MatrixXd(s1.model.reg_psi.weights.topRows(d_raw)), config.rank);
    } else {
      basis = learn_basis(raw, config.rank);
    }
    model.info.basis_rank_deficient = basis.rank_deficient();
    const ProjectionMaps maps = projection_maps(spec, basis);
    Xhat = s1.Xhat * maps.psi.transpose();
    Yhat = s1.Yhat * maps.xi.transpose();
    model.q1 = maps.psi * q1_raw;
    model.spec.projection = basis;
  }

  if (config.plugin == Plugin::hmm) {
    const S2Result s2 = s2_regress(Xhat, Yhat, config.s2_lambda, w, config.s2_lambda_rule);
    model.W = s2.W;
    model.lambda = s2.lambda;
    model.info.s2_fallback = s2.used_fallback;
    model.offset = Eigen::VectorXd::Zero(model.W.rows());
    if (model.spec.projection) {
      const Basis& basis = *model.spec.projection;
      if (config.normalizer == NormalizerMode::regression) {
        const auto& reg = s1.model.reg_psi;
        if (reg.method != RegressionMethod::ols && reg.method != RegressionMethod::ridge) {
          throw ParameterError("regression normalizer needs a linear S1 future regression");
        }
        const Eigen::MatrixXd htw = raw.H.transpose() * w.asDiagonal();
        const Eigen::MatrixXd p11 = htw * raw.H / w.sum();
        const Eigen::VectorXd mean_h = htw.rowwise().sum() / w.sum();
        model.b_inf = hmm_normalizer(reg.weights, basis, p11, mean_h,
                                     &model.info.normalizer_rank_deficient);
      } else {
        model.b_inf = basis.U.transpose() * Eigen::VectorXd::Ones(basis.U.rows());
      }
    } else {
      model.b_inf = Eigen::VectorXd::Ones(model.W.cols());
    }
  } else {
    // Moment-space S2: first-order operator A by ridge, then the affine
    // second-moment map implied by the S1 residual covariances.
    const int dx = model.spec.state_dim();
    const int dy = model.spec.extended_state_dim();
    const S2Result s2 = s2_regress(Xhat.leftCols(dx), Yhat.leftCols(dy), config.s2_lambda, w,
                                   config.s2_lambda_rule);
    const Eigen::MatrixXd rx = mean_residual_cov(Xhat, dx, w);
    const Eigen::MatrixXd ry = mean_residual_cov(Yhat, dy, w);
    const Eigen::MatrixXd c = symmetrize(ry - s2.W * rx * s2.W.transpose());
    const MomentOperator op = moment_operator(s2.W, c);
    model.W = op.W;
    model.offset = op.offset;
    model.lambda = s2.lambda;
    model.info.s2_fallback = s2.used_fallback;
  }
  model.validate();
  return model;
}

StepResult filter_step(const PredictiveModel& model, const Eigen::VectorXd& q,
                       const Observation& obs) {
  StepResult r;
  if (model.plugin == Plugin::hmm) {
    if (!std::holds_alternative<int>(obs)) throw ParameterError("hmm plugin needs a symbol");
    const HmmFilterResult f =
        hmm_filter(model.hmm_operators(), q, std::get<int>(obs), model.clamp_eps);
    r.lost_track = f.lost_track;
    r.q = f.lost_track ? model.q1 : f.q;
    return r;
  }
  if (model.plugin != Plugin::gaussian) throw ParameterError("unsupported plugin");
  if (!std::holds_alternative<Eigen::VectorXd>(obs)) {
    throw ParameterError("gaussian plugin needs a real observation");
  }
  const GaussianBelief ext = gaussian_extended_from_moments(model.extended(q));
  try {
    r.q = gaussian_to_moments(gaussian_condition(ext, model.spec.obs_dim, std::get<Eigen::VectorXd>(obs)));
  } catch (const std::runtime_error&) {
    r.lost_track = true;
    r.q = model.q1;
  }
  return r;
}

Eigen::VectorXd predict_step(const PredictiveModel& model, const Eigen::VectorXd& q) {
  if (model.plugin == Plugin::hmm) {
    Eigen::VectorXd out = hmm_predict(model.hmm_operators(), q);
    if (!model.spec.projection) out = clamp_probabilities(out, model.clamp_eps);
    return out;
  }
  const GaussianBelief ext = gaussian_extended_from_moments(model.extended(q));
  return gaussian_to_moments(gaussian_marginalize(ext, model.spec.obs_dim));
}

ObservationPrediction predict_observation(const PredictiveModel& model, const Eigen::VectorXd& q) {
  ObservationPrediction out;
  if (model.plugin == Plugin::hmm) {
    const Eigen::MatrixXd marg = first_symbol_marginalizer(model.spec.alphabet_size, model.spec.k);
    const Eigen::VectorXd raw = model.spec.projection ? Eigen::VectorXd(model.spec.projection->U * q) : q;
    out.probs = clamp_probabilities(marg * raw, model.clamp_eps);
    return out;
  }
  const GaussianBelief ext = gaussian_extended_from_moments(model.extended(q));
  const int d = model.spec.obs_dim;
  out.mean = ext.mean.head(d);
  out.cov = ext.cov.topLeftCorner(d, d);
  return out;
}

FilterTrace run_filter(const PredictiveModel& model, const ObservationSeq& seq) {
  FilterTrace trace;
  trace.predictions.reserve(seq.length());
  Eigen::VectorXd q = model.q1;
  if (model.plugin == Plugin::hmm) {
    const HmmOperators ops = model.hmm_operators();
    for (std::size_t t = 0; t < seq.length(); ++t) {
      trace.predictions.push_back(predict_observation(model, q));
      const HmmFilterResult f = hmm_filter(ops, q, seq.symbol(t), model.clamp_eps);
      if (f.lost_track) {
        ++trace.lost_track_events;
        q = model.q1;
      } else {
        q = f.q;
      }
    }
    return trace;
  }
  for (std::size_t t = 0; t < seq.length(); ++t) {
    trace.predictions.push_back(predict_observation(model, q));
    const StepResult s = filter_step(model, q, seq.at(t));
    if (s.lost_track) ++trace.lost_track_events;
    q = s.q;
  }
  return trace;
}

}  // namespace ivpsr
