#include "ivpsr/hmm_ops.hpp"

#include <cmath>
#include <string>

#include "ivpsr/linalg.hpp"

namespace ivpsr {

HmmOperators hmm_operators_from_w(const Eigen::MatrixXd& W, int alphabet_size,
                                  const std::optional<Basis>& basis) {
  if (alphabet_size < 1) throw LayoutError("alphabet size must be >= 1");
  const Eigen::Index m = W.cols();
  if (W.rows() != alphabet_size * m) {
    throw LayoutError("W has " + std::to_string(W.rows()) + " rows; expected " +
                      std::to_string(alphabet_size) + " symbol blocks of " + std::to_string(m));
  }
  if (basis && basis->dim() != m) throw LayoutError("basis dimension differs from W columns");
  HmmOperators ops;
  ops.basis = basis;
  for (int x = 0; x < alphabet_size; ++x) ops.B.push_back(W.middleRows(x * m, m));
  if (basis) {
    ops.b_inf = basis->U.transpose() * Eigen::VectorXd::Ones(basis->U.rows());
  } else {
    ops.b_inf = Eigen::VectorXd::Ones(m);
  }
  return ops;
}

Eigen::VectorXd hmm_normalizer(const Eigen::MatrixXd& W_s1a, const Basis& basis,
                               const Eigen::MatrixXd& P11, const Eigen::VectorXd& mean_h,
                               bool* rank_deficient) {
  if (W_s1a.rows() != basis.U.rows()) throw LayoutError("hmm_normalizer: basis rows differ");
  const Eigen::MatrixXd a = basis.U.transpose() * W_s1a * P11;  // m x d_h
  if (rank_deficient) *rank_deficient = numerical_rank(a) < basis.dim();
  return (mean_h.transpose() * pseudo_inverse(a)).transpose();
}

Eigen::VectorXd hmm_normalizer(const Eigen::MatrixXd& W_s1a, const Basis& basis,
                               const Eigen::VectorXd& P1_hat, bool* rank_deficient) {
  return hmm_normalizer(W_s1a, basis, P1_hat.asDiagonal().toDenseMatrix(), P1_hat,
                        rank_deficient);
}

Eigen::VectorXd clamp_probabilities(const Eigen::VectorXd& p, double eps) {
  Eigen::VectorXd out = p.cwiseMax(eps);
  return out / out.sum();
}

HmmFilterResult hmm_filter(const HmmOperators& ops, const Eigen::VectorXd& q, int x,
                           double clamp_eps) {
  if (x < 0 || x >= ops.alphabet_size()) throw ParameterError("symbol outside alphabet");
  HmmFilterResult r;
  const Eigen::VectorXd next = ops.B[static_cast<std::size_t>(x)] * q;
  r.normalizer = ops.b_inf.dot(next);
  if (!(std::abs(r.normalizer) >= 1e-12)) {
    r.lost_track = true;
    r.q = q;
    return r;
  }
  r.q = next / r.normalizer;
  if (!ops.basis) {
    r.q = clamp_probabilities(r.q, clamp_eps);
  } else {
    // Clamp the lifted distribution and project back; a no-op whenever U q is
    // already a valid distribution.
    const Eigen::MatrixXd& U = ops.basis->U;
    r.q = U.transpose() * clamp_probabilities(U * r.q, clamp_eps);
  }
  return r;
}

Eigen::VectorXd hmm_predict(const HmmOperators& ops, const Eigen::VectorXd& q) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ops.dim());
  for (const auto& b : ops.B) out += b * q;
  return out;
}

ForwardResult hmm_forward(const HmmParams& params, const std::vector<int>& symbols) {
  ForwardResult r;
  const Eigen::Index L = static_cast<Eigen::Index>(symbols.size());
  r.predictive.resize(params.n_obs(), L);
  r.filtered.resize(params.n_states(), L);
  Eigen::VectorXd prior = params.initial;
  for (Eigen::Index t = 0; t < L; ++t) {
    r.predictive.col(t) = params.emission * prior;
    const int x = symbols[static_cast<std::size_t>(t)];
    Eigen::VectorXd post = params.emission.row(x).transpose().cwiseProduct(prior);
    const double z = post.sum();
    r.log_likelihood += std::log(z);
    post /= z;
    r.filtered.col(t) = post;
    prior = params.transition * post;
  }
  return r;
}

}  // namespace ivpsr

namespace ivpsr {

namespace {

// Joint distribution over all windows of `len` symbols: entry idx is the
// unnormalized probability of the window (first symbol most significant)
// given the unnormalized state distribution v of the state emitting it.
Eigen::VectorXd window_probs(const HmmParams& p, const Eigen::VectorXd& v, int len) {
  const int n = p.n_obs();
  std::vector<Eigen::VectorXd> level{v};
  for (int step = 0; step < len; ++step) {
    std::vector<Eigen::VectorXd> next;
    next.reserve(level.size() * static_cast<std::size_t>(n));
    for (const auto& u : level) {
      for (int x = 0; x < n; ++x) {
        next.push_back(p.transition * p.emission.row(x).transpose().cwiseProduct(u));
      }
    }
    level = std::move(next);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(level.size()));
  for (std::size_t i = 0; i < level.size(); ++i) out(static_cast<Eigen::Index>(i)) = level[i].sum();
  return out;
}

std::vector<int> digits(int index, int len, int n) {
  std::vector<int> d(static_cast<std::size_t>(len));
  for (int i = len - 1; i >= 0; --i) {
    d[static_cast<std::size_t>(i)] = index % n;
    index /= n;
  }
  return d;
}

}  // namespace

TripletDataset exact_triplets(const HmmParams& params, const FeatureSpec& spec,
                              const Eigen::VectorXd& start) {
  params.validate();
  spec.validate();
  if (!spec.discrete() || spec.projection) {
    throw ParameterError("exact_triplets: discrete unprojected spec required");
  }
  if (spec.alphabet_size != params.n_obs()) throw ParameterError("exact_triplets: alphabet size");
  const int n = params.n_obs();
  const int b = spec.history_len;
  const int k = spec.k;
  int n_hist = 1;
  for (int i = 0; i < b; ++i) n_hist *= n;

  std::vector<Eigen::VectorXd> hs, psis, xis;
  std::vector<double> ws;
  for (int z = 0; z < n_hist; ++z) {
    const std::vector<int> sym = digits(z, b, n);
    Eigen::VectorXd v = start;
    for (int x : sym) v = params.transition * params.emission.row(x).transpose().cwiseProduct(v);
    const double pz = v.sum();
    if (!(pz > 0.0)) continue;
    const Eigen::VectorXd xi = window_probs(params, v, k + 1) / pz;
    // psi marginal: sum xi over the last symbol.
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(xi.size() / n);
    for (Eigen::Index i = 0; i < xi.size(); ++i) psi(i / n) += xi(i);
    std::vector<int> padded = sym;
    padded.push_back(0);
    const ObservationSeq seq = ObservationSeq::discrete("z", padded);
    hs.push_back(history_features(seq, static_cast<std::size_t>(b), spec));
    psis.push_back(psi);
    xis.push_back(xi);
    ws.push_back(pz);
  }
  if (hs.empty()) throw EmptyDatasetError("exact_triplets: every history has probability zero");

  TripletDataset data;
  data.spec = spec;
  const auto rows = static_cast<Eigen::Index>(hs.size());
  data.H.resize(rows, spec.history_dim());
  data.Psi.resize(rows, spec.future_dim());
  data.Xi.resize(rows, spec.extended_dim());
  data.weights.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto u = static_cast<std::size_t>(i);
    data.H.row(i) = hs[u].transpose();
    data.Psi.row(i) = psis[u].transpose();
    data.Xi.row(i) = xis[u].transpose();
    data.weights(i) = ws[u];
    data.seq_index.push_back(-1);
    data.time.push_back(b);
  }
  return data;
}

Eigen::VectorXd exact_initial_state(const HmmParams& params, const FeatureSpec& spec,
                                    const Eigen::VectorXd& start) {
  if (!spec.discrete() || spec.projection) {
    throw ParameterError("exact_initial_state: discrete unprojected spec required");
  }
  return window_probs(params, start, spec.k);
}

}  // namespace ivpsr
