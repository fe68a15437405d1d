#include "ivpsr/kernelpsr.hpp"

#include <cmath>
#include <stdexcept>

#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/regress.hpp"

namespace ivpsr {

namespace {

Eigen::VectorXd as_vector(const ObservationSeq& seq, std::size_t t) {
  if (seq.is_discrete()) return Eigen::VectorXd::Constant(1, seq.symbol(t));
  return seq.value(t);
}

Eigen::RowVectorXd window(const ObservationSeq& seq, std::size_t begin, int len) {
  const int d = seq.dim();
  Eigen::RowVectorXd v(d * len);
  for (int i = 0; i < len; ++i) {
    v.segment(i * d, d) = as_vector(seq, begin + static_cast<std::size_t>(i)).transpose();
  }
  return v;
}

bool usable(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Solves (A + mu I) X = rhs by LDLT, growing mu tenfold up to three times.
Eigen::MatrixXd regularized_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs, double& mu,
                                  int* retries) {
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd m = a;
    m.diagonal().array() += mu;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Eigen::MatrixXd x = ldlt.solve(rhs);
      if (usable(x) && (m * x - rhs).norm() <= 1e-6 * std::max(1.0, rhs.norm())) {
        if (retries) *retries = attempt;
        return x;
      }
    }
    if (attempt < 3) mu *= 10.0;
  }
  throw std::runtime_error("kernel solve failed after increasing the regularizer three times");
}

// The update does not preserve total mass; rescale to a unit-weight
// embedding, restarting from the initial state when the mass vanishes.
KernelState normalized(const KernelPsrModel& model, Eigen::VectorXd alpha) {
  const double total = alpha.sum();
  if (!alpha.allFinite() || !(std::abs(total) >= 1e-12)) {
    KernelState reset = model.initial;
    reset.lost_track = true;
    return reset;
  }
  return {alpha / total, true, false};
}

}  // namespace

void KernelSpec::validate() const {
  if (!(lambda0 > 0.0) || !(lambda > 0.0)) throw ParameterError("kernel regularizers must be > 0");
  if (history_len < 1 || k < 1) throw ParameterError("history_len and k must be >= 1");
  if (max_atoms < 1) throw ParameterError("max_atoms must be >= 1");
  for (const Kernel* kern : {&history_kernel, &future_kernel, &obs_kernel}) {
    if (kern->bandwidth && !(*kern->bandwidth > 0.0)) throw ParameterError("bandwidth must be > 0");
  }
}

KernelAtoms kernel_atoms(const std::vector<ObservationSeq>& seqs, const KernelSpec& spec) {
  spec.validate();
  const auto b = static_cast<std::size_t>(spec.history_len);
  const auto k = static_cast<std::size_t>(spec.k);
  std::vector<std::pair<std::size_t, std::size_t>> index;
  int d = -1;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto& seq = seqs[s];
    if (d < 0) d = seq.dim();
    if (seq.dim() != d) throw ParameterError("kernel_atoms: mixed observation dimensions");
    if (seq.length() < static_cast<std::size_t>(spec.min_seq_len)) continue;
    for (std::size_t t = b; t + k < seq.length(); ++t) index.emplace_back(s, t);
  }
  if (index.empty()) throw std::runtime_error("kernel_atoms: no valid time step");

  std::vector<std::pair<std::size_t, std::size_t>> chosen;
  const std::size_t cap = static_cast<std::size_t>(spec.max_atoms);
  if (index.size() <= cap) {
    chosen = index;
  } else {
    for (std::size_t i = 0; i < cap; ++i) chosen.push_back(index[i * index.size() / cap]);
  }

  KernelAtoms atoms;
  atoms.obs_dim = d;
  const auto n = static_cast<Eigen::Index>(chosen.size());
  atoms.history.resize(n, static_cast<Eigen::Index>(b) * d);
  atoms.future.resize(n, static_cast<Eigen::Index>(k) * d);
  atoms.shifted.resize(n, static_cast<Eigen::Index>(k) * d);
  atoms.obs.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& seq = seqs[chosen[static_cast<std::size_t>(i)].first];
    const std::size_t t = chosen[static_cast<std::size_t>(i)].second;
    atoms.history.row(i) = window(seq, t - b, spec.history_len);
    atoms.future.row(i) = window(seq, t, spec.k);
    atoms.shifted.row(i) = window(seq, t + 1, spec.k);
    atoms.obs.row(i) = as_vector(seq, t).transpose();
  }
  return atoms;
}

Eigen::MatrixXd kernel_s1_weights(const Eigen::MatrixXd& G_zz, double lambda0) {
  return fit_cme(G_zz, lambda0);
}

KernelS2 kernel_s2(const Eigen::MatrixXd& G_xx, const Eigen::MatrixXd& B,
                   const Eigen::MatrixXd& Gamma, double lambda) {
  if (G_xx.rows() != B.rows() || Gamma.cols() != B.cols()) {
    throw ParameterError("kernel_s2: inconsistent dimensions");
  }
  if (!(lambda >= 0.0)) throw ParameterError("kernel_s2: lambda must be >= 0");
  KernelS2 s2;
  const Eigen::MatrixXd m = B.transpose() * G_xx * B;
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  double mu = lambda * static_cast<double>(B.cols());
  const Eigen::MatrixXd x = regularized_solve(sym, B.transpose(), mu, &s2.retries);
  s2.lambda = mu / static_cast<double>(B.cols());
  s2.K = Gamma * x;
  return s2;
}

Eigen::MatrixXd pivoted_cholesky(const Eigen::MatrixXd& G, double tol) {
  const Eigen::Index n = G.rows();
  Eigen::VectorXd diag = G.diagonal();
  std::vector<Eigen::VectorXd> cols;
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index p = 0;
    const double top = diag.maxCoeff(&p);
    if (!(top > tol)) break;
    Eigen::VectorXd col = G.col(p);
    for (const auto& c : cols) col -= c(p) * c;
    col /= std::sqrt(top);
    cols.push_back(col);
    diag -= col.cwiseAbs2();
    diag(p) = 0.0;
  }
  Eigen::MatrixXd L(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) L.col(static_cast<Eigen::Index>(j)) = cols[j];
  return L;
}

KernelPsrModel fit_kernel_psr(const std::vector<ObservationSeq>& seqs, const KernelSpec& spec) {
  KernelPsrModel model;
  model.atoms = kernel_atoms(seqs, spec);
  model.spec = spec;
  const auto& a = model.atoms;
  model.spec.history_kernel = resolve_bandwidth(spec.history_kernel, a.history);
  model.spec.future_kernel = resolve_bandwidth(spec.future_kernel, a.future);
  model.spec.obs_kernel = resolve_bandwidth(spec.obs_kernel, a.obs);

  model.G_hh = gram(a.history, model.spec.history_kernel);
  model.G_ff = gram(a.future, model.spec.future_kernel);
  model.G_fs = cross_gram(a.future, a.shifted, model.spec.future_kernel);
  model.G_oo = gram(a.obs, model.spec.obs_kernel);
  model.B = kernel_s1_weights(model.G_hh, spec.lambda0);
  model.s2 = kernel_s2(model.G_ff, model.B, model.B, spec.lambda);
  model.L_oo = pivoted_cholesky(model.G_oo);
  model.initial.alpha = Eigen::VectorXd::Constant(a.size(), 1.0 / a.size());
  model.initial.shifted = false;
  return model;
}

Eigen::VectorXd kernel_extended(const KernelPsrModel& model, const KernelState& state) {
  if (state.alpha.size() != model.n()) throw ParameterError("kernel state size mismatch");
  const Eigen::VectorXd g = state.shifted ? Eigen::VectorXd(model.G_fs * state.alpha)
                                          : Eigen::VectorXd(model.G_ff * state.alpha);
  return model.s2.apply(g);
}

Eigen::VectorXd kbr_update_dense(const Eigen::VectorXd& extended, const Eigen::MatrixXd& G_oo,
                                 const Eigen::VectorXd& g_o, double lambda_n) {
  const Eigen::MatrixXd dg = extended.asDiagonal() * G_oo;
  Eigen::MatrixXd a = dg * dg;
  a.diagonal().array() += lambda_n;
  const Eigen::VectorXd rhs = extended.cwiseProduct(g_o);
  return dg * a.partialPivLu().solve(rhs);
}

Eigen::VectorXd kbr_update_lowrank(const Eigen::VectorXd& extended, const Eigen::MatrixXd& L,
                                   const Eigen::VectorXd& g_o, double lambda_n) {
  const Eigen::MatrixXd dl = extended.asDiagonal() * L;
  const Eigen::MatrixXd m = L.transpose() * dl;
  const Eigen::MatrixXd msym = 0.5 * (m + m.transpose());
  Eigen::MatrixXd a = msym * msym;
  const Eigen::VectorXd rhs = dl.transpose() * g_o;
  double mu = lambda_n;
  const Eigen::VectorXd x = regularized_solve(0.5 * (a + a.transpose()), rhs, mu, nullptr);
  return dl * x;
}

KernelState kbr_filter_step(const KernelPsrModel& model, const KernelState& state,
                            const Eigen::VectorXd& obs) {
  if (obs.size() != model.atoms.obs_dim) throw ParameterError("observation dimension mismatch");
  const Eigen::VectorXd beta = kernel_extended(model, state);
  const Eigen::VectorXd g_o = cross_gram(model.atoms.obs, obs.transpose(), model.spec.obs_kernel);
  return normalized(model, kbr_update_lowrank(beta, model.L_oo, g_o, model.spec.lambda * model.n()));
}

KernelState kbr_predict_step(const KernelPsrModel& model, const KernelState& state) {
  const Eigen::VectorXd beta = kernel_extended(model, state);
  const Eigen::VectorXd g_o = model.G_oo * beta;
  return normalized(model, kbr_update_lowrank(beta, model.L_oo, g_o, model.spec.lambda * model.n()));
}

Eigen::VectorXd kernel_predict_mean(const KernelPsrModel& model, const KernelState& state) {
  const int d = model.atoms.obs_dim;
  const Eigen::MatrixXd& win = state.shifted ? model.atoms.shifted : model.atoms.future;
  const double total = state.alpha.sum();
  if (!(std::abs(total) > 1e-300)) throw std::runtime_error("kernel state has zero total weight");
  return win.leftCols(d).transpose() * state.alpha / total;
}

Eigen::VectorXd kernel_predict_probs(const KernelPsrModel& model, const KernelState& state,
                                     int alphabet_size, double clamp_eps) {
  const Eigen::MatrixXd& win = state.shifted ? model.atoms.shifted : model.atoms.future;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(alphabet_size);
  for (Eigen::Index i = 0; i < win.rows(); ++i) {
    const auto x = static_cast<int>(std::lround(win(i, 0)));
    if (x < 0 || x >= alphabet_size) throw ParameterError("atom symbol outside alphabet");
    p(x) += state.alpha(i);
  }
  return clamp_probabilities(p, clamp_eps);
}

}  // namespace ivpsr
