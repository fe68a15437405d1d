#include "ivpsr/em.hpp"

#include <cmath>
#include <limits>

#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/rng.hpp"

namespace ivpsr {

namespace {

struct Counts {
  Eigen::VectorXd initial;
  Eigen::MatrixXd transition;
  Eigen::MatrixXd emission;
  double log_likelihood = 0.0;
};

// Scaled forward-backward on plain arrays; matrices are column-major with
// T(i, j) = P(s' = i | s = j) and O(x, j) = P(x | s = j).
struct Workspace {
  std::vector<double> alpha, beta, scale, e;
};

void accumulate(const HmmParams& p, const std::vector<int>& obs, Counts& c, Workspace& ws) {
  const int m = p.n_states();
  const std::size_t L = obs.size();
  const double* T = p.transition.data();
  const double* O = p.emission.data();
  const int n = p.n_obs();
  ws.alpha.assign(L * m, 0.0);
  ws.beta.assign(L * m, 0.0);
  ws.scale.assign(L, 0.0);
  ws.e.assign(m, 0.0);
  double* alpha = ws.alpha.data();
  double* beta = ws.beta.data();

  for (std::size_t t = 0; t < L; ++t) {
    const int x = obs[t];
    double* a = alpha + t * m;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
      double prior = 0.0;
      if (t == 0) {
        prior = p.initial(i);
      } else {
        const double* prev = alpha + (t - 1) * m;
        for (int j = 0; j < m; ++j) prior += T[i + j * m] * prev[j];
      }
      a[i] = O[x + i * n] * prior;
      z += a[i];
    }
    for (int i = 0; i < m; ++i) a[i] /= z;
    ws.scale[t] = z;
    c.log_likelihood += std::log(z);
  }
  for (int i = 0; i < m; ++i) beta[(L - 1) * m + i] = 1.0;
  for (std::size_t t = L - 1; t > 0; --t) {
    const int x = obs[t];
    for (int i = 0; i < m; ++i) ws.e[i] = O[x + i * n] * beta[t * m + i];
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += T[i + j * m] * ws.e[i];
      beta[(t - 1) * m + j] = acc / ws.scale[t];
    }
  }
  for (std::size_t t = 0; t < L; ++t) {
    const int x = obs[t];
    for (int i = 0; i < m; ++i) {
      const double gamma = alpha[t * m + i] * beta[t * m + i];
      if (t == 0) c.initial(i) += gamma;
      c.emission(x, i) += gamma;
    }
    if (t + 1 < L) {
      // xi(i, j) = P(s_{t+1} = i, s_t = j | o)
      const int y = obs[t + 1];
      for (int i = 0; i < m; ++i) ws.e[i] = O[y + i * n] * beta[(t + 1) * m + i] / ws.scale[t + 1];
      for (int j = 0; j < m; ++j) {
        const double aj = alpha[t * m + j];
        for (int i = 0; i < m; ++i) c.transition(i, j) += ws.e[i] * T[i + j * m] * aj;
      }
    }
  }
}

Eigen::MatrixXd normalize_columns(Eigen::MatrixXd a, const Eigen::MatrixXd& fallback) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double s = a.col(j).sum();
    if (s > 0.0) {
      a.col(j) /= s;
    } else {
      a.col(j) = fallback.col(j);
    }
  }
  return a;
}

HmmParams random_start(int m, int n, Rng& rng) {
  const auto simplex = [&rng](int size) {
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = rng.exponential();
    return Eigen::VectorXd(v / v.sum());
  };
  HmmParams p;
  p.transition.resize(m, m);
  p.emission.resize(n, m);
  for (int j = 0; j < m; ++j) {
    p.transition.col(j) = simplex(m);
    p.emission.col(j) = simplex(n);
  }
  p.initial = simplex(m);
  return p;
}

}  // namespace

double hmm_log_likelihood(const HmmParams& params, const std::vector<ObservationSeq>& seqs) {
  double ll = 0.0;
  for (const auto& s : seqs) ll += hmm_forward(params, s.symbols()).log_likelihood;
  return ll;
}

EmResult fit_em_hmm(const std::vector<ObservationSeq>& seqs, const EmOptions& options) {
  if (options.n_states < 1 || options.n_obs < 1) throw ParameterError("fit_em_hmm: sizes");
  if (options.restarts < 1 || options.n_iters < 1) throw ParameterError("fit_em_hmm: iterations");
  std::size_t used = 0;
  for (const auto& s : seqs) {
    if (!s.is_discrete()) throw ParameterError("fit_em_hmm: discrete sequences required");
    for (int x : s.symbols()) {
      if (x >= options.n_obs) throw ParameterError("fit_em_hmm: symbol outside alphabet");
    }
    if (s.length() > 0) ++used;
  }
  if (used == 0) throw ParameterError("fit_em_hmm: no observations");

  const int m = options.n_states;
  const int n = options.n_obs;
  EmResult best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(options.seed, static_cast<std::uint64_t>(r));
    HmmParams p = random_start(m, n, rng);
    std::vector<double> trace;
    double worst = 0.0;
    Workspace ws;
    for (int it = 0; it < options.n_iters; ++it) {
      Counts c{Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(n, m)};
      for (const auto& s : seqs) {
        if (s.length() > 0) accumulate(p, s.symbols(), c, ws);
      }
      // c.log_likelihood belongs to p, the parameters before this update.
      if (!trace.empty()) {
        const double prev = trace.back();
        const double drop = (prev - c.log_likelihood) / std::max(1.0, std::abs(prev));
        worst = std::max(worst, drop);
      }
      trace.push_back(c.log_likelihood);
      HmmParams next;
      next.initial = c.initial / c.initial.sum();
      next.transition = normalize_columns(c.transition, p.transition);
      next.emission = normalize_columns(c.emission, p.emission);
      p = next;
      if (trace.size() >= 2) {
        const double gain = (trace.back() - trace[trace.size() - 2]) /
                            std::max(1.0, std::abs(trace.back()));
        if (gain >= 0.0 && gain < options.tol) break;
      }
    }
    const double final_ll = hmm_log_likelihood(p, seqs);
    if (!trace.empty()) {
      const double drop = (trace.back() - final_ll) / std::max(1.0, std::abs(trace.back()));
      worst = std::max(worst, drop);
    }
    trace.push_back(final_ll);
    best.worst_decrease = std::max(best.worst_decrease, worst);
    if (final_ll > best_ll) {
      best_ll = final_ll;
      best.params = p;
      best.log_likelihood = trace;
      best.best_restart = r;
    }
  }
  return best;
}

}  // namespace ivpsr
