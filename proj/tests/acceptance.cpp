// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "ivpsr/em.hpp"
#include "ivpsr/experiments.hpp"
#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/kernel.hpp"
#include "ivpsr/kernelpsr.hpp"
#include "ivpsr/regress.hpp"
#include "ivpsr/rng.hpp"
#include "ivpsr/serialization.hpp"
#include "ivpsr/theorybounds.hpp"
#include "ivpsr/twostage.hpp"
#include "oracles.hpp"

using namespace ivpsr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome exact_moments() {
  double worst = 0.0;
  int lost = 0;
  for (int i = 0; i < 20; ++i) {
    const int m = 2 + i % 3;      // 2..4 states
    const int n = 2 + (i / 3) % 4;  // 2..5 symbols
    const HmmParams hmm = random_hmm(m, n, 100 + static_cast<std::uint64_t>(i));
    int k = 1;
    while (std::pow(n, k) < m) ++k;
    FeatureSpec spec;
    spec.kind = FeatureKind::discrete_joint_history;
    spec.alphabet_size = n;
    spec.k = k;
    spec.history_len = k;
    const Eigen::VectorXd pi = oracle::stationary(hmm.transition);
    ModelConfig cfg;
    cfg.features = spec;
    cfg.s2_lambda = 0.0;
    if (std::pow(n, k) > m) cfg.rank = m;
    const PredictiveModel model =
        train_model_from_dataset(exact_triplets(hmm, spec, pi), cfg, exact_initial_state(hmm, spec, hmm.initial));
    const ObservationSeq seq = sample_hmm(hmm, 100, 1, 500 + static_cast<std::uint64_t>(i)).front();
    const FilterTrace trace = run_filter(model, seq);
    lost += trace.lost_track_events;
    const auto truth = oracle::forward_predictive(hmm, seq.symbols());
    for (std::size_t t = 0; t < seq.length(); ++t)
      for (int x = 0; x < n; ++x)
        worst = std::max(worst, std::abs(trace.predictions[t].probs(x) - truth[t][static_cast<std::size_t>(x)]));
  }
  return {worst <= 1e-8 && lost == 0, "max |p - forward| = " + num(worst) + ", lost-track events " + std::to_string(lost)};
}

// ---------------------------------------------------------------- 2

Outcome consistency() {
  const ConvergenceSpec spec;
  const std::vector<int> ns{500, 1000, 2000, 4000, 8000};
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  const auto curve = convergence_curve(convergence_grid(spec, ns, seeds));
  bool decreasing = curve.size() == ns.size();
  std::string trace;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    trace += (i ? " " : "") + std::to_string(curve[i].n) + ":" + num(curve[i].median_error);
    if (i > 0 && !(curve[i].median_error < curve[i - 1].median_error)) decreasing = false;
  }
  const double last = curve.empty() ? 1.0 : curve.back().median_error;
  return {decreasing && last <= 0.05, "median L1 " + trace};
}

// ---------------------------------------------------------------- 3

Outcome bkt() {
  BktConfig cfg;
  const BktResult r = run_bkt(cfg);
  const std::size_t spec = r.index_of("Spec-HMM"), feat = r.index_of("Feat-HMM"),
                    lr = r.index_of("LR-HMM"), em = r.index_of("EM");
  const double m_spec = r.mean_mae(spec), m_feat = r.mean_mae(feat), m_lr = r.mean_mae(lr), m_em = r.mean_mae(em);
  const double wins = r.win_rate(lr, spec);
  const bool ok = r.splits.size() == 200 && m_lr < m_spec && wins >= 0.6 && m_feat < m_spec &&
                  std::abs(m_lr - m_em) <= 0.02 && r.mean_seconds(spec) < r.mean_seconds(em) &&
                  r.mean_seconds(lr) < r.mean_seconds(em);
  return {ok, "MAE spec " + num(m_spec) + " feat " + num(m_feat) + " lr " + num(m_lr) + " em " + num(m_em) +
                  " oracle " + num(r.oracle_mae.empty() ? NAN : median(r.oracle_mae)) + ", lr wins " + num(wins) +
                  ", seconds spec " + num(r.mean_seconds(spec)) + " lr " + num(r.mean_seconds(lr)) + " em " +
                  num(r.mean_seconds(em)) + ", splits " + std::to_string(r.splits.size())};
}

// ---------------------------------------------------------------- 4

Outcome lasso() {
  const LassoReport r = run_lasso_subsystems(LassoConfig{});
  const bool ok = r.mean_lasso_block_mass > r.mean_cov_block_mass && r.mean_lasso_block_mass >= 0.7;
  return {ok, "block mass lasso " + num(r.mean_lasso_block_mass) + " covariance " + num(r.mean_cov_block_mass) +
                  ", lasso noise mass " + num(r.mean_lasso_noise_mass)};
}

// ---------------------------------------------------------------- 5

Outcome kernel() {
  // Delta kernel against the discrete pipeline with matching regularizers.
  HmmParams hmm = random_hmm(2, 2, 11);
  const std::vector<ObservationSeq> train = sample_hmm(hmm, 502, 1, 12);
  KernelSpec ks;
  ks.history_kernel = ks.future_kernel = ks.obs_kernel = Kernel{KernelKind::delta, std::nullopt};
  ks.lambda0 = 1e-3;
  ks.lambda = 1e-9;
  const KernelPsrModel km = fit_kernel_psr(train, ks);

  FeatureSpec spec;
  spec.kind = FeatureKind::discrete_indicator;
  spec.alphabet_size = 2;
  spec.min_seq_len = 1;
  ModelConfig cfg;
  cfg.features = spec;
  cfg.s1_psi.method = cfg.s1_xi.method = RegressionMethod::ridge;
  cfg.s1_psi.lambda0 = cfg.s1_xi.lambda0 = ks.lambda0;
  const TripletDataset raw = extract_triplets(train, spec);
  cfg.s2_lambda = ks.lambda * static_cast<double>(raw.size());
  const PredictiveModel dm = train_model_from_dataset(raw, cfg, raw.Psi.colwise().mean().transpose());

  const ObservationSeq test = sample_hmm(hmm, 100, 1, 13).front();
  const FilterTrace dt = run_filter(dm, test);
  KernelState state = km.initial;
  double worst = 0.0;
  for (std::size_t t = 0; t < test.length(); ++t) {
    const Eigen::VectorXd p = kernel_predict_probs(km, state, 2);
    worst = std::max(worst, (p - dt.predictions[t].probs).cwiseAbs().maxCoeff());
    state = kbr_filter_step(km, state, Eigen::VectorXd::Constant(1, test.symbol(t)));
  }

  // RBF kernel on a scalar linear-Gaussian system.
  LdsParams lds;
  lds.transition = Eigen::MatrixXd::Constant(1, 1, 0.95);
  lds.observation = Eigen::MatrixXd::Identity(1, 1);
  lds.state_noise_cov = Eigen::MatrixXd::Constant(1, 1, 0.1);
  lds.obs_noise_cov = Eigen::MatrixXd::Constant(1, 1, 0.1);
  lds.initial_mean = Eigen::VectorXd::Zero(1);
  lds.initial_cov = Eigen::MatrixXd::Identity(1, 1);
  KernelSpec rs;
  rs.history_kernel = rs.future_kernel = rs.obs_kernel = Kernel{KernelKind::rbf, std::nullopt};
  rs.history_len = 2;
  const KernelPsrModel rm = fit_kernel_psr({sample_lds(lds, 1000, 21).seq}, rs);
  const ObservationSeq rt = sample_lds(lds, 300, 22).seq;
  const double mean = rm.atoms.obs.mean();
  double mse = 0.0, base = 0.0;
  KernelState rstate = rm.initial;
  for (std::size_t t = 0; t < rt.length(); ++t) {
    const double o = rt.value(t)(0);
    mse += std::pow(kernel_predict_mean(rm, rstate)(0) - o, 2);
    base += std::pow(mean - o, 2);
    rstate = kbr_filter_step(rm, rstate, rt.value(t));
  }
  mse /= static_cast<double>(rt.length());
  base /= static_cast<double>(rt.length());
  return {worst <= 1e-6 && mse < base,
          "delta vs discrete " + num(worst) + ", rbf mse " + num(mse) + " vs mean predictor " + num(base)};
}

// ---------------------------------------------------------------- 6

Outcome kalman() {
  LdsParams lds;
  lds.transition = (Eigen::MatrixXd(2, 2) << 0.9, 0.2, -0.2, 0.8).finished();
  lds.observation = (Eigen::MatrixXd(2, 2) << 1.0, 0.0, 0.5, 1.0).finished();
  lds.state_noise_cov = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  lds.obs_noise_cov = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  lds.initial_mean = Eigen::VectorXd::Zero(2);
  lds.initial_cov = oracle::lyapunov(lds.transition, lds.state_noise_cov);

  FeatureSpec spec;
  spec.kind = FeatureKind::moment_stacked_window;
  spec.obs_dim = 2;
  spec.k = 1;
  spec.history_len = 10;
  ModelConfig cfg;
  cfg.features = spec;
  cfg.plugin = Plugin::gaussian;
  cfg.s1_psi.method = cfg.s1_xi.method = RegressionMethod::gaussian_moment;
  cfg.initial_state = InitialStateMode::ergodic;
  const PredictiveModel model = train_model({sample_lds(lds, 100000, 31).seq}, cfg);

  const ObservationSeq test = sample_lds(lds, 5000, 32).seq;
  const FilterTrace trace = run_filter(model, test);
  const oracle::KalmanOut kf = oracle::kalman_predictions(lds, test.values());
  double se = 0.0, se_kf = 0.0;
  for (std::size_t t = 0; t < test.length(); ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    se += (trace.predictions[t].mean - test.values().col(c)).squaredNorm();
    se_kf += (kf.means.col(c) - test.values().col(c)).squaredNorm();
  }
  const double rmse = std::sqrt(se / test.length()), rmse_kf = std::sqrt(se_kf / test.length());
  return {rmse <= 1.1 * rmse_kf, "rmse " + num(rmse) + " vs Kalman " + num(rmse_kf) + " (ratio " + num(rmse / rmse_kf) + ")"};
}

// ---------------------------------------------------------------- 7

Outcome bounds() {
  BoundInputs in;
  in.c = 1.3;
  in.lambda1_x = 0.4;
  in.lambda1_y = 0.7;
  in.tr_x = 1.1;
  in.tr_y = 1.9;
  in.norm_yx = 0.25;
  in.n = 500;
  in.delta = 0.05;
  const double c2 = in.c * in.c;
  const auto form = [&](double r, double v, double k) {
    const double t = std::max(2.6, 2.0 * std::log(4.0 * k / (in.delta * v)));
    return std::sqrt(2.0 * v * t / in.n) + r * t / (3.0 * in.n);
  };
  const double xy = form(c2 + in.norm_yx, c2 * std::max(in.lambda1_x, in.lambda1_y) + in.norm_yx * in.norm_yx,
                         c2 * (in.tr_x + in.tr_y));
  const double xx = form(c2 + in.lambda1_x, c2 * in.lambda1_x + in.lambda1_x * in.lambda1_x, c2 * in.tr_x);
  const double ols = std::sqrt(7.0 / 500.0) * std::log((3.0 + 4.0) / 0.05);
  double err = std::abs(zeta_xy(in).value - xy) / xy;
  err = std::max(err, std::abs(zeta_xx(in).value - xx) / xx);
  err = std::max(err, std::abs(eta_ols(3, 4, 7, 500, 0.05).value - ols) / ols);

  bool coverage = true;
  std::string detail;
  for (int n : {100, 1000}) {
    const CoverageResult c = check_cov_coverage(SamplerSpec{}, n, 0.1, 500, 0);
    coverage = coverage && c.rate <= c.threshold;
    detail += " N=" + std::to_string(n) + " rate " + num(c.rate) + " (threshold " + num(c.threshold) + ")";
  }
  return {err <= 1e-12 && coverage, "formula rel. error " + num(err) + "," + detail};
}

// ---------------------------------------------------------------- 8

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome properties() {
  std::string detail;
  bool ok = true;

  // Lasso KKT on the subsystem regression.
  const LdsParams sub = make_subsystem_lds(3);
  const Eigen::MatrixXd v = sample_lds(sub, 1001, 3).seq.values();
  const Eigen::MatrixXd X = v.leftCols(1000).transpose(), Y = v.rightCols(1000).transpose();
  const FittedRegressor lasso = fit_lasso(X, Y, 0.1);
  ok = ok && lasso.kkt_residual <= 1e-6 && lasso.unconverged_outputs.empty();
  detail += "lasso kkt " + num(lasso.kkt_residual);

  // Logistic gradient against central differences.
  Rng rng(5, 0);
  Eigen::MatrixXd Z(200, 4);
  Eigen::VectorXd y(200), w = Eigen::VectorXd::Ones(200), beta(4);
  for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < 200; ++i) y(i) = rng.uniform() < 0.4 ? 1.0 : 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) beta(i) = rng.normal();
  const double b0 = 0.3;
  const Eigen::VectorXd g = logistic_gradient(Z, y, w, beta, b0);
  Eigen::VectorXd fd(5);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd bp = beta, bm = beta;
    double cp = b0, cm = b0;
    if (i < 4) {
      bp(i) += h;
      bm(i) -= h;
    } else {
      cp += h;
      cm -= h;
    }
    fd(i) = (logistic_objective(Z, y, w, bp, cp) - logistic_objective(Z, y, w, bm, cm)) / (2 * h);
  }
  const double grad_err = (fd - g).norm() / g.norm();
  ok = ok && grad_err <= 1e-4;
  detail += ", logistic grad rel. error " + num(grad_err);

  // EM monotonicity.
  EmOptions eo;
  eo.seed = 9;
  const EmResult em = fit_em_hmm(sample_bkt(BktParams{}, 200, 5, 50, 9), eo);
  ok = ok && em.worst_decrease <= 1e-10;
  detail += ", EM worst decrease " + num(em.worst_decrease);

  // Gram matrices PSD.
  Eigen::MatrixXd pts(300, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
  double min_eig = 0.0;
  for (const Kernel& k : {Kernel{KernelKind::rbf, std::nullopt}, Kernel{KernelKind::rbf, 0.1},
                          Kernel{KernelKind::delta, std::nullopt}}) {
    Eigen::MatrixXd P = pts;
    if (k.kind == KernelKind::delta) P = P.array().round();
    const Eigen::MatrixXd G = gram(P, resolve_bandwidth(k, P));
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff());
  }
  ok = ok && min_eig >= -1e-10;
  detail += ", min Gram eigenvalue " + num(min_eig);

  // Byte reproducibility of experiment artifacts.
  const auto tmp = std::filesystem::temp_directory_path() / "ivpsr_acceptance";
  std::filesystem::remove_all(tmp);
  const Json config = {{"seed", 4}, {"split", {{"n_splits", 3}}}, {"em", {{"restarts", 2}}}};
  run_experiment("bkt", config, tmp / "a");
  run_experiment("bkt", config, tmp / "b");
  bool same = true;
  for (const auto& e : std::filesystem::directory_iterator(tmp / "a")) {
    if (e.path().filename() == "timing.csv") continue;
    same = same && read_file(e.path()) == read_file(tmp / "b" / e.path().filename());
  }
  std::filesystem::remove_all(tmp);
  ok = ok && same;
  detail += same ? ", artifacts byte-identical" : ", artifacts differ";
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact-moment oracle equivalence", exact_moments},
      {"consistency trend", consistency},
      {"BKT comparison", bkt},
      {"lasso subsystem discovery", lasso},
      {"kernel reduction", kernel},
      {"Kalman path", kalman},
      {"bound suite", bounds},
      {"numerical properties", properties},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
