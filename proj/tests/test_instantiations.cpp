#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ivpsr/em.hpp"
#include "ivpsr/gaussian.hpp"
#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/linalg.hpp"
#include "ivpsr/rng.hpp"
#include "ivpsr/twostage.hpp"
#include "oracles.hpp"

using namespace ivpsr;

TEST_CASE("operators from W") {
  Eigen::MatrixXd W(4, 2);
  W << 1, 2, 3, 4, 5, 6, 7, 8;
  const HmmOperators ops = hmm_operators_from_w(W, 2);
  REQUIRE(ops.alphabet_size() == 2);
  CHECK(ops.B[0] == W.topRows(2));
  CHECK(ops.B[1] == W.bottomRows(2));
  CHECK(ops.b_inf == Eigen::VectorXd::Ones(2));
  CHECK_THROWS_AS(hmm_operators_from_w(Eigen::MatrixXd::Zero(5, 2), 2), LayoutError);
}

TEST_CASE("learned operators match the observable-operator table") {
  const HmmParams p = random_hmm(3, 3, 21);
  FeatureSpec spec;
  spec.alphabet_size = 3;
  spec.min_seq_len = 1;
  ModelConfig cfg;
  cfg.features = spec;
  cfg.s2_lambda = 0.0;
  const PredictiveModel model = train_model_from_dataset(
      exact_triplets(p, spec, oracle::stationary(p.transition)), cfg, exact_initial_state(p, spec, p.initial));
  const HmmOperators ops = model.hmm_operators();
  const Eigen::MatrixXd Oinv = p.emission.inverse();
  for (int x = 0; x < 3; ++x) {
    const Eigen::MatrixXd expected =
        p.emission * p.transition * p.emission.row(x).asDiagonal() * Oinv;
    CHECK((ops.B[static_cast<std::size_t>(x)] - expected).norm() < 1e-9);
  }
}

TEST_CASE("normalizer") {
  Basis identity;
  identity.U = Eigen::MatrixXd::Identity(3, 3);
  identity.singular_values = Eigen::VectorXd::Ones(3);
  identity.numerical_rank = 3;
  const Eigen::VectorXd p1 = (Eigen::VectorXd(3) << 0.2, 0.3, 0.5).finished();
  bool deficient = true;
  const Eigen::VectorXd b = hmm_normalizer(Eigen::MatrixXd::Identity(3, 3), identity, p1, &deficient);
  CHECK((b - Eigen::VectorXd::Ones(3)).norm() < 1e-12);
  CHECK_FALSE(deficient);
  // Any S1 map whose columns are distributions gives the same answer.
  Eigen::MatrixXd S = (Eigen::MatrixXd(3, 3) << 0.5, 0.1, 0.2, 0.3, 0.8, 0.2, 0.2, 0.1, 0.6).finished();
  CHECK((hmm_normalizer(S, identity, p1) - Eigen::VectorXd::Ones(3)).norm() < 1e-10);
}

TEST_CASE("clamp and filter") {
  const Eigen::VectorXd c = clamp_probabilities((Eigen::VectorXd(3) << 0.6, -0.1, 0.5).finished());
  CHECK(c.minCoeff() > 0.0);
  CHECK(c.sum() == doctest::Approx(1.0));
  HmmOperators ops;
  ops.B = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  ops.b_inf = Eigen::VectorXd::Ones(2);
  const Eigen::VectorXd q = (Eigen::VectorXd(2) << 0.4, 0.6).finished();
  const HmmFilterResult lost = hmm_filter(ops, q, 0);
  CHECK(lost.lost_track);
  CHECK(lost.q == q);
  CHECK(hmm_predict(ops, q) == q);
}

TEST_CASE("gaussian moment algebra") {
  GaussianBelief g;
  g.mean = (Eigen::VectorXd(2) << 1, -2).finished();
  g.cov = (Eigen::MatrixXd(2, 2) << 2, 0.5, 0.5, 1).finished();
  const Eigen::VectorXd m = gaussian_to_moments(g);
  CHECK(m.size() == 6);
  CHECK(m(2) == doctest::Approx(3.0));  // 2 + 1
  const GaussianBelief back = gaussian_extended_from_moments(m);
  CHECK((back.mean - g.mean).norm() < 1e-12);
  CHECK((back.cov - g.cov).norm() < 1e-12);

  SUBCASE("conditioning a bivariate normal") {
    for (double rho : {-0.8, 0.0, 0.3, 0.95}) {
      GaussianBelief j;
      j.mean = Eigen::VectorXd::Zero(2);
      j.cov = (Eigen::MatrixXd(2, 2) << 1, rho, rho, 1).finished();
      const GaussianBelief c = gaussian_condition(j, 1, Eigen::VectorXd::Constant(1, 1.5));
      CHECK(c.mean(0) == doctest::Approx(rho * 1.5).epsilon(1e-6));
      CHECK(c.cov(0, 0) == doctest::Approx(1 - rho * rho).epsilon(1e-6));
    }
  }
  SUBCASE("marginalizing") {
    const GaussianBelief mg = gaussian_marginalize(g, 1);
    CHECK(mg.mean(0) == -2.0);
    CHECK(mg.cov(0, 0) == 1.0);
  }
  SUBCASE("indefinite moments are clipped") {
    Eigen::VectorXd bad(2);
    bad << 1.0, 0.5;  // second moment below the squared mean
    double clipped = 0.0;
    const GaussianBelief b = gaussian_extended_from_moments(bad, &clipped);
    CHECK(b.cov(0, 0) == 0.0);
    CHECK(clipped == doctest::Approx(0.5));
  }
  SUBCASE("moment operator pushes moments through a linear map") {
    const Eigen::MatrixXd A = (Eigen::MatrixXd(2, 2) << 0.9, 0.2, -0.1, 0.7).finished();
    const Eigen::MatrixXd C = 0.3 * Eigen::MatrixXd::Identity(2, 2);
    const MomentOperator op = moment_operator(A, C);
    const GaussianBelief y = gaussian_extended_from_moments(op.W * m + op.offset);
    CHECK((y.mean - A * g.mean).norm() < 1e-12);
    CHECK((y.cov - (A * g.cov * A.transpose() + C)).norm() < 1e-12);
  }
}

TEST_CASE("gaussian plugin tracks the Kalman filter") {
  LdsParams lds;
  lds.transition = (Eigen::MatrixXd(1, 1) << 0.9).finished();
  lds.observation = Eigen::MatrixXd::Identity(1, 1);
  lds.state_noise_cov = 0.3 * Eigen::MatrixXd::Identity(1, 1);
  lds.obs_noise_cov = 0.3 * Eigen::MatrixXd::Identity(1, 1);
  lds.initial_mean = Eigen::VectorXd::Zero(1);
  lds.initial_cov = oracle::lyapunov(lds.transition, lds.state_noise_cov);
  FeatureSpec spec;
  spec.kind = FeatureKind::moment_stacked_window;
  spec.obs_dim = 1;
  spec.history_len = 8;
  ModelConfig cfg;
  cfg.features = spec;
  cfg.plugin = Plugin::gaussian;
  cfg.s1_psi.method = cfg.s1_xi.method = RegressionMethod::gaussian_moment;
  cfg.initial_state = InitialStateMode::ergodic;
  const PredictiveModel model = train_model({sample_lds(lds, 30000, 1).seq}, cfg);
  const ObservationSeq test = sample_lds(lds, 2000, 2).seq;
  const FilterTrace trace = run_filter(model, test);
  const auto kf = oracle::kalman_predictions(lds, test.values());
  double gap = 0.0, spread = 0.0;
  for (std::size_t t = 50; t < test.length(); ++t) {
    const auto c = static_cast<Eigen::Index>(t);
    gap += std::pow(trace.predictions[t].mean(0) - kf.means(0, c), 2);
    spread += std::pow(test.values()(0, c) - kf.means(0, c), 2);
  }
  // Predicted means stay much closer to the Kalman means than the observations do.
  CHECK(gap < 0.05 * spread);
  CHECK(trace.predictions[100].cov(0, 0) == doctest::Approx(kf.covs[100](0, 0)).epsilon(0.1));
}

TEST_CASE("EM baseline") {
  SUBCASE("log-likelihood never decreases") {
    EmOptions o;
    o.seed = 3;
    o.restarts = 3;
    o.n_obs = 3;
    const EmResult r = fit_em_hmm(sample_hmm(random_hmm(2, 3, 4), 100, 20, 5), o);
    CHECK(r.worst_decrease <= 1e-10);
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
      CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9 * std::abs(r.log_likelihood[i - 1]));
  }
  SUBCASE("one state recovers symbol frequencies") {
    const std::vector<ObservationSeq> seqs{ObservationSeq::discrete("a", {0, 0, 1, 2, 0}),
                                           ObservationSeq::discrete("b", {2, 0, 1, 0, 0})};
    EmOptions o;
    o.n_states = 1;
    o.n_obs = 3;
    o.restarts = 1;
    const EmResult r = fit_em_hmm(seqs, o);
    CHECK(r.params.emission(0, 0) == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(r.params.emission(1, 0) == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(hmm_log_likelihood(r.params, seqs) == doctest::Approx(10 * (0.6 * std::log(0.6) + 0.4 * std::log(0.2))));
  }
  SUBCASE("BKT emissions are recovered") {
    const BktParams truth;
    EmOptions o;
    o.seed = 6;
    o.restarts = 3;
    o.n_iters = 300;
    const EmResult r = fit_em_hmm(sample_bkt(truth, 5000, 20, 20, 7), o);
    // Identify the learned state by its higher chance of a correct answer.
    const int learned = r.params.emission(1, 1) > r.params.emission(1, 0) ? 1 : 0;
    CHECK(std::abs(r.params.emission(1, learned) - (1 - truth.p_slip)) < 0.05);
    CHECK(std::abs(r.params.emission(1, 1 - learned) - truth.p_guess) < 0.05);
  }
}
