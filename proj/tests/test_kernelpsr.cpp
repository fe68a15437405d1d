#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ivpsr/kernelpsr.hpp"
#include "ivpsr/regress.hpp"
#include "ivpsr/rng.hpp"
#include "ivpsr/twostage.hpp"

using namespace ivpsr;

namespace {

const Kernel kDelta{KernelKind::delta, std::nullopt};

Eigen::MatrixXd normal_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

struct DeltaPair {
  KernelPsrModel kernel;
  PredictiveModel discrete;
};

// Delta-kernel model and the discrete model with matching regularizers.
DeltaPair delta_pair(const HmmParams& hmm, std::size_t length, std::uint64_t seed) {
  const std::vector<ObservationSeq> train = sample_hmm(hmm, length, 1, seed);
  KernelSpec ks;
  ks.history_kernel = ks.future_kernel = ks.obs_kernel = kDelta;
  ks.lambda0 = 1e-3;
  ks.lambda = 1e-9;
  FeatureSpec spec;
  spec.alphabet_size = hmm.n_obs();
  spec.min_seq_len = 1;
  ModelConfig cfg;
  cfg.features = spec;
  cfg.s1_psi.method = cfg.s1_xi.method = RegressionMethod::ridge;
  cfg.s1_psi.lambda0 = cfg.s1_xi.lambda0 = ks.lambda0;
  const TripletDataset raw = extract_triplets(train, spec);
  cfg.s2_lambda = ks.lambda * static_cast<double>(raw.size());
  return {fit_kernel_psr(train, ks),
          train_model_from_dataset(raw, cfg, raw.Psi.colwise().mean().transpose())};
}

}  // namespace

TEST_CASE("gram matrices") {
  const Kernel rbf{KernelKind::rbf, 0.7};
  CHECK(gram(Eigen::MatrixXd::Constant(1, 2, 3.0), rbf)(0, 0) == 1.0);
  CHECK(gram(Eigen::MatrixXd::Constant(1, 1, 3.0), kDelta)(0, 0) == 1.0);
  const Eigen::MatrixXd g = gram((Eigen::MatrixXd(3, 1) << 0, 1, 0).finished(), kDelta);
  CHECK(g == (Eigen::MatrixXd(3, 3) << 1, 0, 1, 0, 1, 0, 1, 0, 1).finished());
  const Eigen::MatrixXd pts = normal_points(5, 2, 1);
  const Eigen::MatrixXd G = gram(pts, rbf);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(G(i, j) == doctest::Approx(std::exp(-(pts.row(i) - pts.row(j)).squaredNorm() / (2 * 0.49))));
  CHECK((cross_gram(pts, pts, rbf) - G).norm() < 1e-15);
}

TEST_CASE("median heuristic") {
  bool fallback = true;
  CHECK(median_heuristic((Eigen::MatrixXd(3, 1) << 0, 1, 3).finished(), &fallback) == 2.0);
  CHECK_FALSE(fallback);
  CHECK(median_heuristic(Eigen::MatrixXd::Zero(4, 2), &fallback) == 1.0);
  CHECK(fallback);
  CHECK(resolve_bandwidth(Kernel{}, (Eigen::MatrixXd(3, 1) << 0, 1, 3).finished()).bandwidth == 2.0);
}

TEST_CASE("S1 and S2 operators") {
  SUBCASE("identity inputs") {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    const KernelS2 s2 = kernel_s2(I, I, I, 0.5);
    CHECK((s2.K - I / 3.0).norm() < 1e-12);  // (1 + 0.5 * 4)^{-1}
    CHECK(s2.retries == 0);
  }
  SUBCASE("single atom") {
    const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
    CHECK(kernel_s2(one, one, one, 1.0).K(0, 0) == doctest::Approx(0.5));
    CHECK(kernel_s1_weights(one, 1.0)(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("larger lambda shrinks the operator") {
    const Kernel rbf{KernelKind::rbf, 1.0};
    const Eigen::MatrixXd G = gram(normal_points(20, 2, 2), rbf);
    const Eigen::MatrixXd B = kernel_s1_weights(G, 0.1);
    CHECK((B - fit_cme(G, 0.1)).norm() < 1e-12);
    double prev = 1e300;
    for (double lam : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
      const double n = kernel_s2(G, B, G, lam).K.norm();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("low-rank Bayes update matches the dense solve") {
  const Kernel rbf{KernelKind::rbf, 0.8};
  const Eigen::MatrixXd G = gram(normal_points(40, 1, 3), rbf);
  const Eigen::MatrixXd L = pivoted_cholesky(G, 1e-12);
  CHECK((L * L.transpose() - G).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(L.cols() < 40);
  Rng rng(4);
  Eigen::VectorXd ext(40), go(40);
  for (int i = 0; i < 40; ++i) {
    ext(i) = rng.uniform();
    go(i) = G(i, 7);
  }
  for (double lam : {1e-2, 1e-4}) {
    const Eigen::VectorXd d = kbr_update_dense(ext, G, go, lam), l = kbr_update_lowrank(ext, L, go, lam);
    CHECK((d - l).norm() <= 1e-6 * std::max(1.0, d.norm()));
  }
}

TEST_CASE("delta kernel agrees with the discrete pipeline") {
  const HmmParams hmm = random_hmm(2, 2, 21);
  const DeltaPair m = delta_pair(hmm, 1002, 22);
  const ObservationSeq test = sample_hmm(hmm, 40, 1, 23).front();

  SUBCASE("filtering") {
    // The discrete filter clamps states at the simplex boundary while kernel
    // weights are left signed, so the comparison stops at the first clamp.
    const FilterTrace dt = run_filter(m.discrete, test);
    KernelState s = m.kernel.initial;
    std::size_t compared = 0;
    for (std::size_t t = 0; t < test.length(); ++t, ++compared) {
      if (dt.predictions[t].probs.minCoeff() < 1e-6) break;
      CHECK((kernel_predict_probs(m.kernel, s, 2) - dt.predictions[t].probs).cwiseAbs().maxCoeff() < 1e-6);
      s = kbr_filter_step(m.kernel, s, Eigen::VectorXd::Constant(1, test.symbol(t)));
    }
    CHECK(compared >= 10);
  }
  SUBCASE("prediction without evidence") {
    KernelState s = m.kernel.initial;
    Eigen::VectorXd q = m.discrete.q1;
    for (int t = 0; t < 10; ++t) {
      s = kbr_predict_step(m.kernel, s);
      q = predict_step(m.discrete, q);
      CHECK((kernel_predict_probs(m.kernel, s, 2) - predict_observation(m.discrete, q).probs).cwiseAbs().maxCoeff() <
            1e-5);
    }
  }
}

TEST_CASE("conditioning concentrates on matching atoms") {
  const HmmParams hmm = random_hmm(2, 3, 31);
  const DeltaPair m = delta_pair(hmm, 200, 32);
  const KernelState s = kbr_filter_step(m.kernel, m.kernel.initial, Eigen::VectorXd::Constant(1, 2.0));
  CHECK_FALSE(s.lost_track);
  CHECK(s.alpha.sum() == doctest::Approx(1.0));
  for (int i = 0; i < m.kernel.n(); ++i) {
    if (m.kernel.atoms.obs(i, 0) != 2.0) CHECK(std::abs(s.alpha(i)) < 1e-9);
  }
}

TEST_CASE("weights stay bounded over long predictions") {
  LdsParams lds;
  lds.transition = Eigen::MatrixXd::Constant(1, 1, 0.9);
  lds.observation = Eigen::MatrixXd::Identity(1, 1);
  lds.state_noise_cov = lds.obs_noise_cov = Eigen::MatrixXd::Constant(1, 1, 0.2);
  lds.initial_mean = Eigen::VectorXd::Zero(1);
  lds.initial_cov = Eigen::MatrixXd::Identity(1, 1);
  KernelSpec ks;
  ks.history_len = 2;
  const KernelPsrModel model = fit_kernel_psr({sample_lds(lds, 400, 41).seq}, ks);
  KernelState s = model.initial;
  for (int t = 0; t < 100; ++t) {
    s = kbr_predict_step(model, s);
    REQUIRE(s.alpha.allFinite());
    CHECK(s.alpha.sum() == doctest::Approx(1.0));
    CHECK(s.alpha.cwiseAbs().sum() < 1e6);
    CHECK(std::isfinite(kernel_predict_mean(model, s)(0)));
  }
}

TEST_CASE("atom subsampling and validation") {
  LdsParams lds;
  lds.transition = Eigen::MatrixXd::Constant(1, 1, 0.5);
  lds.observation = Eigen::MatrixXd::Identity(1, 1);
  lds.state_noise_cov = lds.obs_noise_cov = Eigen::MatrixXd::Constant(1, 1, 0.2);
  lds.initial_mean = Eigen::VectorXd::Zero(1);
  lds.initial_cov = Eigen::MatrixXd::Identity(1, 1);
  KernelSpec ks;
  ks.max_atoms = 50;
  CHECK(kernel_atoms({sample_lds(lds, 300, 1).seq}, ks).size() == 50);
  ks.lambda = -1.0;
  CHECK_THROWS(ks.validate());
}
