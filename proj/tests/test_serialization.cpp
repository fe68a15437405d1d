#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "ivpsr/serialization.hpp"

using namespace ivpsr;

TEST_CASE("matrix layout is row-major") {
  const Eigen::MatrixXd m = (Eigen::MatrixXd(2, 3) << 1, 2, 3, 4, 5, 6).finished();
  const Json j = matrix_to_json(m);
  CHECK(j.at("rows") == 2);
  CHECK(j.at("cols") == 3);
  CHECK(j.at("data") == Json::array({1, 2, 3, 4, 5, 6}));
  CHECK(matrix_from_json(j) == m);
  Json bad = j;
  bad["data"] = Json::array({1, 2});
  CHECK_THROWS(matrix_from_json(bad));
  const Eigen::VectorXd v = (Eigen::VectorXd(2) << 0.1, 1e-300).finished();
  CHECK(vector_from_json(vector_to_json(v)) == v);
}

TEST_CASE("parameter round trips") {
  const HmmParams h = random_hmm(3, 4, 1);
  const HmmParams h2 = hmm_params_from_json(to_json(h));
  CHECK(h2.transition == h.transition);
  CHECK(h2.emission == h.emission);
  CHECK(h2.initial == h.initial);

  BktParams b;
  b.p_slip = 0.07;
  CHECK(bkt_params_from_json(to_json(b)).p_slip == 0.07);

  const LdsParams l = make_subsystem_lds(2);
  const LdsParams l2 = lds_params_from_json(to_json(l));
  CHECK(l2.transition == l.transition);
  CHECK(l2.obs_noise_cov == l.obs_noise_cov);

  BoundInputs in;
  in.norm_yx = 0.3;
  in.n = 77;
  CHECK(to_json(bound_inputs_from_json(to_json(in))) == to_json(in));

  KernelSpec ks;
  ks.history_kernel = Kernel{KernelKind::delta, std::nullopt};
  ks.future_kernel = Kernel{KernelKind::rbf, 0.25};
  CHECK(to_json(kernel_spec_from_json(to_json(ks))) == to_json(ks));
}

TEST_CASE("model config round trip") {
  ModelConfig c;
  c.features.kind = FeatureKind::binary_history;
  c.features.history_len = 3;
  c.s1_psi.method = RegressionMethod::logistic;
  c.s2_lambda = 0.5;
  c.s2_lambda_rule = LambdaRule::trace_sqrt_n;
  c.rank = 2;
  c.normalizer = NormalizerMode::regression;
  const Json j = to_json(c);
  CHECK(to_json(model_config_from_json(j)) == j);
  Json bad = j;
  bad["plugin"] = "nonsense";
  CHECK_THROWS(model_config_from_json(bad));
}

TEST_CASE("trained models survive a round trip") {
  const HmmParams h = random_hmm(2, 3, 4);
  const auto seqs = sample_hmm(h, 100, 10, 5);
  ModelConfig c;
  c.features.alphabet_size = 3;
  c.rank = 2;
  const PredictiveModel m = train_model(seqs, c);
  const auto dir = std::filesystem::temp_directory_path() / "ivpsr_test_serialization";
  std::filesystem::create_directories(dir);
  write_json(to_json(m), dir / "model.json");
  const PredictiveModel m2 = predictive_model_from_json(read_json(dir / "model.json"));
  CHECK(m2.W == m.W);
  CHECK(m2.b_inf == m.b_inf);
  REQUIRE(m2.spec.projection);
  CHECK(m2.spec.projection->U == m.spec.projection->U);
  const FilterTrace a = run_filter(m, seqs.front()), b = run_filter(m2, seqs.front());
  for (std::size_t t = 0; t < a.predictions.size(); ++t) CHECK(a.predictions[t].probs == b.predictions[t].probs);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config hash") {
  const Json a = {{"seed", 1}, {"split", {{"n_splits", 3}}}};
  Json b;
  b["split"]["n_splits"] = 3;
  b["seed"] = 1;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  Json c = a;
  c["seed"] = 2;
  CHECK(config_hash(a) != config_hash(c));
  // FNV-1a of the empty object "{}".
  CHECK(config_hash(Json::object()) == "08f44b07b5901a25");
}
