#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ivpsr/experiments.hpp"
#include "oracles.hpp"

using namespace ivpsr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  return rows - 1;  // header
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ivpsr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(IVPSR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("MAE of trivial predictors") {
  const std::vector<ObservationSeq> seqs{ObservationSeq::discrete("a", {1, 0, 1, 1}),
                                         ObservationSeq::discrete("b", {0, 0}),
                                         ObservationSeq::discrete("c", {1})};
  const BinaryPredictor half = [](const ObservationSeq& s) { return std::vector<double>(s.length(), 0.5); };
  const MaeResult r = evaluate_mae(half, seqs, 1);
  CHECK(r.pooled == 0.5);
  CHECK(r.steps == 4);
  CHECK(r.skipped == 1);
  CHECK(std::isnan(r.per_sequence[2]));
  const BinaryPredictor perfect = [](const ObservationSeq& s) {
    std::vector<double> p;
    for (int x : s.symbols()) p.push_back(x);
    return p;
  };
  CHECK(evaluate_mae(perfect, seqs, 0).pooled == 0.0);

  // Pooled and per-sequence averages differ when lengths differ.
  const BinaryPredictor zero = [](const ObservationSeq& s) { return std::vector<double>(s.length(), 0.0); };
  const MaeResult z = evaluate_mae(zero, seqs, 0);
  CHECK(z.pooled == doctest::Approx(4.0 / 7.0));
  CHECK(z.per_sequence_mean == doctest::Approx((0.75 + 0.0 + 1.0) / 3.0));
}

TEST_CASE("generating-model MAE matches the forward algorithm") {
  const BktParams bkt;
  const HmmParams h = bkt.to_hmm();
  const auto seqs = sample_bkt(bkt, 30, 5, 20, 3);
  double sum = 0.0;
  std::size_t steps = 0;
  for (const auto& s : seqs) {
    const auto pred = oracle::forward_predictive(h, s.symbols());
    for (std::size_t t = 2; t < s.length(); ++t, ++steps) sum += std::abs(s.symbol(t) - pred[t][1]);
  }
  CHECK(evaluate_mae(predictor_for(h), seqs, 2).pooled == doctest::Approx(sum / steps).epsilon(1e-12));
}

TEST_CASE("small BKT experiment writes its artifacts") {
  const fs::path dir = scratch("bkt");
  const Json config = {{"seed", 3},
                       {"generator", {{"n_seqs", 60}}},
                       {"split", {{"n_train", 40}, {"n_test", 20}, {"n_splits", 4}}},
                       {"em", {{"restarts", 1}, {"n_iters", 20}}}};
  const Json meta = run_experiment("bkt", config, dir);
  CHECK(meta.at("seed") == 3);
  CHECK(meta.at("result").at("n_successful_splits") == 4);
  for (const char* f : {"metadata.json", "result_table.csv", "summary.csv", "timing.csv"}) CHECK(fs::exists(dir / f));
  int scatters = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind("scatter_", 0) == 0) {
      ++scatters;
      CHECK(count_data_rows(e.path()) == 4);
    }
  }
  CHECK(scatters == 6);  // every pair of the four default models
  CHECK(count_data_rows(dir / "result_table.csv") == 16);
  const std::string first_line = slurp(dir / "summary.csv").substr(0, slurp(dir / "summary.csv").find('\n'));
  CHECK(first_line == "# config_hash=" + meta.at("config_hash").get<std::string>() + " seed=3");
  CHECK_THROWS(run_experiment("nonexistent", config, dir));
}

TEST_CASE("bounds and lasso experiments") {
  const fs::path dir = scratch("small_exps");
  run_experiment("bounds", {{"ns", {100}}, {"trials", 50}}, dir / "bounds");
  CHECK(fs::exists(dir / "bounds" / "coverage.csv"));
  CHECK(fs::exists(dir / "bounds" / "bounds_report.json"));
  run_experiment("lasso_subsystems", {{"seeds", {1}}, {"n", 300}}, dir / "lasso");
  CHECK(count_data_rows(dir / "lasso" / "basis_lasso.csv") > 0);
}

TEST_CASE("command-line interface") {
  const fs::path dir = scratch("cli");
  const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  REQUIRE(cli("generate --system bkt --seed 5 --n-seqs 50 --out " + a) == 0);
  REQUIRE(cli("generate --system bkt --seed 5 --n-seqs 50 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(fs::exists(a + ".meta.json"));

  CHECK(cli("generate --no-such-flag") == 1);
  CHECK(cli("") == 1);
  CHECK(cli("experiment bkt --config " + (dir / "missing.json").string()) != 0);

  ModelConfig mc;
  mc.features.history_len = 2;
  write_json(to_json(mc), dir / "model_config.json");
  const std::string model = (dir / "model.json").string();
  REQUIRE(cli("train --config " + (dir / "model_config.json").string() + " --data " + a + " --out " + model) == 0);
  CHECK(read_json(model).contains("config_hash"));
  CHECK(cli("evaluate --model " + model + " --data " + a) == 0);
  CHECK(cli("filter --model " + model + " --data " + a + " --out " + (dir / "pred.csv").string()) == 0);
  CHECK(fs::file_size(dir / "pred.csv") > 0);

  const std::string report = (dir / "bounds.json").string();
  REQUIRE(std::system((std::string(IVPSR_CLI_PATH) + " bounds --n 1000 --delta 0.1 --trials 200 --seed 1 > " + report).c_str()) == 0);
  const Json j = read_json(report);
  CHECK(j.at("coverage_violation_rate").get<double>() <= 0.08);
}
