#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "ivpsr/experiments.hpp"
#include "ivpsr/serialization.hpp"
#include "ivpsr/theorybounds.hpp"

using namespace ivpsr;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json load_json(const std::string& path) {
  try {
    return read_json(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

LdsParams default_lds() {
  LdsParams p;
  p.transition = (Eigen::MatrixXd(2, 2) << 0.9, 0.2, -0.1, 0.7).finished();
  p.observation = Eigen::MatrixXd::Identity(2, 2);
  p.state_noise_cov = 0.1 * Eigen::MatrixXd::Identity(2, 2);
  p.obs_noise_cov = 0.05 * Eigen::MatrixXd::Identity(2, 2);
  p.initial_mean = Eigen::VectorXd::Zero(2);
  p.initial_cov = Eigen::MatrixXd::Identity(2, 2);
  return p;
}

struct GenerateArgs {
  std::string system = "bkt";
  std::uint64_t seed = 1;
  std::string out = "sequences.csv";
  std::string params;
  std::size_t n_seqs = 325;
  std::size_t length = 1000;
  std::size_t min_len = 5;
  std::size_t max_len = 50;
};

int cmd_generate(const GenerateArgs& a) {
  std::vector<ObservationSeq> seqs;
  Json params;
  if (a.system == "bkt") {
    const BktParams p = a.params.empty() ? BktParams{} : bkt_params_from_json(load_json(a.params));
    seqs = sample_bkt(p, a.n_seqs, a.min_len, a.max_len, a.seed);
    params = to_json(p);
  } else if (a.system == "hmm") {
    const HmmParams p = a.params.empty() ? random_hmm(2, 2, a.seed) : hmm_params_from_json(load_json(a.params));
    seqs = sample_hmm(p, a.length, a.n_seqs, a.seed);
    params = to_json(p);
  } else if (a.system == "lds" || a.system == "subsystem") {
    LdsParams p;
    if (!a.params.empty()) {
      p = lds_params_from_json(load_json(a.params));
    } else {
      p = a.system == "lds" ? default_lds() : make_subsystem_lds(a.seed);
    }
    const LdsSample s = sample_lds(p, a.length, a.seed);
    if (s.unstable) std::cerr << "warning: transition spectral radius >= 1\n";
    seqs.push_back(s.seq);
    params = to_json(p);
    params["unstable"] = s.unstable;
  } else {
    throw ConfigError("unknown system '" + a.system + "'");
  }
  write_sequences(seqs, a.out);
  write_json({{"system", a.system}, {"seed", a.seed}, {"params", params}}, a.out + ".meta.json");
  return 0;
}

int cmd_train(const std::string& config, const std::string& data, const std::string& out) {
  const Json j = load_json(config);
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const PredictiveModel model = train_model(read_sequences(data), cfg);
  Json m = to_json(model);
  m["config_hash"] = config_hash(j);
  write_json(m, out);
  return 0;
}

int cmd_filter(const std::string& model_path, const std::string& data, const std::string& out) {
  const PredictiveModel model = predictive_model_from_json(load_json(model_path));
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << "# config_hash=" << config_hash(load_json(model_path)) << " seed=0\n";
  const bool discrete = model.plugin == Plugin::hmm;
  int width = 0;
  int lost = 0;
  for (const auto& seq : read_sequences(data)) {
    const FilterTrace trace = run_filter(model, seq);
    lost += trace.lost_track_events;
    for (std::size_t t = 0; t < trace.predictions.size(); ++t) {
      const Eigen::VectorXd& v = discrete ? trace.predictions[t].probs : trace.predictions[t].mean;
      if (width == 0) {
        width = static_cast<int>(v.size());
        f << "seq_id,t";
        for (int i = 0; i < width; ++i) f << (discrete ? ",p_" : ",mean_") << (discrete ? i : i + 1);
        f << '\n';
      }
      f << seq.id() << ',' << t;
      char buf[32];
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v(i));
        f << ',' << buf;
      }
      f << '\n';
    }
  }
  if (lost > 0) std::cerr << "lost-track events: " << lost << '\n';
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data, int warmup) {
  const PredictiveModel model = predictive_model_from_json(load_json(model_path));
  if (model.plugin != Plugin::hmm || model.spec.alphabet_size != 2) {
    throw ConfigError("evaluate reports MAE for binary discrete models only");
  }
  const int w = warmup >= 0 ? warmup : model.spec.history_len;
  const MaeResult r = evaluate_mae(predictor_for(model), read_sequences(data), w);
  std::cout << Json{{"mae", r.pooled},
                    {"mae_per_sequence", r.per_sequence_mean},
                    {"steps", r.steps},
                    {"skipped", r.skipped},
                    {"warmup", w}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_experiment(const std::string& id, const std::string& config, std::string out) {
  const Json j = load_json(config);
  if (out.empty()) {
    out = j.contains("out_dir") ? j.at("out_dir").get<std::string>()
                                : std::filesystem::path(config).parent_path().string();
    if (out.empty()) out = ".";
  }
  const Json meta = run_experiment(id, j, out);
  std::cout << meta.at("result").dump(2) << '\n';
  return 0;
}

int cmd_bounds(const std::string& preset, int n, double delta, int trials, std::uint64_t seed, int dim) {
  SamplerSpec sampler;
  try {
    sampler.kind = sampler_kind_from_string(preset);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  sampler.dim = dim;
  const CoverageResult c = check_cov_coverage(sampler, n, delta, trials, seed);
  std::cout << Json{{"preset", preset},
                    {"n", n},
                    {"delta", delta},
                    {"trials", c.trials},
                    {"violations", c.violations},
                    {"coverage_violation_rate", c.rate},
                    {"wilson_upper", c.wilson_upper},
                    {"threshold", c.threshold},
                    {"zeta_xx", c.zeta_xx},
                    {"zeta_xy", c.zeta_xy},
                    {"within_threshold", c.within_threshold()}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage instrumental regression for predictive-state models"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample synthetic sequences to CSV");
  generate->add_option("--system", gen.system, "bkt | hmm | lds | subsystem")
      ->check(CLI::IsMember({"bkt", "hmm", "lds", "subsystem"}));
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen.out);
  generate->add_option("--params", gen.params, "JSON parameter file");
  generate->add_option("--n-seqs", gen.n_seqs);
  generate->add_option("--length", gen.length);
  generate->add_option("--min-len", gen.min_len);
  generate->add_option("--max-len", gen.max_len);

  std::string config, data, out = "model.json", model_path, filter_out = "predictions.csv";
  auto* train = app.add_subcommand("train", "Fit a predictive-state model");
  train->add_option("--config", config)->required();
  train->add_option("--data", data)->required();
  train->add_option("--out", out);

  auto* filter = app.add_subcommand("filter", "Write one-step predictions for each sequence");
  filter->add_option("--model", model_path)->required();
  filter->add_option("--data", data)->required();
  filter->add_option("--out", filter_out);

  int warmup = -1;
  auto* evaluate = app.add_subcommand("evaluate", "MAE of a binary model on test sequences");
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--data", data)->required();
  evaluate->add_option("--warmup", warmup, "defaults to the model's history length");

  std::string exp_id, exp_out;
  auto* experiment = app.add_subcommand("experiment", "Run a configured experiment");
  experiment->add_option("id", exp_id, "bkt | lasso_subsystems | convergence | bounds")->required();
  experiment->add_option("--config", config)->required();
  experiment->add_option("--out", exp_out, "output directory (default: out_dir key or the config's directory)");

  std::string preset = "basis-uniform";
  int n = 100, trials = 500, dim = 5;
  double delta = 0.1;
  std::uint64_t seed = 0;
  auto* bounds = app.add_subcommand("bounds", "Monte Carlo coverage check of the covariance bounds");
  bounds->add_option("--preset", preset);
  bounds->add_option("--n", n);
  bounds->add_option("--delta", delta);
  bounds->add_option("--trials", trials);
  bounds->add_option("--seed", seed);
  bounds->add_option("--dim", dim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*train) return cmd_train(config, data, out);
    if (*filter) return cmd_filter(model_path, data, filter_out);
    if (*evaluate) return cmd_evaluate(model_path, data, warmup);
    if (*experiment) return cmd_experiment(exp_id, config, exp_out);
    if (*bounds) return cmd_bounds(preset, n, delta, trials, seed, dim);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
