#include "ivpsr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "ivpsr/rng.hpp"

namespace ivpsr {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path, const std::string& header_line) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header_line;
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::string file_safe(std::string name) {
  for (char& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return name;
}

}  // namespace

std::string artifact_header(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

BinaryPredictor predictor_for(const PredictiveModel& model) {
  return [model](const ObservationSeq& seq) {
    const FilterTrace trace = run_filter(model, seq);
    std::vector<double> p;
    p.reserve(seq.length());
    for (const auto& pred : trace.predictions) p.push_back(pred.probs(1));
    return p;
  };
}

BinaryPredictor predictor_for(const HmmParams& params) {
  return [params](const ObservationSeq& seq) {
    const ForwardResult f = hmm_forward(params, seq.symbols());
    std::vector<double> p(seq.length());
    for (std::size_t t = 0; t < seq.length(); ++t) p[t] = f.predictive(1, static_cast<Eigen::Index>(t));
    return p;
  };
}

MaeResult evaluate_mae(const BinaryPredictor& predictor, const std::vector<ObservationSeq>& seqs,
                       int warmup) {
  MaeResult r;
  double total = 0.0;
  std::vector<double> per_seq_valid;
  for (const auto& seq : seqs) {
    if (seq.length() <= static_cast<std::size_t>(warmup)) {
      ++r.skipped;
      r.per_sequence.push_back(std::nan(""));
      continue;
    }
    const std::vector<double> p = predictor(seq);
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t t = static_cast<std::size_t>(warmup); t < seq.length(); ++t, ++count) {
      s += std::abs((seq.symbol(t) == 1 ? 1.0 : 0.0) - p[t]);
    }
    total += s;
    r.steps += count;
    r.per_sequence.push_back(s / static_cast<double>(count));
    per_seq_valid.push_back(s / static_cast<double>(count));
  }
  r.pooled = r.steps ? total / static_cast<double>(r.steps) : std::nan("");
  r.per_sequence_mean = mean_of(per_seq_valid);
  return r;
}

std::vector<BktModelSpec> default_bkt_models(int b, const EmOptions& em) {
  std::vector<BktModelSpec> models;
  const auto base = [](FeatureKind kind, int hist, RegressionMethod method) {
    ModelConfig c;
    c.features.kind = kind;
    c.features.history_len = hist;
    c.features.alphabet_size = 2;
    c.s1_psi.method = method;
    c.s1_xi.method = method;
    c.plugin = Plugin::hmm;
    return c;
  };
  models.push_back({"Spec-HMM", base(FeatureKind::discrete_indicator, 1, RegressionMethod::ols), {}});
  models.push_back({"Feat-HMM", base(FeatureKind::discrete_joint_history, b, RegressionMethod::ols), {}});
  models.push_back({"LR-HMM", base(FeatureKind::binary_history, b, RegressionMethod::logistic), {}});
  EmOptions e = em;
  e.n_states = 2;
  e.n_obs = 2;
  models.push_back({"EM", {}, e});
  return models;
}

double BktResult::mean_mae(std::size_t m) const { return mean_of(mae.at(m)); }
double BktResult::mean_seconds(std::size_t m) const { return mean_of(seconds.at(m)); }

double BktResult::win_rate(std::size_t a, std::size_t b) const {
  if (splits.empty()) return std::nan("");
  std::size_t wins = 0;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    if (mae[a][s] < mae[b][s]) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(splits.size());
}

std::size_t BktResult::index_of(const std::string& name) const {
  const auto it = std::find(models.begin(), models.end(), name);
  if (it == models.end()) throw ParameterError("no model named " + name);
  return static_cast<std::size_t>(it - models.begin());
}

BktResult run_bkt(const BktConfig& config) {
  if (config.n_splits < 1) throw ParameterError("n_splits must be >= 1");
  std::vector<ObservationSeq> data;
  if (config.data_csv) {
    data = read_sequences(*config.data_csv);
  } else {
    data = sample_bkt(config.params, config.n_seqs, config.min_len, config.max_len, config.seed);
  }
  if (config.n_train + config.n_test > data.size()) {
    throw ParameterError("n_train + n_test exceeds the number of sequences");
  }
  const std::vector<BktModelSpec> models =
      config.models.empty() ? default_bkt_models(config.history_len, config.em) : config.models;
  const HmmParams truth = config.params.to_hmm();

  BktResult result;
  for (const auto& m : models) result.models.push_back(m.name);
  result.mae.resize(models.size());
  result.mae_seq.resize(models.size());
  result.seconds.resize(models.size());

  struct SplitOutcome {
    bool ok = false;
    std::string error;
    std::vector<double> mae, mae_seq, seconds;
    double oracle = 0.0;
  };
  std::vector<SplitOutcome> outcomes(static_cast<std::size_t>(config.n_splits));

  const auto run_split = [&](int split) {
    SplitOutcome& out = outcomes[static_cast<std::size_t>(split)];
    Rng rng(config.seed, 1000000 + static_cast<std::uint64_t>(split));
    const auto perm = permutation(data.size(), rng);
    std::vector<ObservationSeq> train, test;
    for (std::size_t i = 0; i < config.n_train; ++i) train.push_back(data[perm[i]]);
    for (std::size_t i = 0; i < config.n_test; ++i) test.push_back(data[perm[config.n_train + i]]);
    try {
      for (const auto& m : models) {
        const auto t0 = std::chrono::steady_clock::now();
        BinaryPredictor predictor;
        if (m.em) {
          EmOptions e = *m.em;
          e.seed = config.seed + 7919ULL * static_cast<std::uint64_t>(split + 1);
          const EmResult fit = fit_em_hmm(train, e);
          const auto t1 = std::chrono::steady_clock::now();
          out.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
          predictor = predictor_for(fit.params);
        } else {
          const PredictiveModel model = train_model(train, m.config);
          const auto t1 = std::chrono::steady_clock::now();
          out.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
          predictor = predictor_for(model);
        }
        const MaeResult r = evaluate_mae(predictor, test, config.warmup);
        out.mae.push_back(r.pooled);
        out.mae_seq.push_back(r.per_sequence_mean);
      }
      if (!config.data_csv) out.oracle = evaluate_mae(predictor_for(truth), test, config.warmup).pooled;
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  // Each split owns its slot, so the merged result does not depend on scheduling.
  const int workers = std::max(
      1, std::min(config.n_splits,
                  config.threads > 0 ? config.threads
                                     : static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int s = next++; s < config.n_splits; s = next++) run_split(s);
    });
  }
  for (auto& t : pool) t.join();

  for (int split = 0; split < config.n_splits; ++split) {
    const SplitOutcome& o = outcomes[static_cast<std::size_t>(split)];
    if (!o.ok) {
      result.failures.push_back("split " + std::to_string(split) + ": " + o.error);
      continue;
    }
    result.splits.push_back(split);
    for (std::size_t m = 0; m < models.size(); ++m) {
      result.mae[m].push_back(o.mae[m]);
      result.mae_seq[m].push_back(o.mae_seq[m]);
      result.seconds[m].push_back(o.seconds[m]);
    }
    if (!config.data_csv) result.oracle_mae.push_back(o.oracle);
  }
  return result;
}

BktConfig bkt_config_from_json(const Json& j) {
  BktConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("generator")) {
    const Json& g = j.at("generator");
    if (g.contains("params")) c.params = bkt_params_from_json(g.at("params"));
    c.n_seqs = get_or(g, "n_seqs", c.n_seqs);
    c.min_len = get_or(g, "min_len", c.min_len);
    c.max_len = get_or(g, "max_len", c.max_len);
  }
  if (j.contains("split")) {
    const Json& s = j.at("split");
    c.n_train = get_or(s, "n_train", c.n_train);
    c.n_test = get_or(s, "n_test", c.n_test);
    c.n_splits = get_or(s, "n_splits", c.n_splits);
  }
  c.history_len = get_or(j, "history_len", c.history_len);
  c.warmup = get_or(j, "warmup", c.warmup);
  c.threads = get_or(j, "threads", c.threads);
  if (j.contains("em")) {
    const Json& e = j.at("em");
    c.em.restarts = get_or(e, "restarts", c.em.restarts);
    c.em.n_iters = get_or(e, "n_iters", c.em.n_iters);
    c.em.tol = get_or(e, "tol", c.em.tol);
  }
  if (j.contains("data_csv") && !j.at("data_csv").is_null()) {
    c.data_csv = j.at("data_csv").get<std::string>();
  }
  if (j.contains("models")) {
    for (const Json& m : j.at("models")) {
      BktModelSpec spec;
      spec.name = m.at("name").get<std::string>();
      if (m.contains("em")) {
        EmOptions e = c.em;
        e.n_states = get_or(m.at("em"), "n_states", 2);
        e.n_obs = 2;
        e.restarts = get_or(m.at("em"), "restarts", e.restarts);
        e.n_iters = get_or(m.at("em"), "n_iters", e.n_iters);
        spec.em = e;
      } else {
        spec.config = model_config_from_json(m.at("config"));
      }
      c.models.push_back(spec);
    }
    if (c.models.empty()) throw ParameterError("model list must be nonempty");
  }
  if (c.n_splits < 1) throw ParameterError("n_splits must be >= 1");
  if (c.min_len < 1 || c.max_len < c.min_len) throw ParameterError("invalid length range");
  return c;
}

double block_mass(const Eigen::VectorXd& u) {
  const Eigen::VectorXd a = u.cwiseAbs();
  const double total = a.sum();
  if (!(total > 0.0)) return 0.0;
  return std::max(a.segment(0, 10).sum(), a.segment(10, 10).sum()) / total;
}

double noise_mass(const Eigen::VectorXd& u) {
  const Eigen::VectorXd a = u.cwiseAbs();
  const double total = a.sum();
  return total > 0.0 ? a.tail(u.size() - 20).sum() / total : 0.0;
}

double mean_coordinate(const Eigen::VectorXd& u) {
  const Eigen::VectorXd a = u.cwiseAbs();
  const double total = a.sum();
  if (!(total > 0.0)) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += static_cast<double>(i) * a(i);
  return s / total;
}

Eigen::MatrixXd order_by_mean_coordinate(const Eigen::MatrixXd& basis) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(basis.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> key;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) key.push_back(mean_coordinate(basis.col(j)));
  std::stable_sort(idx.begin(), idx.end(), [&key](Eigen::Index a, Eigen::Index b) {
    return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
  });
  Eigen::MatrixXd out(basis.rows(), basis.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = basis.col(idx[j]);
  return out;
}

LassoSeedResult run_lasso_seed(std::uint64_t seed, std::size_t n, double alpha, int top) {
  const LdsParams params = make_subsystem_lds(seed);
  const LdsSample sample = sample_lds(params, n + 2, seed);
  FeatureSpec spec;
  spec.kind = FeatureKind::stacked_window;
  spec.obs_dim = params.obs_dim();
  spec.k = 1;
  spec.history_len = 1;
  spec.min_seq_len = 1;
  const TripletDataset data = extract_triplets({sample.seq}, spec);

  LassoSeedResult r;
  r.seed = seed;
  const Basis cov = learn_basis(future_history_moment(data), top);
  const FittedRegressor lasso = fit_lasso(data.H, data.Psi, alpha);
  const Basis lb = learn_basis(lasso.weights, top);
  r.unconverged_outputs = lasso.unconverged_outputs;
  r.kkt_residual = lasso.kkt_residual;
  r.cov_basis = order_by_mean_coordinate(cov.U);
  r.lasso_basis = order_by_mean_coordinate(lb.U);
  for (int j = 0; j < top; ++j) {
    r.cov_block_mass += block_mass(r.cov_basis.col(j)) / top;
    r.lasso_block_mass += block_mass(r.lasso_basis.col(j)) / top;
    r.cov_noise_mass += noise_mass(r.cov_basis.col(j)) / top;
    r.lasso_noise_mass += noise_mass(r.lasso_basis.col(j)) / top;
  }
  return r;
}

LassoReport run_lasso_subsystems(const LassoConfig& config) {
  if (config.seeds.empty()) throw ParameterError("lasso experiment needs at least one seed");
  LassoReport report;
  for (auto s : config.seeds) {
    report.seeds.push_back(run_lasso_seed(s, config.n, config.alpha, config.top));
  }
  const double k = static_cast<double>(report.seeds.size());
  for (const auto& r : report.seeds) {
    report.mean_cov_block_mass += r.cov_block_mass / k;
    report.mean_lasso_block_mass += r.lasso_block_mass / k;
    report.mean_lasso_noise_mass += r.lasso_noise_mass / k;
  }
  return report;
}

LassoConfig lasso_config_from_json(const Json& j) {
  LassoConfig c;
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.n = get_or(j, "n", c.n);
  c.alpha = get_or(j, "alpha", c.alpha);
  c.top = get_or(j, "top", c.top);
  if (c.top < 1 || c.top > 30) throw ParameterError("top must be in [1, 30]");
  if (c.alpha < 0.0) throw ParameterError("alpha must be >= 0");
  return c;
}

ConvergenceConfig convergence_config_from_json(const Json& j) {
  ConvergenceConfig c;
  ConvergenceSpec& s = c.system;
  s.n_states = get_or(j, "n_states", s.n_states);
  s.n_obs = get_or(j, "n_obs", s.n_obs);
  s.system_seed = get_or(j, "system_seed", s.system_seed);
  s.stickiness = get_or(j, "stickiness", s.stickiness);
  s.train_seq_len = get_or(j, "train_seq_len", s.train_seq_len);
  s.test_seqs = get_or(j, "test_seqs", s.test_seqs);
  s.test_len = get_or(j, "test_len", s.test_len);
  if (j.contains("s2_lambda") && !j.at("s2_lambda").is_null()) s.s2_lambda = j.at("s2_lambda").get<double>();
  if (j.contains("lambda_rule")) s.lambda_rule = lambda_rule_from_string(j.at("lambda_rule").get<std::string>());
  if (j.contains("ns")) c.ns = j.at("ns").get<std::vector<int>>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("lambdas")) c.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (c.ns.empty() || c.seeds.empty()) throw ParameterError("ns and seeds must be nonempty");
  return c;
}

BoundsConfig bounds_config_from_json(const Json& j) {
  BoundsConfig c;
  c.sampler.kind = sampler_kind_from_string(get_or<std::string>(j, "sampler", "basis-uniform"));
  c.sampler.dim = get_or(j, "dim", c.sampler.dim);
  if (j.contains("ns")) c.ns = j.at("ns").get<std::vector<int>>();
  c.delta = get_or(j, "delta", c.delta);
  c.trials = get_or(j, "trials", c.trials);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  if (c.trials < 1 || c.ns.empty()) throw ParameterError("trials and ns must be positive");
  return c;
}

namespace {

Json write_bkt(const BktConfig& cfg, const BktResult& r, const std::string& hash,
               const std::filesystem::path& out) {
  const std::string head = artifact_header(hash, cfg.seed);
  {
    auto f = open_csv(out / "result_table.csv", head);
    f << "split,model,mae,mae_per_seq\n";
    for (std::size_t s = 0; s < r.splits.size(); ++s) {
      for (std::size_t m = 0; m < r.models.size(); ++m) {
        f << r.splits[s] << ',' << r.models[m] << ',' << fmt(r.mae[m][s]) << ','
          << fmt(r.mae_seq[m][s]) << '\n';
      }
    }
  }
  for (std::size_t a = 0; a < r.models.size(); ++a) {
    for (std::size_t b = a + 1; b < r.models.size(); ++b) {
      auto f = open_csv(out / ("scatter_" + file_safe(r.models[a]) + "_vs_" + file_safe(r.models[b]) + ".csv"), head);
      f << "split," << r.models[a] << ',' << r.models[b] << '\n';
      for (std::size_t s = 0; s < r.splits.size(); ++s) {
        f << r.splits[s] << ',' << fmt(r.mae[a][s]) << ',' << fmt(r.mae[b][s]) << '\n';
      }
    }
  }
  {
    auto f = open_csv(out / "summary.csv", head);
    f << "model,mean_mae,mean_mae_per_seq,win_rate_vs_first\n";
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      f << r.models[m] << ',' << fmt(r.mean_mae(m)) << ',' << fmt(mean_of(r.mae_seq[m])) << ','
        << fmt(r.win_rate(m, 0)) << '\n';
    }
    if (!r.oracle_mae.empty()) f << "oracle," << fmt(mean_of(r.oracle_mae)) << ",,\n";
  }
  {
    // Wall-clock times differ between runs; kept apart from the reproducible tables.
    auto f = open_csv(out / "timing.csv", head);
    f << "model,mean_seconds,relative_to_first\n";
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      f << r.models[m] << ',' << fmt(r.mean_seconds(m)) << ','
        << fmt(r.mean_seconds(m) / r.mean_seconds(0)) << '\n';
    }
  }
  Json summary = Json::object();
  for (std::size_t m = 0; m < r.models.size(); ++m) summary[r.models[m]] = r.mean_mae(m);
  return {{"n_successful_splits", r.splits.size()}, {"failures", r.failures}, {"mean_mae", summary}};
}

Json write_lasso(const LassoConfig& cfg, const LassoReport& r, const std::string& hash,
                 const std::filesystem::path& out) {
  const std::uint64_t seed = cfg.seeds.front();
  const std::string head = artifact_header(hash, seed);
  {
    auto f = open_csv(out / "lasso_summary.csv", head);
    f << "seed,cov_block_mass,lasso_block_mass,cov_noise_mass,lasso_noise_mass,kkt_residual,"
         "unconverged_outputs\n";
    for (const auto& s : r.seeds) {
      f << s.seed << ',' << fmt(s.cov_block_mass) << ',' << fmt(s.lasso_block_mass) << ','
        << fmt(s.cov_noise_mass) << ',' << fmt(s.lasso_noise_mass) << ',' << fmt(s.kkt_residual)
        << ',' << s.unconverged_outputs.size() << '\n';
    }
  }
  const auto write_basis = [&](const Eigen::MatrixXd& b, const std::string& name) {
    auto f = open_csv(out / name, head);
    f << "dim";
    for (Eigen::Index j = 0; j < b.cols(); ++j) f << ",v" << j + 1;
    f << '\n';
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      f << i + 1;
      for (Eigen::Index j = 0; j < b.cols(); ++j) f << ',' << fmt(b(i, j));
      f << '\n';
    }
  };
  write_basis(r.seeds.front().cov_basis, "basis_covariance.csv");
  write_basis(r.seeds.front().lasso_basis, "basis_lasso.csv");
  return {{"mean_cov_block_mass", r.mean_cov_block_mass},
          {"mean_lasso_block_mass", r.mean_lasso_block_mass},
          {"mean_lasso_noise_mass", r.mean_lasso_noise_mass}};
}

Json write_convergence(const ConvergenceConfig& cfg, const std::string& hash,
                       const std::filesystem::path& out) {
  const std::string head = artifact_header(hash, cfg.system.system_seed);
  const auto cells = convergence_grid(cfg.system, cfg.ns, cfg.seeds);
  {
    auto f = open_csv(out / "convergence_cells.csv", head);
    f << "n,seed,lambda,error,ok\n";
    for (const auto& c : cells) {
      f << c.n << ',' << c.seed << ',' << fmt(c.lambda) << ',' << fmt(c.error) << ','
        << (c.ok ? 1 : 0) << '\n';
    }
  }
  const auto curve = convergence_curve(cells);
  {
    auto f = open_csv(out / "convergence_curve.csv", head);
    f << "n,median_error\n";
    for (const auto& row : curve) f << row.n << ',' << fmt(row.median_error) << '\n';
  }
  Json meta = {{"exact_moment_error", exact_moment_error(cfg.system)}};
  if (!cfg.lambdas.empty()) {
    const int n = *std::max_element(cfg.ns.begin(), cfg.ns.end());
    const auto sweep = lambda_sweep(cfg.system, n, cfg.lambdas, cfg.seeds);
    auto f = open_csv(out / "lambda_sweep.csv", head);
    f << "lambda,median_error\n";
    for (const auto& [lam, err] : sweep) f << fmt(lam) << ',' << fmt(err) << '\n';
  }
  Json rows = Json::array();
  for (const auto& row : curve) rows.push_back({{"n", row.n}, {"median_error", row.median_error}});
  meta["curve"] = rows;
  return meta;
}

Json write_bounds(const BoundsConfig& cfg, const std::string& hash, const std::filesystem::path& out) {
  const std::string head = artifact_header(hash, cfg.seed);
  Json reports = Json::array();
  auto f = open_csv(out / "coverage.csv", head);
  f << "n,zeta_xx,zeta_xy,trials,violations,rate,std_error,wilson_upper,threshold\n";
  for (int n : cfg.ns) {
    const CoverageResult c = check_cov_coverage(cfg.sampler, n, cfg.delta, cfg.trials, cfg.seed);
    f << n << ',' << fmt(c.zeta_xx) << ',' << fmt(c.zeta_xy) << ',' << c.trials << ','
      << c.violations << ',' << fmt(c.rate) << ',' << fmt(c.std_error) << ','
      << fmt(c.wilson_upper) << ',' << fmt(c.threshold) << '\n';
    const BoundInputs pop = cfg.sampler.population(n, cfg.delta);
    reports.push_back({{"n", n},
                       {"inputs", to_json(pop)},
                       {"zeta_xx", to_json(zeta_xx(pop))},
                       {"zeta_xy", to_json(zeta_xy(pop))},
                       {"violation_rate", c.rate},
                       {"wilson_upper", c.wilson_upper},
                       {"threshold", c.threshold}});
  }
  write_json({{"config_hash", hash}, {"seed", cfg.seed}, {"reports", reports}}, out / "bounds_report.json");
  return {{"reports", reports}};
}

}  // namespace

Json run_experiment(const std::string& id, const Json& config, const std::filesystem::path& out_dir) {
  const std::string name = id.empty() ? config.at("experiment").get<std::string>() : id;
  std::filesystem::create_directories(out_dir);
  Json effective = config;
  effective["experiment"] = name;
  const std::string hash = config_hash(effective);
  Json meta = {{"experiment", name}, {"config_hash", hash}, {"config", effective}};
  if (name == "bkt") {
    const BktConfig cfg = bkt_config_from_json(config);
    meta["seed"] = cfg.seed;
    meta["result"] = write_bkt(cfg, run_bkt(cfg), hash, out_dir);
  } else if (name == "lasso_subsystems") {
    const LassoConfig cfg = lasso_config_from_json(config);
    meta["seed"] = cfg.seeds.front();
    meta["result"] = write_lasso(cfg, run_lasso_subsystems(cfg), hash, out_dir);
  } else if (name == "convergence") {
    const ConvergenceConfig cfg = convergence_config_from_json(config);
    meta["seed"] = cfg.system.system_seed;
    meta["result"] = write_convergence(cfg, hash, out_dir);
  } else if (name == "bounds") {
    const BoundsConfig cfg = bounds_config_from_json(config);
    meta["seed"] = cfg.seed;
    meta["result"] = write_bounds(cfg, hash, out_dir);
  } else {
    throw ParameterError("unknown experiment '" + name + "'");
  }
  write_json(meta, out_dir / "metadata.json");
  return meta;
}

}  // namespace ivpsr
