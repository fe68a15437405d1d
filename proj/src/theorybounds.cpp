#include "ivpsr/theorybounds.hpp"

#include <algorithm>
#include <cmath>

#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/linalg.hpp"
#include "ivpsr/rng.hpp"
#include "ivpsr/seqdata.hpp"
#include "ivpsr/twostage.hpp"

namespace ivpsr {

namespace {

BoundResult zeta_form(double r, double v, double k, double n, double delta) {
  const double t = std::max(2.6, 2.0 * std::log(4.0 * k / (delta * v)));
  BoundResult res;
  res.value = std::sqrt(2.0 * v * t / n) + r * t / (3.0 * n);
  res.intermediates = {{"r", r}, {"v", v}, {"k", k}, {"t", t}};
  return res;
}

ModelConfig spectral_config(const ConvergenceSpec& spec, std::optional<double> lambda) {
  ModelConfig cfg;
  cfg.features.kind = FeatureKind::discrete_indicator;
  cfg.features.alphabet_size = spec.n_obs;
  cfg.features.min_seq_len = 1;
  cfg.s1_psi.method = RegressionMethod::ols;
  cfg.s1_xi.method = RegressionMethod::ols;
  cfg.plugin = Plugin::hmm;
  cfg.rank = spec.n_states < spec.n_obs ? spec.n_states : 0;
  cfg.s2_lambda = lambda;
  cfg.s2_lambda_rule = spec.lambda_rule;
  return cfg;
}

double held_out_error(const PredictiveModel& model, const HmmParams& hmm,
                      const std::vector<ObservationSeq>& test) {
  double total = 0.0;
  std::size_t steps = 0;
  for (const auto& seq : test) {
    const FilterTrace trace = run_filter(model, seq);
    const ForwardResult oracle = hmm_forward(hmm, seq.symbols());
    for (std::size_t t = 0; t < seq.length(); ++t, ++steps) {
      total += (trace.predictions[t].probs - oracle.predictive.col(static_cast<Eigen::Index>(t)))
                   .lpNorm<1>();
    }
  }
  return total / static_cast<double>(steps);
}

HmmParams convergence_system(const ConvergenceSpec& spec) {
  return random_hmm(spec.n_states, spec.n_obs, spec.system_seed, spec.stickiness);
}

std::vector<ObservationSeq> test_sequences(const ConvergenceSpec& spec, const HmmParams& hmm) {
  return sample_hmm(hmm, static_cast<std::size_t>(spec.test_len),
                    static_cast<std::size_t>(spec.test_seqs), spec.system_seed + 7919);
}

}  // namespace

void BoundInputs::validate() const {
  if (!(c > 0.0 && lambda1_x > 0.0 && lambda1_y > 0.0 && tr_x > 0.0 && tr_y > 0.0 && n > 0.0)) {
    throw ParameterError("bound inputs must be positive");
  }
  if (!(norm_yx >= 0.0)) throw ParameterError("norm_yx must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
}

BoundResult zeta_xy(const BoundInputs& in) {
  in.validate();
  const double c2 = in.c * in.c;
  return zeta_form(c2 + in.norm_yx, c2 * std::max(in.lambda1_y, in.lambda1_x) + in.norm_yx * in.norm_yx,
                   c2 * (in.tr_x + in.tr_y), in.n, in.delta);
}

BoundResult zeta_xx(const BoundInputs& in) {
  in.validate();
  const double c2 = in.c * in.c;
  return zeta_form(c2 + in.lambda1_x, c2 * in.lambda1_x + in.lambda1_x * in.lambda1_x,
                   c2 * in.tr_x, in.n, in.delta);
}

BoundResult eta_ols(double d_x, double d_y, double d_z, double n, double delta, double scale) {
  if (!(d_x >= 1 && d_y >= 1 && d_z >= 1)) throw ParameterError("dimensions must be >= 1");
  if (!(n > 0.0) || !(delta > 0.0 && delta < 1.0) || !(scale > 0.0)) {
    throw ParameterError("eta_ols: invalid n, delta or scale");
  }
  BoundResult res;
  const double rate = std::sqrt(d_z / n);
  const double log_factor = std::log((d_x + d_y) / delta);
  res.value = scale * rate * log_factor;
  res.intermediates = {{"rate", rate}, {"log_factor", log_factor}, {"scale", scale}};
  return res;
}

std::string to_string(SamplerKind kind) {
  return kind == SamplerKind::basis_uniform ? "basis-uniform" : "point-mass";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "basis-uniform" || name == "basis_uniform") return SamplerKind::basis_uniform;
  if (name == "point-mass" || name == "point_mass") return SamplerKind::point_mass;
  throw ParameterError("unknown sampler '" + name + "'");
}

BoundInputs SamplerSpec::population(double n, double delta) const {
  if (dim < 1) throw ParameterError("sampler dimension must be >= 1");
  BoundInputs in;
  in.c = 1.0;
  in.n = n;
  in.delta = delta;
  if (kind == SamplerKind::basis_uniform) {
    in.lambda1_x = in.lambda1_y = 1.0 / dim;
    in.tr_x = in.tr_y = 1.0;
    in.norm_yx = 0.0;
  } else {
    in.lambda1_x = in.lambda1_y = 1.0;
    in.tr_x = in.tr_y = 1.0;
    in.norm_yx = 1.0;
  }
  return in;
}

CoverageResult check_cov_coverage(const SamplerSpec& sampler, int n, double delta, int trials,
                                  std::uint64_t seed) {
  if (n < 1 || trials < 1) throw ParameterError("coverage: n and trials must be >= 1");
  const BoundInputs pop = sampler.population(n, delta);
  CoverageResult res;
  res.trials = trials;
  res.zeta_xx = zeta_xx(pop).value;
  res.zeta_xy = zeta_xy(pop).value;
  const int d = sampler.dim;

  Eigen::MatrixXd sxx(d, d), syx(d, d);
  if (sampler.kind == SamplerKind::basis_uniform) {
    sxx = Eigen::MatrixXd::Identity(d, d) / d;
    syx.setZero();
  } else {
    sxx.setZero();
    sxx(0, 0) = 1.0;
    syx = sxx;
  }

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(seed, static_cast<std::uint64_t>(trial));
    Eigen::MatrixXd hxx = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd hyx = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(d), y = Eigen::VectorXd::Zero(d);
      if (sampler.kind == SamplerKind::basis_uniform) {
        x(rng.uniform_int(0, d - 1)) = rng.uniform() < 0.5 ? -1.0 : 1.0;
        y(rng.uniform_int(0, d - 1)) = rng.uniform() < 0.5 ? -1.0 : 1.0;
      } else {
        x(0) = 1.0;
        y(0) = 1.0;
      }
      hxx += x * x.transpose();
      hyx += y * x.transpose();
    }
    hxx /= n;
    hyx /= n;
    const bool violated = operator_norm(hxx - sxx) >= res.zeta_xx ||
                          operator_norm(hyx - syx) >= res.zeta_xy;
    if (violated) ++res.violations;
  }
  const double t = trials;
  res.rate = res.violations / t;
  res.std_error = std::sqrt(res.rate * (1.0 - res.rate) / t);
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / t;
  const double centre = (res.rate + z * z / (2.0 * t)) / denom;
  const double half = z * std::sqrt(res.rate * (1.0 - res.rate) / t + z * z / (4.0 * t * t)) / denom;
  res.wilson_upper = centre + half;
  const double p0 = delta / 2.0;
  res.threshold = p0 + 3.0 * std::sqrt(p0 * (1.0 - p0) / t);
  return res;
}

ConvergenceCell convergence_cell(const ConvergenceSpec& spec, int n, std::uint64_t seed,
                                 std::optional<double> lambda) {
  ConvergenceCell cell;
  cell.n = n;
  cell.seed = seed;
  try {
    const HmmParams hmm = convergence_system(spec);
    const int per_seq = spec.train_seq_len - 2;
    if (per_seq < 1) throw ParameterError("train_seq_len must be >= 3");
    const int n_seqs = (n + per_seq - 1) / per_seq;
    const auto train = sample_hmm(hmm, static_cast<std::size_t>(spec.train_seq_len),
                                  static_cast<std::size_t>(n_seqs), seed);
    const PredictiveModel model = train_model(train, spectral_config(spec, lambda));
    cell.lambda = model.lambda;
    cell.error = held_out_error(model, hmm, test_sequences(spec, hmm));
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.failure = e.what();
  }
  return cell;
}

std::vector<ConvergenceCell> convergence_grid(const ConvergenceSpec& spec,
                                              const std::vector<int>& ns,
                                              const std::vector<std::uint64_t>& seeds) {
  std::vector<ConvergenceCell> cells;
  for (int n : ns) {
    for (auto s : seeds) cells.push_back(convergence_cell(spec, n, s, spec.s2_lambda));
  }
  return cells;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::vector<ConvergenceRow> convergence_curve(const std::vector<ConvergenceCell>& cells) {
  std::vector<int> ns;
  for (const auto& c : cells) {
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
  }
  std::vector<ConvergenceRow> rows;
  for (int n : ns) {
    std::vector<double> errs;
    for (const auto& c : cells) {
      if (c.n == n && c.ok) errs.push_back(c.error);
    }
    rows.push_back({n, median(errs)});
  }
  return rows;
}

double exact_moment_error(const ConvergenceSpec& spec) {
  const HmmParams hmm = convergence_system(spec);
  ModelConfig cfg = spectral_config(spec, 0.0);
  const TripletDataset raw = exact_triplets(hmm, cfg.features, hmm.stationary());
  const PredictiveModel model =
      train_model_from_dataset(raw, cfg, exact_initial_state(hmm, cfg.features, hmm.initial));
  return held_out_error(model, hmm, test_sequences(spec, hmm));
}

std::vector<std::pair<double, double>> lambda_sweep(const ConvergenceSpec& spec, int n,
                                                    const std::vector<double>& lambdas,
                                                    const std::vector<std::uint64_t>& seeds) {
  std::vector<std::pair<double, double>> out;
  for (double lam : lambdas) {
    std::vector<double> errs;
    for (auto s : seeds) {
      const ConvergenceCell c = convergence_cell(spec, n, s, lam);
      if (c.ok) errs.push_back(c.error);
    }
    out.emplace_back(lam, median(errs));
  }
  return out;
}

}  // namespace ivpsr
