#include "ivpsr/serialization.hpp"

#include <cstdio>
#include <fstream>

namespace ivpsr {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (j.is_array()) {
    // nested rows
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Json& row = j.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("ragged matrix rows");
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
  }
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw FormatError("matrix data size");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data.at(k++).get<double>();
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

Json to_json(const HmmParams& p) {
  return {{"n_states", p.n_states()},
          {"transition", matrix_to_json(p.transition)},
          {"emission", matrix_to_json(p.emission)},
          {"initial", vector_to_json(p.initial)}};
}

HmmParams hmm_params_from_json(const Json& j) {
  HmmParams p;
  p.transition = matrix_from_json(j.at("transition"));
  p.emission = matrix_from_json(j.at("emission"));
  p.initial = vector_from_json(j.at("initial"));
  p.validate();
  return p;
}

Json to_json(const BktParams& p) {
  return {{"p_init_learned", p.p_init_learned}, {"p_learn", p.p_learn}, {"p_forget", p.p_forget},
          {"p_guess", p.p_guess}, {"p_slip", p.p_slip}};
}

BktParams bkt_params_from_json(const Json& j) {
  BktParams p;
  p.p_init_learned = get_or(j, "p_init_learned", p.p_init_learned);
  p.p_learn = get_or(j, "p_learn", p.p_learn);
  p.p_forget = get_or(j, "p_forget", p.p_forget);
  p.p_guess = get_or(j, "p_guess", p.p_guess);
  p.p_slip = get_or(j, "p_slip", p.p_slip);
  p.to_hmm().validate();
  return p;
}

Json to_json(const LdsParams& p) {
  return {{"n_states", p.n_states()},
          {"transition", matrix_to_json(p.transition)},
          {"observation", matrix_to_json(p.observation)},
          {"state_noise_cov", matrix_to_json(p.state_noise_cov)},
          {"obs_noise_cov", matrix_to_json(p.obs_noise_cov)},
          {"initial_mean", vector_to_json(p.initial_mean)},
          {"initial_cov", matrix_to_json(p.initial_cov)}};
}

LdsParams lds_params_from_json(const Json& j) {
  LdsParams p;
  p.transition = matrix_from_json(j.at("transition"));
  p.observation = matrix_from_json(j.at("observation"));
  p.state_noise_cov = matrix_from_json(j.at("state_noise_cov"));
  p.obs_noise_cov = matrix_from_json(j.at("obs_noise_cov"));
  p.initial_mean = vector_from_json(j.at("initial_mean"));
  p.initial_cov = matrix_from_json(j.at("initial_cov"));
  p.validate();
  return p;
}

Json to_json(const Basis& b) {
  return {{"U", matrix_to_json(b.U)},
          {"singular_values", vector_to_json(b.singular_values)},
          {"numerical_rank", b.numerical_rank}};
}

Basis basis_from_json(const Json& j) {
  Basis b;
  b.U = matrix_from_json(j.at("U"));
  b.singular_values = vector_from_json(j.at("singular_values"));
  b.numerical_rank = get_or(j, "numerical_rank", static_cast<int>(b.U.cols()));
  return b;
}

Json to_json(const FeatureSpec& s) {
  Json j = {{"kind", to_string(s.kind)},      {"k", s.k},
            {"history_len", s.history_len},   {"alphabet_size", s.alphabet_size},
            {"obs_dim", s.obs_dim},           {"min_seq_len", s.min_seq_len}};
  if (s.projection) j["projection"] = to_json(*s.projection);
  return j;
}

FeatureSpec feature_spec_from_json(const Json& j) {
  FeatureSpec s;
  s.kind = feature_kind_from_string(j.at("kind").get<std::string>());
  s.k = get_or(j, "k", s.k);
  s.history_len = get_or(j, "history_len", s.history_len);
  s.alphabet_size = get_or(j, "alphabet_size", s.alphabet_size);
  s.obs_dim = get_or(j, "obs_dim", s.obs_dim);
  s.min_seq_len = get_or(j, "min_seq_len", s.min_seq_len);
  if (j.contains("projection") && !j.at("projection").is_null()) {
    s.projection = basis_from_json(j.at("projection"));
  }
  s.validate();
  return s;
}

Json to_json(const Kernel& k) {
  Json j = {{"kind", to_string(k.kind)}};
  j["bandwidth"] = k.bandwidth ? Json(*k.bandwidth) : Json(nullptr);
  return j;
}

Kernel kernel_from_json(const Json& j) {
  Kernel k;
  k.kind = kernel_kind_from_string(get_or<std::string>(j, "kind", "rbf"));
  if (j.contains("bandwidth") && !j.at("bandwidth").is_null()) k.bandwidth = j.at("bandwidth").get<double>();
  return k;
}

Json to_json(const RegressorSpec& s) {
  return {{"method", to_string(s.method)}, {"lambda0", s.lambda0}, {"alpha", s.alpha},
          {"max_iter", s.max_iter},        {"tol", s.tol},         {"strict", s.strict},
          {"kernel", to_json(s.kernel)}};
}

RegressorSpec regressor_spec_from_json(const Json& j) {
  RegressorSpec s;
  s.method = regression_method_from_string(get_or<std::string>(j, "method", "ols"));
  s.lambda0 = get_or(j, "lambda0", s.lambda0);
  s.alpha = get_or(j, "alpha", s.alpha);
  s.max_iter = get_or(j, "max_iter", s.max_iter);
  s.tol = get_or(j, "tol", s.tol);
  s.strict = get_or(j, "strict", s.strict);
  if (j.contains("kernel")) s.kernel = kernel_from_json(j.at("kernel"));
  s.validate();
  return s;
}

Json to_json(const FittedRegressor& r) {
  Json j = {{"method", to_string(r.method)},
            {"weights", matrix_to_json(r.weights)},
            {"intercept", vector_to_json(r.intercept)},
            {"residual_cov", matrix_to_json(r.residual_cov)},
            {"n_train", r.n_train},
            {"d_in", r.d_in},
            {"d_out", r.d_out},
            {"converged", r.converged},
            {"rank_fallback", r.rank_fallback}};
  if (r.method == RegressionMethod::lasso) j["kkt_residual"] = r.kkt_residual;
  return j;
}

Json to_json(const ModelConfig& c) {
  Json j = {{"features", to_json(c.features)},
            {"s1_psi", to_json(c.s1_psi)},
            {"s1_xi", to_json(c.s1_xi)},
            {"plugin", to_string(c.plugin)},
            {"rank", c.rank},
            {"basis_source", to_string(c.basis_source)},
            {"initial_state", to_string(c.initial_state)},
            {"normalizer", to_string(c.normalizer)},
            {"clamp_eps", c.clamp_eps}};
  j["s2_lambda"] = c.s2_lambda ? Json(*c.s2_lambda) : Json(nullptr);
  j["s2_lambda_rule"] = to_string(c.s2_lambda_rule);
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  c.features = feature_spec_from_json(j.at("features"));
  if (j.contains("s1")) c.s1_psi = c.s1_xi = regressor_spec_from_json(j.at("s1"));
  if (j.contains("s1_psi")) c.s1_psi = regressor_spec_from_json(j.at("s1_psi"));
  if (j.contains("s1_xi")) c.s1_xi = regressor_spec_from_json(j.at("s1_xi"));
  c.plugin = plugin_from_string(get_or<std::string>(j, "plugin", "hmm"));
  if (j.contains("s2_lambda") && !j.at("s2_lambda").is_null()) c.s2_lambda = j.at("s2_lambda").get<double>();
  if (j.contains("s2_lambda_rule")) {
    c.s2_lambda_rule = lambda_rule_from_string(j.at("s2_lambda_rule").get<std::string>());
  }
  c.rank = get_or(j, "rank", c.rank);
  c.basis_source = basis_source_from_string(get_or<std::string>(j, "basis_source", "s1_weights"));
  c.initial_state = initial_state_mode_from_string(get_or<std::string>(j, "initial_state", "first_step"));
  c.normalizer = normalizer_mode_from_string(get_or<std::string>(j, "normalizer", "basis_sum"));
  c.clamp_eps = get_or(j, "clamp_eps", c.clamp_eps);
  if (c.rank < 0) throw ParameterError("rank must be >= 0");
  return c;
}

Json to_json(const PredictiveModel& m) {
  return {{"W", matrix_to_json(m.W)},
          {"offset", vector_to_json(m.offset)},
          {"q1", vector_to_json(m.q1)},
          {"spec", to_json(m.spec)},
          {"plugin", to_string(m.plugin)},
          {"lambda", m.lambda},
          {"clamp_eps", m.clamp_eps},
          {"b_inf", vector_to_json(m.b_inf)},
          {"n_triplets", m.info.n_triplets}};
}

PredictiveModel predictive_model_from_json(const Json& j) {
  PredictiveModel m;
  m.W = matrix_from_json(j.at("W"));
  m.offset = j.contains("offset") ? vector_from_json(j.at("offset")) : Eigen::VectorXd::Zero(m.W.rows());
  m.q1 = vector_from_json(j.at("q1"));
  m.spec = feature_spec_from_json(j.at("spec"));
  m.plugin = plugin_from_string(j.at("plugin").get<std::string>());
  m.lambda = get_or(j, "lambda", 0.0);
  m.clamp_eps = get_or(j, "clamp_eps", 1e-9);
  if (j.contains("b_inf")) m.b_inf = vector_from_json(j.at("b_inf"));
  m.info.n_triplets = get_or<std::size_t>(j, "n_triplets", 0);
  m.validate();
  return m;
}

Json to_json(const HmmOperators& ops) {
  Json b = Json::array();
  for (const auto& m : ops.B) b.push_back(matrix_to_json(m));
  Json j = {{"B", b}, {"b_inf", vector_to_json(ops.b_inf)}};
  j["basis"] = ops.basis ? to_json(*ops.basis) : Json(nullptr);
  return j;
}

Json to_json(const GaussianBelief& b) {
  return {{"mean", vector_to_json(b.mean)}, {"cov", matrix_to_json(b.cov)}};
}

GaussianBelief gaussian_belief_from_json(const Json& j) {
  return {vector_from_json(j.at("mean")), matrix_from_json(j.at("cov"))};
}

Json to_json(const KernelSpec& s) {
  return {{"history_kernel", to_json(s.history_kernel)},
          {"future_kernel", to_json(s.future_kernel)},
          {"obs_kernel", to_json(s.obs_kernel)},
          {"lambda0", s.lambda0},
          {"lambda", s.lambda},
          {"history_len", s.history_len},
          {"k", s.k},
          {"max_atoms", s.max_atoms},
          {"min_seq_len", s.min_seq_len}};
}

KernelSpec kernel_spec_from_json(const Json& j) {
  KernelSpec s;
  if (j.contains("kernel")) {
    s.history_kernel = s.future_kernel = s.obs_kernel = kernel_from_json(j.at("kernel"));
  }
  if (j.contains("history_kernel")) s.history_kernel = kernel_from_json(j.at("history_kernel"));
  if (j.contains("future_kernel")) s.future_kernel = kernel_from_json(j.at("future_kernel"));
  if (j.contains("obs_kernel")) s.obs_kernel = kernel_from_json(j.at("obs_kernel"));
  s.lambda0 = get_or(j, "lambda0", s.lambda0);
  s.lambda = get_or(j, "lambda", s.lambda);
  s.history_len = get_or(j, "history_len", s.history_len);
  s.k = get_or(j, "k", s.k);
  s.max_atoms = get_or(j, "max_atoms", s.max_atoms);
  s.min_seq_len = get_or(j, "min_seq_len", s.min_seq_len);
  s.validate();
  return s;
}

Json to_json(const BoundInputs& in) {
  return {{"c", in.c},         {"lambda1_x", in.lambda1_x}, {"lambda1_y", in.lambda1_y},
          {"tr_x", in.tr_x},   {"tr_y", in.tr_y},           {"norm_yx", in.norm_yx},
          {"n", in.n},         {"delta", in.delta}};
}

BoundInputs bound_inputs_from_json(const Json& j) {
  BoundInputs in;
  in.c = get_or(j, "c", in.c);
  in.lambda1_x = get_or(j, "lambda1_x", in.lambda1_x);
  in.lambda1_y = get_or(j, "lambda1_y", in.lambda1_y);
  in.tr_x = get_or(j, "tr_x", in.tr_x);
  in.tr_y = get_or(j, "tr_y", in.tr_y);
  in.norm_yx = get_or(j, "norm_yx", in.norm_yx);
  in.n = get_or(j, "n", in.n);
  in.delta = get_or(j, "delta", in.delta);
  in.validate();
  return in;
}

Json to_json(const BoundResult& r) {
  Json inter = Json::object();
  for (const auto& [k, v] : r.intermediates) inter[k] = v;
  return {{"value", r.value}, {"intermediates", inter}};
}

std::string config_hash(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ivpsr
