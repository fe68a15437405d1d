#include "ivpsr/features.hpp"

#include <algorithm>
#include <cmath>

#include "ivpsr/linalg.hpp"

namespace ivpsr {

namespace {

int int_pow(int base, int exp) {
  long result = 1;
  for (int i = 0; i < exp; ++i) {
    result *= base;
    if (result > (1L << 30)) throw ParameterError("FeatureSpec: feature dimension overflow");
  }
  return static_cast<int>(result);
}

Eigen::VectorXd one_hot(int index, int dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v(index) = 1.0;
  return v;
}

void check_symbols(const ObservationSeq& seq, const FeatureSpec& spec) {
  if (!seq.is_discrete()) throw ParameterError("discrete feature kind on a continuous sequence");
  for (int s : seq.symbols()) {
    if (s >= spec.alphabet_size) {
      throw ParameterError("symbol " + std::to_string(s) + " outside alphabet of size " +
                           std::to_string(spec.alphabet_size));
    }
  }
}

// Stacked observation window [o_begin; ...; o_{begin+len-1}].
Eigen::VectorXd stacked(const ObservationSeq& seq, std::size_t begin, int len) {
  const int d = seq.dim();
  Eigen::VectorXd v(d * len);
  for (int i = 0; i < len; ++i) {
    v.segment(i * d, d) = seq.values().col(static_cast<Eigen::Index>(begin) + i);
  }
  return v;
}

// Unprojected first-order psi starting at t.
Eigen::VectorXd raw_state(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec) {
  if (spec.discrete()) {
    return one_hot(joint_index(seq.symbols(), t, spec.k, spec.alphabet_size), spec.raw_state_dim());
  }
  return stacked(seq, t, spec.k);
}

Eigen::VectorXd project_state(const Eigen::VectorXd& raw, const FeatureSpec& spec) {
  if (!spec.projection) return raw;
  return spec.projection->U.transpose() * raw;
}

// First-order xi starting at t: e_{o_t} (x) psi_{t+1} or [o_t; psi_{t+1}].
Eigen::VectorXd extended_state(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec) {
  const Eigen::VectorXd next = project_state(raw_state(seq, t + 1, spec), spec);
  if (spec.discrete()) {
    const int m = static_cast<int>(next.size());
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(spec.alphabet_size * m);
    xi.segment(seq.symbol(t) * m, m) = next;
    return xi;
  }
  const int d = seq.dim();
  Eigen::VectorXd xi(d + next.size());
  xi.head(d) = seq.value(t);
  xi.tail(next.size()) = next;
  return xi;
}

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::discrete_indicator: return "discrete_indicator";
    case FeatureKind::discrete_joint_history: return "discrete_joint_history";
    case FeatureKind::binary_history: return "binary_history";
    case FeatureKind::stacked_window: return "stacked_window";
    case FeatureKind::moment_stacked_window: return "moment_stacked_window";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  for (auto kind : {FeatureKind::discrete_indicator, FeatureKind::discrete_joint_history,
                    FeatureKind::binary_history, FeatureKind::stacked_window,
                    FeatureKind::moment_stacked_window}) {
    if (to_string(kind) == name) return kind;
  }
  throw ParameterError("unknown feature kind '" + name + "'");
}

bool FeatureSpec::discrete() const {
  return kind == FeatureKind::discrete_indicator || kind == FeatureKind::discrete_joint_history ||
         kind == FeatureKind::binary_history;
}

int FeatureSpec::history_dim() const {
  switch (kind) {
    case FeatureKind::discrete_indicator: return history_len * alphabet_size;
    case FeatureKind::discrete_joint_history: return int_pow(alphabet_size, history_len);
    case FeatureKind::binary_history: return history_len;
    case FeatureKind::stacked_window:
    case FeatureKind::moment_stacked_window: return history_len * obs_dim;
  }
  return 0;
}

int FeatureSpec::raw_state_dim() const {
  return discrete() ? int_pow(alphabet_size, k) : obs_dim * k;
}

int FeatureSpec::state_dim() const { return projection ? projection->dim() : raw_state_dim(); }

int FeatureSpec::extended_state_dim() const {
  return discrete() ? alphabet_size * state_dim() : obs_dim + state_dim();
}

int FeatureSpec::future_dim() const {
  return moments() ? moment_dim(state_dim()) : state_dim();
}

int FeatureSpec::extended_dim() const {
  return moments() ? moment_dim(extended_state_dim()) : extended_state_dim();
}

void FeatureSpec::validate() const {
  if (k < 1) throw ParameterError("FeatureSpec: k must be >= 1");
  if (history_len < 1) throw ParameterError("FeatureSpec: history_len must be >= 1");
  if (min_seq_len < 1) throw ParameterError("FeatureSpec: min_seq_len must be >= 1");
  if (discrete() && alphabet_size < 1) throw ParameterError("FeatureSpec: alphabet_size must be >= 1");
  if (kind == FeatureKind::binary_history && alphabet_size != 2) {
    throw ParameterError("FeatureSpec: binary_history requires a binary alphabet");
  }
  if (!discrete() && obs_dim < 1) throw ParameterError("FeatureSpec: obs_dim must be >= 1");
  if (projection) {
    if (projection->U.rows() != raw_state_dim()) {
      throw ParameterError("FeatureSpec: projection rows must equal the raw future dimension");
    }
    if (projection->dim() < 1) throw ParameterError("FeatureSpec: empty projection");
  }
  (void)history_dim();
}

Eigen::VectorXd moment_stack(const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd out(d + d * d);
  out.head(d) = x;
  const Eigen::MatrixXd outer = x * x.transpose();
  out.tail(d * d) = Eigen::Map<const Eigen::VectorXd>(outer.data(), d * d);
  return out;
}

int joint_index(const std::vector<int>& symbols, std::size_t begin, int len, int n) {
  int index = 0;
  for (int i = 0; i < len; ++i) index = index * n + symbols.at(begin + static_cast<std::size_t>(i));
  return index;
}

Eigen::VectorXd history_features(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec) {
  const int b = spec.history_len;
  if (t < static_cast<std::size_t>(b)) throw std::out_of_range("history window precedes sequence start");
  const std::size_t begin = t - static_cast<std::size_t>(b);
  switch (spec.kind) {
    case FeatureKind::discrete_indicator: {
      const int n = spec.alphabet_size;
      Eigen::VectorXd h = Eigen::VectorXd::Zero(b * n);
      for (int i = 0; i < b; ++i) h(i * n + seq.symbol(begin + static_cast<std::size_t>(i))) = 1.0;
      return h;
    }
    case FeatureKind::discrete_joint_history:
      return one_hot(joint_index(seq.symbols(), begin, b, spec.alphabet_size), spec.history_dim());
    case FeatureKind::binary_history: {
      Eigen::VectorXd h(b);
      for (int i = 0; i < b; ++i) h(i) = seq.symbol(begin + static_cast<std::size_t>(i));
      return h;
    }
    case FeatureKind::stacked_window:
    case FeatureKind::moment_stacked_window: return stacked(seq, begin, b);
  }
  return {};
}

Eigen::VectorXd future_features(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec) {
  if (t + static_cast<std::size_t>(spec.k) > seq.length()) {
    throw std::out_of_range("future window runs past sequence end");
  }
  const Eigen::VectorXd x = project_state(raw_state(seq, t, spec), spec);
  return spec.moments() ? moment_stack(x) : x;
}

Eigen::VectorXd extended_features(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec) {
  if (t + static_cast<std::size_t>(spec.k) + 1 > seq.length()) {
    throw std::out_of_range("extended window runs past sequence end");
  }
  const Eigen::VectorXd y = extended_state(seq, t, spec);
  return spec.moments() ? moment_stack(y) : y;
}

TripletDataset extract_triplets(const std::vector<ObservationSeq>& seqs, const FeatureSpec& spec) {
  spec.validate();
  const auto b = static_cast<std::size_t>(spec.history_len);
  const auto k = static_cast<std::size_t>(spec.k);

  std::size_t total = 0;
  for (const auto& seq : seqs) {
    if (spec.discrete()) {
      check_symbols(seq, spec);
    } else if (seq.is_discrete() || seq.dim() != spec.obs_dim) {
      throw ParameterError("continuous feature kind needs real sequences of dimension obs_dim");
    }
    if (seq.length() < static_cast<std::size_t>(spec.min_seq_len)) continue;
    if (seq.length() > b + k) total += seq.length() - b - k;
  }
  if (total == 0) throw EmptyDatasetError("extract_triplets: no valid time step in any sequence");

  TripletDataset data;
  data.spec = spec;
  data.H.resize(static_cast<Eigen::Index>(total), spec.history_dim());
  data.Psi.resize(static_cast<Eigen::Index>(total), spec.future_dim());
  data.Xi.resize(static_cast<Eigen::Index>(total), spec.extended_dim());
  data.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(total));
  data.seq_index.reserve(total);
  data.time.reserve(total);

  Eigen::Index row = 0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto& seq = seqs[s];
    if (seq.length() < static_cast<std::size_t>(spec.min_seq_len) || seq.length() <= b + k) continue;
    for (std::size_t t = b; t + k < seq.length(); ++t, ++row) {
      data.H.row(row) = history_features(seq, t, spec).transpose();
      data.Psi.row(row) = future_features(seq, t, spec).transpose();
      data.Xi.row(row) = extended_features(seq, t, spec).transpose();
      data.seq_index.push_back(static_cast<int>(s));
      data.time.push_back(static_cast<int>(t));
    }
  }
  return data;
}

ProjectionMaps projection_maps(const FeatureSpec& raw_spec, const Basis& basis) {
  if (raw_spec.projection) throw ParameterError("projection_maps: spec is already projected");
  const Eigen::MatrixXd ut = basis.U.transpose();
  if (basis.U.rows() != raw_spec.raw_state_dim()) {
    throw ParameterError("projection_maps: basis rows must equal the raw future dimension");
  }
  Eigen::MatrixXd first_psi = ut;
  Eigen::MatrixXd first_xi;
  if (raw_spec.discrete()) {
    first_xi = kron(Eigen::MatrixXd::Identity(raw_spec.alphabet_size, raw_spec.alphabet_size), ut);
  } else {
    first_xi = block_diag(Eigen::MatrixXd::Identity(raw_spec.obs_dim, raw_spec.obs_dim), ut);
  }
  ProjectionMaps maps;
  if (raw_spec.moments()) {
    // vec(P x x^T P^T) = (P (x) P) vec(x x^T)
    maps.psi = block_diag(first_psi, kron(first_psi, first_psi));
    maps.xi = block_diag(first_xi, kron(first_xi, first_xi));
  } else {
    maps.psi = first_psi;
    maps.xi = first_xi;
  }
  return maps;
}

TripletDataset project_dataset(const TripletDataset& raw, const Basis& basis) {
  const ProjectionMaps maps = projection_maps(raw.spec, basis);
  TripletDataset out = raw;
  out.spec.projection = basis;
  out.Psi = raw.Psi * maps.psi.transpose();
  out.Xi = raw.Xi * maps.xi.transpose();
  return out;
}

Basis learn_basis(const Eigen::MatrixXd& m_source, int m) {
  if (m < 1 || m > m_source.rows()) throw ParameterError("learn_basis: m must be in [1, rows]");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m_source, Eigen::ComputeFullU);
  Basis basis;
  basis.U = svd.matrixU().leftCols(m);
  basis.singular_values = Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd& s = svd.singularValues();
  for (int j = 0; j < m && j < s.size(); ++j) basis.singular_values(j) = s(j);
  basis.numerical_rank = numerical_rank(m_source);
  for (int j = 0; j < m; ++j) {
    Eigen::Index arg = 0;
    basis.U.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis.U(arg, j) < 0.0) basis.U.col(j) *= -1.0;
  }
  return basis;
}

Eigen::MatrixXd future_history_moment(const TripletDataset& data) {
  const int first = data.spec.state_dim();
  const Eigen::MatrixXd psi1 = data.Psi.leftCols(first);
  return psi1.transpose() * data.weights.asDiagonal() * data.H / data.total_weight();
}

Basis learn_basis(const TripletDataset& data, int m) {
  return learn_basis(future_history_moment(data), m);
}

}  // namespace ivpsr
