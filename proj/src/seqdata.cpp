#include "ivpsr/seqdata.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>

#include "ivpsr/linalg.hpp"
#include "ivpsr/rng.hpp"

namespace ivpsr {

ObservationSeq ObservationSeq::discrete(std::string id, std::vector<int> symbols) {
  if (symbols.empty()) throw std::invalid_argument("ObservationSeq: empty sequence");
  for (int s : symbols) {
    if (s < 0) throw std::invalid_argument("ObservationSeq: negative symbol id");
  }
  ObservationSeq seq;
  seq.id_ = std::move(id);
  seq.discrete_ = true;
  seq.symbols_ = std::move(symbols);
  return seq;
}

ObservationSeq ObservationSeq::continuous(std::string id, Eigen::MatrixXd values) {
  if (values.cols() == 0 || values.rows() == 0) {
    throw std::invalid_argument("ObservationSeq: empty sequence");
  }
  ObservationSeq seq;
  seq.id_ = std::move(id);
  seq.discrete_ = false;
  seq.values_ = std::move(values);
  return seq;
}

std::size_t ObservationSeq::length() const {
  return discrete_ ? symbols_.size() : static_cast<std::size_t>(values_.cols());
}

Observation ObservationSeq::at(std::size_t t) const {
  if (discrete_) return symbols_.at(t);
  return Eigen::VectorXd(values_.col(static_cast<Eigen::Index>(t)));
}

ObservationSeq ObservationSeq::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > length() || count == 0) throw std::out_of_range("ObservationSeq::slice");
  if (discrete_) {
    return discrete(id_, std::vector<int>(symbols_.begin() + static_cast<long>(begin),
                                          symbols_.begin() + static_cast<long>(begin + count)));
  }
  return continuous(id_, values_.middleCols(static_cast<Eigen::Index>(begin),
                                            static_cast<Eigen::Index>(count)));
}

namespace {

void check_stochastic(const Eigen::MatrixXd& m, const char* name) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if ((m.col(j).array() < 0.0).any() || !m.col(j).allFinite()) {
      throw ParameterError(std::string(name) + ": negative or non-finite entry");
    }
    if (std::abs(m.col(j).sum() - 1.0) > 1e-12) {
      throw ParameterError(std::string(name) + ": column " + std::to_string(j) +
                           " does not sum to 1");
    }
  }
}

bool is_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (!(m - m.transpose()).isZero(1e-10 * std::max(1.0, m.norm()))) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, m.norm());
}

std::vector<int> sample_one_hmm(const HmmParams& p, std::size_t length, Rng& rng) {
  std::vector<int> out(length);
  const auto column = [](const Eigen::MatrixXd& m, int j) {
    return std::span<const double>(m.col(j).data(), static_cast<std::size_t>(m.rows()));
  };
  int state = rng.categorical(std::span<const double>(p.initial.data(), p.initial.size()));
  for (std::size_t t = 0; t < length; ++t) {
    out[t] = rng.categorical(column(p.emission, state));
    state = rng.categorical(column(p.transition, state));
  }
  return out;
}

}  // namespace

void HmmParams::validate() const {
  const int m = n_states();
  if (m < 1 || transition.cols() != m) throw ParameterError("HmmParams: transition must be m x m");
  if (emission.cols() != m || emission.rows() < 1) {
    throw ParameterError("HmmParams: emission must be n_obs x m");
  }
  if (initial.size() != m) throw ParameterError("HmmParams: initial must have m entries");
  check_stochastic(transition, "transition");
  check_stochastic(emission, "emission");
  Eigen::MatrixXd init = initial;
  check_stochastic(init, "initial");
}

Eigen::VectorXd HmmParams::stationary(double tol, int max_iter) const {
  // lazy chain (T + I) / 2 shares the stationary law and is aperiodic
  const Eigen::MatrixXd lazy =
      0.5 * (transition + Eigen::MatrixXd::Identity(n_states(), n_states()));
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n_states(), 1.0 / n_states());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = lazy * pi;
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi = next;
    if (change < tol) break;
  }
  return pi;
}

HmmParams BktParams::to_hmm() const {
  for (double p : {p_init_learned, p_learn, p_forget, p_guess, p_slip}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("BktParams: probabilities must be in [0,1]");
  }
  HmmParams h;
  h.transition.resize(2, 2);
  h.transition << 1.0 - p_learn, p_forget,  //
      p_learn, 1.0 - p_forget;
  h.emission.resize(2, 2);
  h.emission << 1.0 - p_guess, p_slip,  //
      p_guess, 1.0 - p_slip;
  h.initial.resize(2);
  h.initial << 1.0 - p_init_learned, p_init_learned;
  return h;
}

void LdsParams::validate() const {
  const int n = n_states();
  const int d = obs_dim();
  if (n < 1 || transition.cols() != n) throw ParameterError("LdsParams: transition must be n x n");
  if (observation.cols() != n || d < 1) throw ParameterError("LdsParams: observation must be d x n");
  if (state_noise_cov.rows() != n || !is_psd(state_noise_cov)) {
    throw ParameterError("LdsParams: state_noise_cov must be n x n symmetric PSD");
  }
  if (obs_noise_cov.rows() != d || !is_psd(obs_noise_cov)) {
    throw ParameterError("LdsParams: obs_noise_cov must be d x d symmetric PSD");
  }
  if (initial_mean.size() != n) throw ParameterError("LdsParams: initial_mean must have n entries");
  if (initial_cov.rows() != n || !is_psd(initial_cov)) {
    throw ParameterError("LdsParams: initial_cov must be n x n symmetric PSD");
  }
}

std::vector<ObservationSeq> sample_hmm(const HmmParams& params, std::size_t length,
                                       std::size_t n_seqs, std::uint64_t seed) {
  return sample_hmm_lengths(params, std::vector<std::size_t>(n_seqs, length), seed);
}

std::vector<ObservationSeq> sample_hmm_lengths(const HmmParams& params,
                                               const std::vector<std::size_t>& lengths,
                                               std::uint64_t seed) {
  params.validate();
  std::vector<ObservationSeq> out;
  out.reserve(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw ParameterError("sample_hmm: length must be >= 1");
    Rng rng(seed, i + 1);
    out.push_back(ObservationSeq::discrete("seq" + std::to_string(i),
                                           sample_one_hmm(params, lengths[i], rng)));
  }
  return out;
}

std::vector<ObservationSeq> sample_bkt(const BktParams& params, std::size_t n_seqs,
                                       std::size_t min_len, std::size_t max_len,
                                       std::uint64_t seed) {
  if (min_len < 1 || max_len < min_len) throw ParameterError("sample_bkt: bad length range");
  Rng length_rng(seed, 0);
  std::vector<std::size_t> lengths(n_seqs);
  for (auto& len : lengths) {
    len = static_cast<std::size_t>(
        length_rng.uniform_int(static_cast<long>(min_len), static_cast<long>(max_len)));
  }
  return sample_hmm_lengths(params.to_hmm(), lengths, seed);
}

LdsSample sample_lds(const LdsParams& params, std::size_t length, std::uint64_t seed) {
  params.validate();
  if (length < 1) throw ParameterError("sample_lds: length must be >= 1");
  const int n = params.n_states();
  const int d = params.obs_dim();
  const Eigen::MatrixXd init_factor = psd_sqrt_factor(params.initial_cov);
  const Eigen::MatrixXd state_factor = psd_sqrt_factor(params.state_noise_cov);
  const Eigen::MatrixXd obs_factor = psd_sqrt_factor(params.obs_noise_cov);

  Rng rng(seed, 0);
  const auto draw = [&rng](Eigen::Index size) {
    Eigen::VectorXd z(size);
    for (Eigen::Index i = 0; i < size; ++i) z(i) = rng.normal();
    return z;
  };

  LdsSample out;
  out.seed = seed;
  out.unstable = spectral_radius(params.transition) >= 1.0 &&
                 (!params.state_noise_cov.isZero(0.0) || !params.obs_noise_cov.isZero(0.0));
  out.states.resize(n, static_cast<Eigen::Index>(length));
  Eigen::MatrixXd obs(d, static_cast<Eigen::Index>(length));
  Eigen::VectorXd state = params.initial_mean + init_factor * draw(n);
  for (std::size_t t = 0; t < length; ++t) {
    state = params.transition * state + state_factor * draw(n);
    const auto col = static_cast<Eigen::Index>(t);
    out.states.col(col) = state;
    obs.col(col) = params.observation * state + obs_factor * draw(d);
  }
  out.seq = ObservationSeq::continuous("lds", std::move(obs));
  return out;
}

HmmParams random_hmm(int n_states, int n_obs, std::uint64_t seed, double stickiness) {
  if (n_states < 1 || n_obs < 1) throw ParameterError("random_hmm: sizes must be positive");
  if (!(stickiness >= 0.0 && stickiness < 1.0)) throw ParameterError("random_hmm: stickiness in [0,1)");
  Rng rng(seed, 0);
  const auto simplex = [&rng](int size) {
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = rng.exponential();
    return Eigen::VectorXd(v / v.sum());
  };
  HmmParams h;
  h.transition.resize(n_states, n_states);
  h.emission.resize(n_obs, n_states);
  for (int j = 0; j < n_states; ++j) {
    h.transition.col(j) = (1.0 - stickiness) * simplex(n_states);
    h.transition(j, j) += stickiness;
    h.emission.col(j) = simplex(n_obs);
  }
  h.initial = simplex(n_states);
  // exact column sums after floating-point mixing
  for (int j = 0; j < n_states; ++j) {
    h.transition.col(j) /= h.transition.col(j).sum();
    h.emission.col(j) /= h.emission.col(j).sum();
  }
  h.initial /= h.initial.sum();
  return h;
}

LdsParams make_subsystem_lds(std::uint64_t seed) {
  constexpr int kBlock = 5;
  constexpr int kObsPerBlock = 10;
  Rng rng(seed, 0);
  LdsParams p;
  p.transition = Eigen::MatrixXd::Zero(2 * kBlock, 2 * kBlock);
  p.observation = Eigen::MatrixXd::Zero(30, 2 * kBlock);
  for (int b = 0; b < 2; ++b) {
    Eigen::MatrixXd a(kBlock, kBlock);
    for (int i = 0; i < kBlock; ++i)
      for (int j = 0; j < kBlock; ++j) a(i, j) = rng.normal();
    a *= 0.95 / spectral_radius(a);
    p.transition.block(b * kBlock, b * kBlock, kBlock, kBlock) = a;
    for (int i = 0; i < kObsPerBlock; ++i)
      for (int j = 0; j < kBlock; ++j) p.observation(b * kObsPerBlock + i, b * kBlock + j) = rng.normal();
  }
  p.state_noise_cov = 0.01 * Eigen::MatrixXd::Identity(2 * kBlock, 2 * kBlock);
  p.obs_noise_cov = Eigen::MatrixXd::Identity(30, 30);
  p.initial_mean = Eigen::VectorXd::Zero(2 * kBlock);
  p.initial_cov = stationary_covariance(p.transition, p.state_noise_cov);
  return p;
}

// ---------------------------------------------------------------------------
// CSV sequence files

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

FormatError parse_error(std::size_t line_no, const std::string& what) {
  return FormatError("line " + std::to_string(line_no) + ": " + what);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

}  // namespace

std::vector<ObservationSeq> read_sequences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sequences: cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    header = split_csv(line);
    break;
  }
  if (header.empty()) return {};
  for (auto& h : header) h = trim(h);
  if (header.size() < 3 || header[0] != "seq_id" || header[1] != "t") {
    throw parse_error(line_no, "header must start with seq_id,t");
  }
  const bool discrete = header.size() == 3 && header[2] == "obs";
  const std::size_t dim = header.size() - 2;
  if (!discrete) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (header[2 + j] != "obs_" + std::to_string(j + 1)) {
        throw parse_error(line_no, "continuous columns must be obs_1..obs_d");
      }
    }
  }

  struct Pending {
    std::string id;
    std::vector<int> symbols;
    std::vector<double> values;
    std::size_t steps = 0;
  };
  std::vector<ObservationSeq> out;
  Pending cur;
  std::vector<std::string> seen_ids;
  const auto flush = [&]() {
    if (cur.steps == 0) return;
    if (discrete) {
      out.push_back(ObservationSeq::discrete(cur.id, std::move(cur.symbols)));
    } else {
      Eigen::MatrixXd vals = Eigen::Map<Eigen::MatrixXd>(cur.values.data(), static_cast<Eigen::Index>(dim),
                                                         static_cast<Eigen::Index>(cur.steps));
      out.push_back(ObservationSeq::continuous(cur.id, std::move(vals)));
    }
    seen_ids.push_back(cur.id);
    cur = Pending{};
  };

  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw parse_error(line_no, "expected " + std::to_string(header.size()) + " columns, got " +
                                     std::to_string(cells.size()));
    }
    for (auto& c : cells) c = trim(c);
    const std::string& id = cells[0];
    if (id.empty()) throw parse_error(line_no, "empty seq_id");
    long t = 0;
    if (!parse_number(cells[1], t)) throw parse_error(line_no, "t is not an integer");
    if (id != cur.id) {
      flush();
      if (std::find(seen_ids.begin(), seen_ids.end(), id) != seen_ids.end()) {
        throw parse_error(line_no, "rows of sequence '" + id + "' are not contiguous");
      }
      cur.id = id;
    }
    if (t != static_cast<long>(cur.steps)) {
      throw parse_error(line_no, "expected t = " + std::to_string(cur.steps));
    }
    if (discrete) {
      int symbol = 0;
      if (!parse_number(cells[2], symbol)) {
        double probe = 0.0;
        if (parse_number(cells[2], probe)) {
          throw parse_error(line_no, "mixed observation kinds: real value in a discrete sequence");
        }
        throw parse_error(line_no, "observation is not an integer");
      }
      if (symbol < 0) throw parse_error(line_no, "negative symbol id");
      cur.symbols.push_back(symbol);
    } else {
      for (std::size_t j = 0; j < dim; ++j) {
        double v = 0.0;
        if (!parse_number(cells[2 + j], v)) throw parse_error(line_no, "observation is not a number");
        cur.values.push_back(v);
      }
    }
    ++cur.steps;
  }
  flush();
  return out;
}

void write_sequences(const std::vector<ObservationSeq>& seqs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sequences: cannot open " + path.string());
  bool discrete = true;
  int dim = 1;
  if (!seqs.empty()) {
    discrete = seqs.front().is_discrete();
    dim = seqs.front().dim();
  }
  for (const auto& s : seqs) {
    if (s.is_discrete() != discrete || s.dim() != dim) {
      throw FormatError("write_sequences: mixed observation kinds or dimensions");
    }
    if (s.id().find_first_of(",\n#") != std::string::npos || s.id().empty()) {
      throw FormatError("write_sequences: sequence id must be nonempty without ',' or '#'");
    }
  }
  out << "seq_id,t";
  if (discrete) {
    out << ",obs";
  } else {
    for (int j = 0; j < dim; ++j) out << ",obs_" << (j + 1);
  }
  out << '\n';
  for (const auto& s : seqs) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      out << s.id() << ',' << t;
      if (discrete) {
        out << ',' << s.symbol(t);
      } else {
        for (int j = 0; j < dim; ++j) out << ',' << format_double(s.values()(j, static_cast<Eigen::Index>(t)));
      }
      out << '\n';
    }
  }
}

}  // namespace ivpsr
