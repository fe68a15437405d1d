#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ivpsr {

/// A single observation: a symbol id or a real vector.
using Observation = std::variant<int, Eigen::VectorXd>;

/// One realization of the process. Time indices are 0-based.
class ObservationSeq {
 public:
  ObservationSeq() = default;

  static ObservationSeq discrete(std::string id, std::vector<int> symbols);
  /// values is d x L, one column per time step.
  static ObservationSeq continuous(std::string id, Eigen::MatrixXd values);

  const std::string& id() const { return id_; }
  bool is_discrete() const { return discrete_; }
  std::size_t length() const;
  /// Observation dimension (1 for discrete sequences).
  int dim() const { return discrete_ ? 1 : static_cast<int>(values_.rows()); }

  int symbol(std::size_t t) const { return symbols_.at(t); }
  Eigen::VectorXd value(std::size_t t) const { return values_.col(static_cast<Eigen::Index>(t)); }
  Observation at(std::size_t t) const;

  const std::vector<int>& symbols() const { return symbols_; }
  const Eigen::MatrixXd& values() const { return values_; }

  /// Contiguous sub-sequence [begin, begin + count).
  ObservationSeq slice(std::size_t begin, std::size_t count) const;

 private:
  std::string id_;
  bool discrete_ = true;
  std::vector<int> symbols_;
  Eigen::MatrixXd values_;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Discrete HMM with column-stochastic matrices: transition(i, j) =
/// P(s' = i | s = j), emission(x, j) = P(o = x | s = j).
struct HmmParams {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd emission;
  Eigen::VectorXd initial;

  int n_states() const { return static_cast<int>(transition.rows()); }
  int n_obs() const { return static_cast<int>(emission.rows()); }
  /// Throws ParameterError unless every column sums to 1 within 1e-12 and
  /// all entries are nonnegative.
  void validate() const;
  /// Stationary distribution of the transition matrix (power iteration).
  Eigen::VectorXd stationary(double tol = 1e-14, int max_iter = 1000000) const;
};

/// Bayesian knowledge tracing. State 0 = not learned, 1 = learned;
/// observation 0 = incorrect, 1 = correct.
struct BktParams {
  // Conventional magnitudes; the tutor data's fitted values are not published.
  double p_init_learned = 0.3;
  double p_learn = 0.15;
  double p_forget = 0.03;
  double p_guess = 0.2;
  double p_slip = 0.1;

  HmmParams to_hmm() const;
};

/// Linear-Gaussian system: s_t = T s_{t-1} + nu_t, o_t = O s_t + eps_t,
/// with s_0 ~ N(initial_mean, initial_cov).
struct LdsParams {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd observation;
  Eigen::MatrixXd state_noise_cov;
  Eigen::MatrixXd obs_noise_cov;
  Eigen::VectorXd initial_mean;
  Eigen::MatrixXd initial_cov;

  int n_states() const { return static_cast<int>(transition.rows()); }
  int obs_dim() const { return static_cast<int>(observation.rows()); }
  void validate() const;
};

struct LdsSample {
  ObservationSeq seq;
  Eigen::MatrixXd states;  // n x L, states(:, t) generated o_t
  bool unstable = false;   // spectral radius >= 1 with nonzero noise
  std::uint64_t seed = 0;
};

std::vector<ObservationSeq> sample_hmm(const HmmParams& params, std::size_t length,
                                       std::size_t n_seqs, std::uint64_t seed);

/// One sequence per requested length; sequence i uses RNG stream i + 1.
std::vector<ObservationSeq> sample_hmm_lengths(const HmmParams& params,
                                               const std::vector<std::size_t>& lengths,
                                               std::uint64_t seed);

/// Synthetic BKT cohort: n_seqs sequences with lengths uniform in
/// [min_len, max_len].
std::vector<ObservationSeq> sample_bkt(const BktParams& params, std::size_t n_seqs,
                                       std::size_t min_len, std::size_t max_len,
                                       std::uint64_t seed);

LdsSample sample_lds(const LdsParams& params, std::size_t length, std::uint64_t seed);

/// Random HMM: emission columns uniform on the simplex, transition columns a
/// mix of a uniform-simplex draw and the identity with weight `stickiness`.
HmmParams random_hmm(int n_states, int n_obs, std::uint64_t seed, double stickiness = 0.0);

/// Two independent 5-state subsystems driving observation dims 1-10 and
/// 11-20 of a 30-dim output; dims 21-30 are pure noise.
LdsParams make_subsystem_lds(std::uint64_t seed);

std::vector<ObservationSeq> read_sequences(const std::filesystem::path& path);
void write_sequences(const std::vector<ObservationSeq>& seqs, const std::filesystem::path& path);

}  // namespace ivpsr
