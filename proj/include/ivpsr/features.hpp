#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ivpsr/seqdata.hpp"

namespace ivpsr {

/// How history, future and extended-future statistics are built.
///
///  - discrete_indicator:     h = stacked indicators of the previous b symbols
///  - discrete_joint_history: h = one-hot of the joint assignment of the previous b symbols
///  - binary_history:         h = the previous b binary symbols as a 0/1 vector
///  - stacked_window:         h, psi, xi = stacked real observation windows
///  - moment_stacked_window:  as stacked_window, with psi and xi replaced by
///                            their 1st+2nd moment vectors
///
/// Discrete kinds share psi_t = one-hot(o_t..o_{t+k-1}) and
/// xi_t = e_{o_t} (x) psi_{t+1}, the first symbol being the most significant
/// index. Continuous kinds use psi_t = [o_t; ...; o_{t+k-1}] and
/// xi_t = [o_t; psi_{t+1}].
enum class FeatureKind {
  discrete_indicator,
  discrete_joint_history,
  binary_history,
  stacked_window,
  moment_stacked_window,
};

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Orthonormal basis for the predictive state.
struct Basis {
  Eigen::MatrixXd U;                 // d x m, orthonormal columns
  Eigen::VectorXd singular_values;   // m, descending
  int numerical_rank = 0;            // rank of the source matrix (warn when < m)

  int dim() const { return static_cast<int>(U.cols()); }
  bool rank_deficient() const { return numerical_rank < dim(); }
};

struct FeatureSpec {
  FeatureKind kind = FeatureKind::discrete_indicator;
  int k = 1;                 // future window length
  int history_len = 1;       // b (discrete) or H (continuous)
  int alphabet_size = 2;     // discrete kinds
  int obs_dim = 1;           // continuous kinds
  int min_seq_len = 5;       // shorter sequences are skipped
  std::optional<Basis> projection;  // applied to future statistics

  bool discrete() const;
  bool moments() const { return kind == FeatureKind::moment_stacked_window; }
  int history_dim() const;
  /// First-order future dimension before projection (n^k or d k).
  int raw_state_dim() const;
  /// First-order future dimension after projection.
  int state_dim() const;
  /// First-order extended-future dimension (n * state_dim or d + state_dim).
  int extended_state_dim() const;
  /// Dimension of psi (moment-stacked when applicable).
  int future_dim() const;
  /// Dimension of xi (moment-stacked when applicable).
  int extended_dim() const;
  /// Observations consumed by one (history, extended-future) window.
  int window_span() const { return history_len + k + 1; }

  /// Throws ParameterError on inconsistent settings.
  void validate() const;
};

/// Rows of (h, psi, xi) triplets with optional per-row weights.
struct TripletDataset {
  Eigen::MatrixXd H;    // N x d_h
  Eigen::MatrixXd Psi;  // N x d_psi
  Eigen::MatrixXd Xi;   // N x d_xi
  Eigen::VectorXd weights;        // N, nonnegative; all ones for sampled data
  std::vector<int> seq_index;     // source sequence per row (-1 for synthetic rows)
  std::vector<int> time;          // time step per row
  FeatureSpec spec;

  std::size_t size() const { return static_cast<std::size_t>(H.rows()); }
  double total_weight() const { return weights.sum(); }
};

struct EmptyDatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// [x; vec(x x^T)] with column-major vec.
Eigen::VectorXd moment_stack(const Eigen::VectorXd& x);
inline int moment_dim(int d) { return d + d * d; }

/// Joint index of symbols[begin .. begin+len) in base n, first symbol most significant.
int joint_index(const std::vector<int>& symbols, std::size_t begin, int len, int n);

Eigen::VectorXd history_features(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec);
/// psi_t; requires t + k <= length.
Eigen::VectorXd future_features(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec);
/// xi_t; requires t + k + 1 <= length.
Eigen::VectorXd extended_features(const ObservationSeq& seq, std::size_t t, const FeatureSpec& spec);

/// Every valid t of every sequence: t >= b and t + k < L. A length-L sequence
/// yields max(0, L - b - k) rows. Sequences shorter than min_seq_len are
/// skipped. Throws EmptyDatasetError when nothing is emitted.
TripletDataset extract_triplets(const std::vector<ObservationSeq>& seqs, const FeatureSpec& spec);

/// Linear maps taking unprojected psi / xi (including moment stacking) to
/// their projected versions under U.
struct ProjectionMaps {
  Eigen::MatrixXd psi;  // future_dim(projected) x future_dim(raw)
  Eigen::MatrixXd xi;   // extended_dim(projected) x extended_dim(raw)
};
ProjectionMaps projection_maps(const FeatureSpec& raw_spec, const Basis& basis);

/// Re-expresses an unprojected dataset in the basis U.
TripletDataset project_dataset(const TripletDataset& raw, const Basis& basis);

/// Top-m left singular vectors of m_source, signs fixed so that the
/// largest-magnitude entry of each column is positive. Columns beyond the
/// numerical rank come from the full SVD.
Basis learn_basis(const Eigen::MatrixXd& m_source, int m);

/// Basis of the weighted empirical cross moment between first-order future
/// features and history features.
Basis learn_basis(const TripletDataset& data, int m);

/// (1/W) sum_t w_t psi1_t h_t^T, using the first-order block of psi.
Eigen::MatrixXd future_history_moment(const TripletDataset& data);

}  // namespace ivpsr
