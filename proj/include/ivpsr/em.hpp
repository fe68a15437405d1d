#pragma once

#include <cstdint>
#include <vector>

#include "ivpsr/seqdata.hpp"

namespace ivpsr {

struct EmOptions {
  int n_states = 2;
  int n_obs = 2;
  int n_iters = 100;
  int restarts = 5;
  double tol = 1e-10;  // stop when the relative log-likelihood gain falls below tol
  std::uint64_t seed = 0;
};

struct EmResult {
  HmmParams params;
  std::vector<double> log_likelihood;  // trace of the selected restart, one per iteration
  int best_restart = 0;
  /// Largest relative decrease seen in any restart's trace (0 when monotone).
  double worst_decrease = 0.0;
};

/// Baum-Welch with scaled forward-backward passes and random restarts; the
/// restart with the highest final log-likelihood wins.
EmResult fit_em_hmm(const std::vector<ObservationSeq>& seqs, const EmOptions& options);

/// Total log-likelihood of the sequences under params.
double hmm_log_likelihood(const HmmParams& params, const std::vector<ObservationSeq>& seqs);

}  // namespace ivpsr
