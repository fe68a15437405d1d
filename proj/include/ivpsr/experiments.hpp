#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ivpsr/em.hpp"
#include "ivpsr/serialization.hpp"
#include "ivpsr/theorybounds.hpp"
#include "ivpsr/twostage.hpp"

namespace ivpsr {

/// P(o_t = 1 | o_{0..t-1}) for every t of a binary sequence.
using BinaryPredictor = std::function<std::vector<double>(const ObservationSeq&)>;

BinaryPredictor predictor_for(const PredictiveModel& model);
BinaryPredictor predictor_for(const HmmParams& params);

struct MaeResult {
  std::vector<double> per_sequence;  // NaN for skipped sequences
  double pooled = 0.0;               // over all evaluated steps
  double per_sequence_mean = 0.0;    // mean of per-sequence MAEs
  std::size_t steps = 0;
  std::size_t skipped = 0;           // sequences with no step past the warm-up
};

/// Mean of |[o_t = 1] - P(o_t = 1 | past)| over t >= warmup.
MaeResult evaluate_mae(const BinaryPredictor& predictor, const std::vector<ObservationSeq>& seqs,
                       int warmup);

/// A model in the BKT comparison: a two-stage config, or EM when `em` is set.
struct BktModelSpec {
  std::string name;
  ModelConfig config;
  std::optional<EmOptions> em;
};

/// Spec-HMM, Feat-HMM, LR-HMM and EM with history length b.
std::vector<BktModelSpec> default_bkt_models(int b, const EmOptions& em);

struct BktConfig {
  BktParams params;
  std::size_t n_seqs = 325;
  std::size_t min_len = 5;
  std::size_t max_len = 50;
  std::size_t n_train = 200;
  std::size_t n_test = 125;
  int n_splits = 200;
  int history_len = 4;
  int warmup = 4;
  std::uint64_t seed = 1;
  EmOptions em;
  std::optional<std::filesystem::path> data_csv;  // use these sequences instead of generating
  std::vector<BktModelSpec> models;               // empty: the default four
  int threads = 0;                                // 0: hardware concurrency
};

struct BktResult {
  std::vector<std::string> models;
  std::vector<int> splits;                     // successful split ids
  std::vector<std::vector<double>> mae;        // [model][split], pooled
  std::vector<std::vector<double>> mae_seq;    // [model][split], per-sequence mean
  std::vector<std::vector<double>> seconds;    // [model][split], fit wall time
  std::vector<double> oracle_mae;              // generating model, per split (empty for imported data)
  std::vector<std::string> failures;           // "split <i>: <message>"

  double mean_mae(std::size_t m) const;
  double mean_seconds(std::size_t m) const;
  /// Fraction of splits where model a has strictly lower MAE than model b.
  double win_rate(std::size_t a, std::size_t b) const;
  std::size_t index_of(const std::string& name) const;
};

BktResult run_bkt(const BktConfig& config);
BktConfig bkt_config_from_json(const Json& j);

struct LassoConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t n = 1000;
  double alpha = 0.1;
  int top = 10;
};

struct LassoSeedResult {
  std::uint64_t seed = 0;
  Eigen::MatrixXd cov_basis;    // 30 x top, ordered by mean coordinate
  Eigen::MatrixXd lasso_basis;
  double cov_block_mass = 0.0;   // mean over the top vectors
  double lasso_block_mass = 0.0;
  double lasso_noise_mass = 0.0; // mean fraction of mass in the noise dims
  double cov_noise_mass = 0.0;
  std::vector<int> unconverged_outputs;
  double kkt_residual = 0.0;
};

struct LassoReport {
  std::vector<LassoSeedResult> seeds;
  double mean_cov_block_mass = 0.0;
  double mean_lasso_block_mass = 0.0;
  double mean_lasso_noise_mass = 0.0;
};

/// max over the two subsystem blocks of the fraction of |u| inside the block.
double block_mass(const Eigen::VectorXd& u);
/// Fraction of |u| in observation dims 21-30.
double noise_mass(const Eigen::VectorXd& u);
/// sum_i i |u_i| / sum_i |u_i|.
double mean_coordinate(const Eigen::VectorXd& u);
/// Columns reordered by increasing mean coordinate.
Eigen::MatrixXd order_by_mean_coordinate(const Eigen::MatrixXd& basis);

LassoSeedResult run_lasso_seed(std::uint64_t seed, std::size_t n, double alpha, int top);
LassoReport run_lasso_subsystems(const LassoConfig& config);
LassoConfig lasso_config_from_json(const Json& j);

struct ConvergenceConfig {
  ConvergenceSpec system;
  std::vector<int> ns{500, 1000, 2000, 4000, 8000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> lambdas;  // optional sweep at the largest N
};
ConvergenceConfig convergence_config_from_json(const Json& j);

struct BoundsConfig {
  SamplerSpec sampler;
  std::vector<int> ns{100, 1000};
  double delta = 0.1;
  int trials = 500;
  std::uint64_t seed = 0;
};
BoundsConfig bounds_config_from_json(const Json& j);

/// Runs the experiment named by j["experiment"] (or `id` when given) and
/// writes its artifacts into out_dir. Returns the metadata document.
Json run_experiment(const std::string& id, const Json& config, const std::filesystem::path& out_dir);

/// Header comment carried by every CSV artifact.
std::string artifact_header(const std::string& hash, std::uint64_t seed);

}  // namespace ivpsr
