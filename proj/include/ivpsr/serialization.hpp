#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ivpsr/gaussian.hpp"
#include "ivpsr/hmm_ops.hpp"
#include "ivpsr/kernelpsr.hpp"
#include "ivpsr/seqdata.hpp"
#include "ivpsr/theorybounds.hpp"
#include "ivpsr/twostage.hpp"

namespace ivpsr {

using Json = nlohmann::json;

/// Matrices are {"rows", "cols", "data"} with row-major data; vectors are arrays.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const HmmParams& p);
HmmParams hmm_params_from_json(const Json& j);
Json to_json(const BktParams& p);
BktParams bkt_params_from_json(const Json& j);
Json to_json(const LdsParams& p);
LdsParams lds_params_from_json(const Json& j);

Json to_json(const Basis& b);
Basis basis_from_json(const Json& j);
Json to_json(const FeatureSpec& s);
FeatureSpec feature_spec_from_json(const Json& j);
Json to_json(const Kernel& k);
Kernel kernel_from_json(const Json& j);
Json to_json(const RegressorSpec& s);
RegressorSpec regressor_spec_from_json(const Json& j);
Json to_json(const FittedRegressor& r);
Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);
Json to_json(const PredictiveModel& m);
PredictiveModel predictive_model_from_json(const Json& j);
Json to_json(const HmmOperators& ops);
Json to_json(const GaussianBelief& b);
GaussianBelief gaussian_belief_from_json(const Json& j);
Json to_json(const KernelSpec& s);
KernelSpec kernel_spec_from_json(const Json& j);
Json to_json(const BoundInputs& in);
BoundInputs bound_inputs_from_json(const Json& j);
Json to_json(const BoundResult& r);

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

}  // namespace ivpsr
