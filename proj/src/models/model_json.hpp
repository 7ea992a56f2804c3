#pragma once

// Internal JSON helpers shared by the model implementations.

#include <json.hpp>

#include <Eigen/Dense>

#include "obpf/models/common.hpp"

namespace obpf {
class OlsModel;
class ForestModel;
class MlpModel;
} // namespace obpf

namespace obpf::detail {

using nlohmann::json;

json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const json& j, bool require_id = true);

json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m); // row-major nested arrays
Eigen::MatrixXd matrix_from_json(const json& j);

// Fills base-class metadata common to every model file.
json model_envelope(const Model& model);
void read_envelope(const json& j, Model& model);

// Family-specific loaders and parameter dumps, implemented next to their
// trainers.
ModelPtr load_ols_model(const json& j);
ModelPtr load_forest_model(const json& j);
ModelPtr load_mlp_model(const json& j);

json ols_params_json(const OlsModel& model);
json forest_params_json(const ForestModel& model);
json mlp_params_json(const MlpModel& model);

json model_params_json(const Model& model);

} // namespace obpf::detail
