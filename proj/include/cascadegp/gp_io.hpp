#pragma once

#include "cascadegp/gpr.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace cascadegp::gp {

inline constexpr const char* kGpFormat = "cascadegp-gp/1";

/// Self-describing JSON document: hyperparameters, standardizer, mean function
/// and an embedded copy of the training data. Function means cannot be
/// serialized and raise an error.
nlohmann::json to_json(const GPModel& model);
GPModel from_json(const nlohmann::json& doc);

nlohmann::json mean_to_json(const MeanFunction& mean);
MeanFunction mean_from_json(const nlohmann::json& doc);

void save_model(const GPModel& model, const std::string& path);
GPModel load_model(const std::string& path);

}  // namespace cascadegp::gp
