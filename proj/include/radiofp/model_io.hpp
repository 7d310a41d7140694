#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiofp/convnet.hpp"
#include "radiofp/features.hpp"
#include "radiofp/kernel_svm.hpp"
#include "radiofp/linear_svm.hpp"
#include "radiofp/random_forest.hpp"

namespace radiofp {

// Little-endian IEEE-754 doubles, base64 encoded.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);

nlohmann::ordered_json to_json(const FeatureLayout& layout);
FeatureLayout layout_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const Scaler& s);
Scaler scaler_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const LinearModel& m);
LinearModel linear_model_from_json(const nlohmann::json& j);

// Support vectors as nested arrays, or one base64 block when `base64` is set.
nlohmann::ordered_json to_json(const RbfModel& m, bool base64 = false);
RbfModel rbf_model_from_json(const nlohmann::json& j);

// Trees as nested {idx, val, children} objects; leaves carry only val.
nlohmann::ordered_json to_json(const Forest& f);
Forest forest_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const NetworkParams& p);
NetworkParams network_params_from_json(const nlohmann::json& j);

}  // namespace radiofp
