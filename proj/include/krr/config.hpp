#pragma once
#include <string>

#include <json.hpp>

#include "krr/experiments.hpp"

namespace krr {

// Parses and validates a JSON experiment config. Unknown keys are rejected;
// defaults are filled (trials = 20, lambda policy zero, rate constants 1).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const nlohmann::json& doc);

// Canonical echo of a config (sorted keys, defaults filled) used in manifests;
// parse(echo(x)) == echo(x) byte for byte.
nlohmann::json config_echo(const ExperimentConfig& cfg);

} // namespace krr
