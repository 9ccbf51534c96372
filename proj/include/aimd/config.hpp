#pragma once

// JSON experiment files. Schema documented in docs/config.md.

#include <string>

#include "aimd/harness.hpp"

namespace aimd {

std::string experiment_to_json(const ExperimentDef& def, int indent = 2);
/// Throws ConfigError on malformed input or missing required keys.
ExperimentDef experiment_from_json(const std::string& text);

ExperimentDef load_experiment(const std::string& path);
void save_experiment(const ExperimentDef& def, const std::string& path);

}  // namespace aimd
