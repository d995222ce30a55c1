// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "isac/harness.hpp"

namespace isac {

// Everything a run needs, loaded from one flat JSON object whose keys mirror
// the field names of the three structs.
struct RunConfig {
  ScenarioConfig scenario;
  OptimizerParams optimizer;
  SweepSpec sweep;
};

// Throws ConfigParseError naming the offending line for malformed JSON,
// unknown keys or values of the wrong type.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// "key=value"; value is read as JSON when it parses, otherwise as a string.
void apply_override(RunConfig& rc, const std::string& assignment);

std::string serialize_config(const RunConfig& rc);
std::vector<std::string> config_keys();

}  // namespace isac
