#pragma once

#include <stdexcept>
#include <string>

#include "dualmesh/sim.hpp"

namespace dualmesh::sim {

// Scenario files are flat key = value lines under [section] headers.
// Unknown sections or keys are errors, with the offending line reported.
struct ScenarioParseError : std::runtime_error {
  int line = 0;
  std::string field;

  ScenarioParseError(int line_no, std::string field_name,
                     const std::string& message);
};

ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace dualmesh::sim
