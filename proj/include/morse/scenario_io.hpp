#ifndef MORSE_SCENARIO_IO_HPP
#define MORSE_SCENARIO_IO_HPP

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "morse/scenario.hpp"

namespace morse {

using Json = nlohmann::ordered_json;

class ScenarioFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json scenario_to_json(const Scenario& s);
/// Throws ScenarioFormatError (wrapping ParseError messages) on bad input.
Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const std::filesystem::path& path);

Json chart_point_json(const Atlas& atlas, const ChartPoint& p);
ChartPoint chart_point_from_json(const Atlas& atlas, const Json& j);

/// Writes `<name>.json` for each builtin into `dir`; returns the paths.
/// Throws std::runtime_error on I/O failure.
std::vector<std::filesystem::path> emit_scenarios(const std::filesystem::path& dir);

/// A builtin name or a path to a scenario JSON file.
Scenario resolve_scenario(const std::string& source);

}  // namespace morse

#endif  // MORSE_SCENARIO_IO_HPP
