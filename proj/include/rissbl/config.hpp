#pragma once

#include <iosfwd>
#include <string>

#include "rissbl/harness.hpp"

namespace rissbl {

/// Everything a config file can set. Format: one `key = value` per line,
/// '#' starts a comment, blank lines ignored. Keys are the ScenarioConfig
/// field names plus the sweep/runtime keys:
///   axis, values (comma list), trials, estimators (comma list), output_path,
///   omp_sparsity, q_values (comma list), repetitions, iterations.
struct ConfigFile {
  SweepSpec sweep;
  RuntimeSpec runtime;
};

/// Throws ConfigError naming the line on unknown keys or malformed values.
ConfigFile parse_config(std::istream& is);
ConfigFile load_config(const std::string& path);

/// Splits "a, b ,c" into trimmed non-empty items.
std::vector<std::string> split_list(const std::string& text);

/// key = value lines for every ScenarioConfig field, in declaration order.
std::vector<std::pair<std::string, std::string>> scenario_fields(const ScenarioConfig& cfg);

}  // namespace rissbl
