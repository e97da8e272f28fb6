#pragma once

// Run configuration files: INI sections of typed keys (docs/config_schema.md).

#include <string>

#include "cornerpml/pipeline.hpp"

namespace cpml {

/// Parses configuration text. Throws ParseError for malformed text, unknown
/// sections or keys and ill-typed values, ConfigError for invalid values.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);

/// Canonical text of a configuration with every default spelled out.
std::string format_config(const RunConfig& config);

}  // namespace cpml
