#pragma once

#include "hcmpc/scenarios.hpp"

#include <stdexcept>
#include <string>

namespace hcmpc {

/// Parse or validation failure, formatted as "source:line: message".
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct LoadedConfig {
  ScenarioConfig scenario;
  /// Output directory from the `output` section (empty when absent).
  std::string output_dir;
};

/// Reads a YAML scenario file. The `scenario` key picks a preset whose fields the
/// other sections override; without it `model.id` selects the preset.
[[nodiscard]] LoadedConfig load_config(const std::string& path);
[[nodiscard]] LoadedConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Canonical text form of the resolved configuration (sorted keys, 17-digit numbers).
[[nodiscard]] std::string canonical_config(const ScenarioConfig& config);

/// Round-trip decimal form (17 significant digits); "NA" for non-finite values.
[[nodiscard]] std::string format_number(double v);

/// Hex SHA-256 of `text`.
[[nodiscard]] std::string sha256_hex(const std::string& text);

}  // namespace hcmpc
