#pragma once

// Run configuration as a flat JSON object with dotted keys, e.g.
//   { "env.turns_per_episode": 40, "train.clip": 0.2, "probe.d_values": [5] }
// Command-line flags use the same keys and take precedence over the file.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "stubborn/env.hpp"
#include "stubborn/probe.hpp"
#include "stubborn/trainer.hpp"

namespace stubborn {

struct RunConfig {
  EnvConfig env;
  TrainConfig train;
  ProbeSpec probe;
  std::filesystem::path out = "runs/default";

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
};

/// Every recognised key, in the order written to config.resolved.
const std::vector<std::string>& config_keys();

/// Sets one key. Throws ConfigError naming the key when it is unknown or the
/// value has the wrong type.
void apply_key(RunConfig& config, const std::string& key, const nlohmann::json& value);

/// Interprets a command-line string as JSON when it parses (numbers, bools,
/// arrays); a bare comma list becomes an array; anything else is a string.
nlohmann::json parse_flag_value(const std::string& text);

/// Applies every key of a flat JSON object file.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace stubborn
