#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "capsim/experiment.hpp"

namespace capsim {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parses a flat key=value config file. Blank lines and lines whose first
/// non-space character is '#' are skipped. Unknown keys, malformed values and
/// out-of-range settings raise ConfigError naming the key and line.
SweepConfig load_config(const std::string& path);

/// Applies one "key=value" override on top of an existing config (line 0 in
/// diagnostics marks a command-line override).
void apply_setting(SweepConfig& cfg, const std::string& key,
                   const std::string& value, int line);

void apply_override(SweepConfig& cfg, const std::string& assignment);

/// Range checks that only make sense once the whole config is assembled.
void validate_config(const SweepConfig& cfg);

/// The resolved config as a JSON object, keyed exactly like the config file.
std::string config_json(const SweepConfig& cfg, int indent);

/// Run manifest: resolved config plus invocation metadata. The timestamp
/// lives here and nowhere else, so every data and figure file stays
/// byte-reproducible.
std::string manifest_json(const SweepConfig& cfg, const std::string& command,
                          int threads, const std::vector<std::string>& outputs);

}  // namespace capsim
