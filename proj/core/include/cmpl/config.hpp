#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cmpl/trainer.hpp"

namespace cmpl {

// Flat UTF-8 `key = value` experiment configs with dotted namespaces and `#`
// comments. Unknown keys fail fast. A few shorthand aliases (tau, lambda,
// scheme, mode aliases used by sweeps) map onto canonical dotted keys.

ExperimentConfig default_config();

// Applies one key/value pair; resolves aliases; throws ConfigError on an
// unknown key or an unparsable value.
void apply_config_value(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Overrides are `key=value` strings, applied in order.
void apply_overrides(ExperimentConfig& config, std::span<const std::string> overrides);

// Every key in sorted order with round-trippable values; parsing this text
// reproduces the config exactly.
std::string canonical_config_text(const ExperimentConfig& config);

// FNV-1a 64 over the canonical text, as 16 lowercase hex chars.
std::string config_hash(const ExperimentConfig& config);

// Short git-style id derived from the hash (12 hex chars).
std::string run_id(const ExperimentConfig& config);

std::string format_double(double v);

}  // namespace cmpl
