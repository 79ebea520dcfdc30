#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sats/synthbench.hpp"
#include "sats/trainer.hpp"

namespace sats::cli {

/// Everything a command may need: benchmark generation plus training settings.
/// `seed` drives both.
struct ExperimentConfig {
  BenchConfig bench;
  StageConfig stage;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// malformed lines and repeated keys are ValidationErrors.
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin);

/// Applies one setting; unknown keys and unparsable values are ValidationErrors.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` listing of every setting, in a fixed order.
std::string to_text(const ExperimentConfig& cfg);

}  // namespace sats::cli
