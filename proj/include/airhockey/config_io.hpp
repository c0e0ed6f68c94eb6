#pragma once

// JSON config files. Every file carries `format_version`; omitted keys keep
// their built-in defaults. Parse failures raise ConfigError.

#include "airhockey/env.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace airhockey {

using Json = nlohmann::json;

inline constexpr int kConfigFormatVersion = 1;

Json load_json_file(const std::filesystem::path& path);
void save_json_file(const Json& doc, const std::filesystem::path& path);

Json to_json(const Table& table);
Table table_from_json(const Json& doc);

Json to_json(const ArmConfig& arm);
ArmConfig arm_from_json(const Json& doc);

Json to_json(const RuleConfig& rules);
RuleConfig rules_from_json(const Json& doc);

Json to_json(const NoiseConfig& noise);
NoiseConfig noise_from_json(const Json& doc);

/// Accepts `{"strategy": "aggressive"}` optionally overriding the reward
/// components with fraction strings such as "-1/3".
Json to_json(const StrategyRewardConfig& rewards, Strategy name);
StrategyRewardConfig strategy_from_json(const Json& doc);

/// `{"strategies": [<strategy doc>, ...]}`; strategies not listed keep
/// their defaults.
Json to_json(const std::array<StrategyRewardConfig, 3>& rewards);
std::array<StrategyRewardConfig, 3> strategies_from_json(const Json& doc);

Rational parse_rational(const std::string& text);

/// Fingerprint of a config document, stable under key reordering.
std::string config_hash(const Json& doc);

struct ConfigPaths {
  std::optional<std::filesystem::path> table;
  std::optional<std::filesystem::path> chain;
  std::optional<std::filesystem::path> rules;
  std::optional<std::filesystem::path> noise;
  std::optional<std::filesystem::path> strategies;
};

struct LoadedConfig {
  SimConfig sim;
  /// Noise applied to the learner during training; matches are noise-free.
  NoiseConfig noise = NoiseConfig::training_defaults();
  std::array<StrategyRewardConfig, 3> rewards{StrategyRewardConfig::of(Strategy::balanced),
                                              StrategyRewardConfig::of(Strategy::aggressive),
                                              StrategyRewardConfig::of(Strategy::defensive)};
  std::string table_hash;
  std::string chain_hash;
  std::string rules_hash;
  std::string noise_hash;
  std::string strategies_hash;
};

LoadedConfig load_config(const ConfigPaths& paths);

}  // namespace airhockey
