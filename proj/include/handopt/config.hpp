#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "handopt/evaluation.hpp"
#include "handopt/evolution.hpp"

namespace handopt::cfg {

using nlohmann::json;

/// Everything a run depends on. Every field has a default, so `{}` is a
/// complete configuration.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: HANDOPT_WORKERS or all cores
  std::string output_dir = "handopt_run";
  std::string instances = "all";

  double mutation_fraction = 0.05;
  design::DesignBounds bounds = design::DesignBounds::table_defaults();

  evo::EvolutionConfig evolution;
  learning::TrainingConfig training;
  double gamma = 0.99;
  int return_episodes = 32;

  env::EnvParams env;
  eval::EvalConfig eval;
  bool compute_auc = true;
};

/// Parses a configuration document; unknown keys and wrong types raise
/// ConfigError naming the offending path.
RunConfig parse_config(const json& doc);

/// Fully expanded document that parses back to the same configuration.
json to_json(const RunConfig& config);

/// Applies "a.b.c=value". The value is read as JSON when it parses, else as a
/// string. Throws ConfigError on malformed assignments.
void apply_override(json& doc, std::string_view assignment);

/// Reads `path` (when given), applies overrides in order and parses. Throws
/// ConfigError if the file is missing or malformed.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides);

/// Worker count after HANDOPT_WORKERS and the `workers` field.
unsigned resolve_workers(const RunConfig& config);

std::vector<env::ObjectSpec> resolve_instances(const RunConfig& config,
                                               std::string_view spec);

evo::SimulationSetup make_setup(const RunConfig& config,
                                const std::vector<env::ObjectSpec>& instances);

/// Named reference designs: v3, v5, v6, v7.
design::DesignParams named_design(std::string_view name);

}  // namespace handopt::cfg
