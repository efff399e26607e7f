#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace anchor::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // property or numerics failure
inline constexpr int kExitUsage = 2;    // usage or config error

nlohmann::json load_config(const std::string& path);

/// Resolves the output directory: ANCHOR_OUTPUT_DIR overrides the config.
std::filesystem::path output_dir(const nlohmann::json& config);

/// Runs the experiment named in the config; writes one CSV per solver plus
/// manifest.json. Returns an exit code.
int run_experiment(const nlohmann::json& config);

/// Writes the generated problem instance of the config's experiment as a
/// plain-text or JSON document. Returns an exit code.
int export_instance(const nlohmann::json& config);

/// Runs the named invariant properties, printing one PASS/FAIL line each.
int run_verify(const nlohmann::json& config);

}  // namespace anchor::cli
