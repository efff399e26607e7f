#include <CLI11.hpp>

#include <iostream>

#include "anchor/core.hpp"
#include "experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"anchored fixed-point iteration experiments"};
  app.require_subcommand(1);

  std::string run_config, verify_config, export_config;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("config", run_config, "JSON config file")->required();
  auto* verify_cmd =
      app.add_subcommand("verify", "run the invariant property suite");
  verify_cmd->add_option("config", verify_config, "JSON config file")->required();
  auto* export_cmd = app.add_subcommand(
      "export-instance", "write the config's problem instance to disk");
  export_cmd->add_option("config", export_config, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return anchor::cli::kExitUsage;
  }

  try {
    if (run_cmd->parsed()) {
      return anchor::cli::run_experiment(anchor::cli::load_config(run_config));
    }
    if (verify_cmd->parsed()) {
      return anchor::cli::run_verify(anchor::cli::load_config(verify_config));
    }
    return anchor::cli::export_instance(anchor::cli::load_config(export_config));
  } catch (const anchor::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return anchor::cli::kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return anchor::cli::kExitUsage;
  } catch (const anchor::NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << '\n';
    return anchor::cli::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return anchor::cli::kExitFailure;
  }
}
