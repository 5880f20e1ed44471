#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "volterra/brownian.hpp"
#include "volterra/config.hpp"
#include "volterra/control.hpp"

namespace volterra {

/// Output of one subcommand, held in memory until every file is ready.
struct RunResult {
  std::string command;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  std::string summary;        // human-readable
  bool checks_passed = true;  // verification outcome, not an error
};

const std::vector<std::string>& command_names();

// Singular control named by checks.policy ("auto" picks the reflected control
// in the price mode, the coupled candidate when solver.candidate = "coupled",
// and zero otherwise).
SingularControl resolve_policy(const RunConfig& config, const BrownianEnsemble& noise);

RunResult run_simulate(const RunConfig& config);
RunResult run_adjoint(const RunConfig& config);
RunResult run_check_mp(const RunConfig& config);
RunResult run_harvest_command(const RunConfig& config);
RunResult run_duality_test(const RunConfig& config);

// Dispatch by name; throws std::invalid_argument for unknown commands.
RunResult run_command(const std::string& command, const RunConfig& config);

// JSON manifest: version, command, seed, every resolved setting and the outputs.
std::string manifest_json(const RunConfig& config, const RunResult& result);

// Writes every file and then the manifest into `dir`, each atomically.
std::vector<std::filesystem::path> commit(const RunResult& result, const RunConfig& config,
                                          const std::filesystem::path& dir);

}  // namespace volterra
