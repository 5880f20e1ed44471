#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "volterra/config.hpp"
#include "volterra/errors.hpp"
#include "volterra/io.hpp"
#include "volterra/parallel.hpp"
#include "volterra/run.hpp"
#include "volterra/version.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumeric = 2;

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// Machine-parsable first line, human text second.
int fail(int code, const std::string& kind, const std::string& message, const std::string& key = "",
         std::size_t line = 0) {
  std::cerr << "volterra: error code=" << code << " kind=" << kind;
  if (!key.empty()) std::cerr << " key=" << key;
  if (line > 0) std::cerr << " line=" << line;
  std::cerr << "\n" << one_line(message) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular control of stochastic Volterra equations: simulation, adjoints and checks",
               "volterra"};
  app.set_version_flag("--version", std::string("volterra ") + volterra::kVersion);
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths, steps;
  std::optional<std::string> out;
  std::size_t threads = 0;
  bool dry_run = false;
  app.add_option("--config", config_path, "TOML config with [grid] [model] [price] [solver] [checks]");
  app.add_option("--seed", seed, "Override grid.seed");
  app.add_option("--paths", paths, "Override grid.M (Monte Carlo paths)");
  app.add_option("--steps", steps, "Override grid.N (time steps)");
  app.add_option("--out", out, "Output directory (overrides out)");
  app.add_option("--threads", threads, "Worker threads (0 = hardware); results do not depend on it");
  app.add_flag("--dry-run", dry_run, "Validate and print the resolved config; run nothing");

  const char* descriptions[] = {"Simulate the controlled state equation",
                                "Solve the adjoint equation (closed form and/or regression)",
                                "Check the maximum-principle conditions",
                                "Run a harvesting scenario",
                                "Check the duality formula and the Fubini identities"};
  std::size_t k = 0;
  for (const std::string& name : volterra::command_names()) app.add_subcommand(name, descriptions[k++]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail(kUsage, "usage", e.what());
    std::cerr << app.help();
    return kUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  volterra::RunConfig config;
  try {
    if (!config_path.empty()) config = volterra::load_config(config_path);
    if (seed) config.grid.seed = *seed;
    if (paths) config.grid.M = *paths;
    if (steps) config.grid.N = *steps;
    if (out) config.out = *out;
    volterra::validate_config(config);
  } catch (const volterra::ConfigError& e) {
    return fail(kUsage, "config", e.what(), e.key(), e.line());
  }

  if (dry_run) {
    std::cout << "# volterra " << volterra::kVersion << " " << command << " (dry run)\n"
              << volterra::emit_config(config);
    return kOk;
  }
  if (threads > 0) volterra::set_worker_count(threads);

  try {
    const volterra::RunResult result = volterra::run_command(command, config);
    volterra::commit(result, config, config.out);
    std::cout << result.summary << "outputs written to " << config.out << "\n";
    return kOk;
  } catch (const volterra::ConfigError& e) {
    return fail(kUsage, "config", e.what(), e.key(), e.line());
  } catch (const volterra::IoError& e) {
    return fail(kUsage, "io", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "invalid_argument", e.what());
  } catch (const volterra::NotConverged& e) {
    std::string history;
    for (double r : e.history()) history += (history.empty() ? "" : ",") + volterra::format_number(r);
    return fail(kNumeric, "not_converged", std::string(e.what()) + "; residual history: " + history);
  } catch (const volterra::SimulationDiverged& e) {
    return fail(kNumeric, "diverged", e.what());
  } catch (const volterra::DomainError& e) {
    return fail(kNumeric, "domain", e.what());
  } catch (const volterra::NumericError& e) {
    return fail(kNumeric, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(kNumeric, "internal", e.what());
  }
}
