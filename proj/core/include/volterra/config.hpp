#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "volterra/harvest.hpp"
#include "volterra/kernels.hpp"
#include "volterra/maxprinciple.hpp"

namespace volterra {

/// Kernel or time-function preset: kind plus positional parameters.
///   two-time: constant [c], exp_decay [c, lambda], poly [a0, a1, ...]
///   one-time: constant [c], exponential [a, b]
struct PresetConfig {
  std::string kind = "constant";
  std::vector<double> params = {0.0};

  bool operator==(const PresetConfig&) const = default;
};

struct GridConfig {
  double T = 1.0;
  std::size_t N = 64;
  std::size_t M = 10000;
  std::uint64_t seed = 42;

  bool operator==(const GridConfig&) const = default;
};

struct ModelConfig {
  double x0 = 1.0;
  PresetConfig b0{"constant", {0.0}};       // drift on the state
  PresetConfig sigma0{"constant", {0.0}};   // diffusion on the state, sigma0(s) X(s)
  PresetConfig h{"constant", {1.0}};        // harvesting kernel, enters the state with -h
  PresetConfig b_u{"constant", {0.0}};      // drift on the regular control
  PresetConfig sigma_shift{"constant", {0.0}};  // additive noise kernel
  double f0_x = 0.0;
  double f0_u = 0.0;
  double f0_u2 = 0.0;
  double u = 0.0;  // constant regular control
  double u_lo = -std::numeric_limits<double>::infinity();
  double u_hi = std::numeric_limits<double>::infinity();
  std::string filtration = "full";

  bool operator==(const ModelConfig&) const = default;
};

struct PriceConfig {
  std::string mode = "density_independent";
  PresetConfig rho{"constant", {1.0}};
  std::vector<double> theta = {1.0, 0.0, 0.0};  // c0 + c1 B(T) + c2 B(T)^2

  bool operator==(const PriceConfig&) const = default;
};

struct SolverConfig {
  std::string method = "both";  // closed_form | regression | both
  int degree = 2;
  double psi_tol = 1e-10;
  std::size_t max_order = 400;
  double epsilon = 1e-4;
  int malliavin_degree = 3;
  std::size_t max_iter = 50;
  double reflection_tol = 1e-10;
  std::string candidate = "zero";  // density-dependent modes: zero | coupled
  double damping = 0.5;
  bool experimental_malliavin = false;

  bool operator==(const SolverConfig&) const = default;
};

struct ChecksConfig {
  double k_se = 3.0;
  double abs_tol = 1e-9;
  std::vector<double> atom_times = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> atom_sizes = {0.5, 1.0, 1.5, 1.0, 0.5};
  double atom_scale = 0.0;
  bool scaling_probe = true;
  std::string policy = "auto";  // check-mp: auto | zero | reflected | coupled
  double lambda = 1e-3;
  std::vector<double> bump_starts = {0.2, 0.5, 0.7};
  double bump_width = 0.1;
  std::string gradient = "scheme";  // scheme | continuous

  bool operator==(const ChecksConfig&) const = default;
};

struct RunConfig {
  GridConfig grid;
  ModelConfig model;
  PriceConfig price;
  SolverConfig solver;
  ChecksConfig checks;
  std::string out = "out";

  bool operator==(const RunConfig&) const = default;
};

// Throws ConfigError naming the dotted key and its line.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
// Range and preset checks shared by the parser and command-line overrides.
void validate_config(const RunConfig& config);
// TOML text that parses back to an equal RunConfig.
std::string emit_config(const RunConfig& config);

TwoTimeKernel make_kernel(const PresetConfig& preset, double horizon);
TimeFunction make_function(const PresetConfig& preset);

TimeGrid make_grid(const RunConfig& config);
HarvestScenario make_scenario(const RunConfig& config);
// Harvest scenario plus the regular-control part of the model.
ControlProblem make_problem(const RunConfig& config);
RegularControl make_control(const RunConfig& config, const TimeGrid& grid);
CheckTolerances make_tolerances(const RunConfig& config);
AdjointOptions make_adjoint_options(const RunConfig& config);
HarvestOptions make_harvest_options(const RunConfig& config);

}  // namespace volterra
