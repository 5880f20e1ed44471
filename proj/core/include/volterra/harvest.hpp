#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "volterra/adjoint.hpp"
#include "volterra/brownian.hpp"
#include "volterra/control.hpp"
#include "volterra/kernels.hpp"
#include "volterra/maxprinciple.hpp"
#include "volterra/process.hpp"

namespace volterra {

enum class PriceMode { density_dependent, log, density_independent };

std::string to_string(PriceMode mode);
// Accepts "density_dependent", "log", "density_independent"; throws std::invalid_argument.
PriceMode price_mode_from_string(const std::string& name);

/// Harvested population
///   X(t) = x0 + int_0^t b0(t,s) X ds + int_0^t sigma0(s) X dB - int_0^t h(t,s) dxi(s)
/// with reward E[theta X(T) + int f1 dxi], f1 = X, log X or rho(t).
struct HarvestScenario {
  double x0 = 1.0;
  TwoTimeKernel b0;
  TimeFunction sigma0;
  TwoTimeKernel h = TwoTimeKernel::constant(1.0);
  TerminalWeight theta;
  PriceMode mode = PriceMode::density_independent;
  TimeFunction rho = TimeFunction::constant(1.0);

  // x0 > 0, h(t,t) > 0 on the grid, rho > 0 on the grid in the price mode.
  void validate(const TimeGrid& grid) const;
  // State enters with -h; u is absent (zero kernels, U = R).
  ControlProblem problem(const TimeGrid& grid) const;
};

/// Lower obstacle for p on nodes 0..N (M x (N+1) or 1 x (N+1)); only t < T binds.
struct Barrier {
  std::size_t rows = 1;
  std::size_t steps = 0;
  std::vector<double> values;
  bool nonlocal = false;

  double operator()(std::size_t path, std::size_t i) const {
    return values[(rows == 1 ? 0 : path) * (steps + 1) + i];
  }
};

// rho(t_i) / h(t_i,t_i) per node.
Barrier local_barrier(const HarvestScenario& scenario, const TimeGrid& grid);

struct ReflectionOptions {
  AdjointOptions adjoint;
  std::size_t max_iter = 50;  // nonlocal barrier iteration
  double tol = 1e-10;
};

struct ReflectedSolution {
  AdjointSolution p;
  SingularControl xi;
  Barrier barrier;
  bool experimental = false;  // nonlocal barrier iteration was used
  std::size_t iterations = 1;
  std::vector<double> residual_history;
};

// Backward reflected sweep for the price mode: p~_i from the Q-regression of the
// Volterra target, p_i = max(p~_i, L_i), dxi_i = (p_i - p~_i) / h(t_i,t_i).
// When h depends on t the barrier is nonlocal and is found by iteration; throws
// NotConverged with the residual history when max_iter is exhausted.
ReflectedSolution solve_reflected_adjoint(const HarvestScenario& scenario,
                                          const BrownianEnsemble& noise,
                                          const ReflectionOptions& options = {});

struct DensityDiagnosis {
  MpReport report;
  ProcessPath x;
  AdjointSolution p;
  std::vector<Estimate> lhs;  // h(t,t) p(t) + int dh/ds p ds, per node
  std::vector<Estimate> rhs;  // f1'(X(t)) multiplier side: X(t) (or log X(t))
};

// Necessary conditions for a candidate xi in the density-dependent (or log) mode.
DensityDiagnosis diagnose_density_dependent(const HarvestScenario& scenario,
                                            const SingularControl& candidate,
                                            const BrownianEnsemble& noise,
                                            const CheckTolerances& tol = {},
                                            const AdjointOptions& options = {});

struct CoupledOptions {
  AdjointOptions adjoint;
  std::size_t max_iter = 30;
  double damping = 0.5;  // weight on the previous xi
  double tol = 1e-8;     // on the mean total variation between iterates
};

struct CoupledResult {
  ProcessPath x;
  AdjointSolution p;
  SingularControl xi;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> tv_history;
};

// Heuristic for the density-dependent mode with h = 1: alternate forward,
// adjoint and re-reflection of p against the barrier X. Never throws for
// non-convergence.
CoupledResult coupled_fixed_point(const HarvestScenario& scenario, const BrownianEnsemble& noise,
                                  const CoupledOptions& options = {});

struct AlternativeSpec {
  std::vector<double> atom_times = {0.1, 0.3, 0.5, 0.7, 0.9};  // fractions of T
  std::vector<double> atom_sizes = {0.5, 1.0, 1.5, 1.0, 0.5};  // multiples of the scale
  double scale = 0.0;  // 0: mean total mass of xi (or 0.1 x0 when that is 0)
};

// zero, one atom per entry of atom_times, uniform rate.
std::vector<std::pair<std::string, SingularControl>> shipped_alternatives(
    const TimeGrid& grid, const AlternativeSpec& spec, double scale);

struct SkorokhodStats {
  double min_gap = 0.0;            // min over nodes < N and paths of p - L
  Estimate complementarity;        // per path sum_i (p_i - L_i) dxi_i
  std::size_t off_barrier_pushes = 0;  // dxi > 0 with p != L
  double mean_mass = 0.0;          // E[xi(T)]
};

SkorokhodStats skorokhod_stats(const ReflectedSolution& r);

struct HarvestOptions {
  ReflectionOptions reflection;
  CheckTolerances tol;
  AlternativeSpec alternatives;
  bool scaling_probe = true;  // xi scaled by 0.8 and 1.2
  std::string candidate = "zero";  // density-dependent modes: "zero" or "coupled"
  CoupledOptions coupled;
};

struct HarvestReport {
  PriceMode mode = PriceMode::density_independent;
  ProcessPath x;
  AdjointSolution p;
  SingularControl xi;
  Barrier barrier;
  MpReport check;
  std::vector<PolicyRow> tournament;
  std::vector<PolicyRow> scaling;
  SkorokhodStats skorokhod;
  std::vector<std::string> notes;
};

HarvestReport run_harvest(const HarvestScenario& scenario, const BrownianEnsemble& noise,
                          const HarvestOptions& options = {});

}  // namespace volterra
