#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "volterra/brownian.hpp"
#include "volterra/control.hpp"
#include "volterra/kernels.hpp"
#include "volterra/process.hpp"
#include "volterra/stats.hpp"

namespace volterra {

/// Functional F of a sampled Brownian path, given as B(t_0..t_N).
///
/// Oracle presets also carry the analytic D_t F and, where it has a closed
/// form, E[D_t F | F_t] as a function of the path up to t_i.
struct PathFunctional {
  using Eval = std::function<double(std::span<const double> b)>;
  using Derivative = std::function<double(std::size_t node, std::span<const double> b)>;

  std::string name;
  Eval value;
  Derivative derivative;              // D_{t_j} F for t in cell j; may be empty
  Derivative conditional_derivative;  // E[D_{t_i} F | F_{t_i}] from b[0..i]; may be empty
  // Characteristic size of F, used to scale the default step.
  double scale = 1.0;

  double operator()(std::span<const double> b) const { return value(b); }

  static PathFunctional constant(double c);
  static PathFunctional terminal_value();   // B(T)
  static PathFunctional terminal_square();  // B(T)^2
  // int_0^T phi dB with deterministic phi (left-point sum).
  static PathFunctional wiener_integral(const TimeFunction& phi, const TimeGrid& grid);
  // exp(int phi dB - 1/2 int phi^2 dt).
  static PathFunctional exp_wiener(const TimeFunction& phi, const TimeGrid& grid);
  // outer(inner(b)); D_t is outer'(inner) D_t inner, with no closed-form
  // conditional expectation.
  static PathFunctional composite(std::function<double(double)> outer,
                                  std::function<double(double)> outer_prime,
                                  const PathFunctional& inner, std::string name);
  // a F + c G
  static PathFunctional linear_combination(double a, const PathFunctional& f, double c,
                                           const PathFunctional& g);
};

struct MalliavinOptions {
  double epsilon = 1e-4;  // multiplied by the functional's scale
  int degree = 3;         // regression degree in B(t) for E[. | F_t]
};

// Cameron-Martin central difference per path:
//   (F(B + eps Gamma) - F(B - eps Gamma)) / (2 eps), Gamma(t_i) = sum_{j<i} gamma_j dt.
// gamma has N entries (one per cell).
std::vector<double> directional_derivative(const PathFunctional& f, std::span<const double> gamma,
                                           double epsilon, const BrownianEnsemble& noise);

// D_{t_j} F per path from cell indicators gamma = 1_[t_j, t_{j+1}) / dt.
// Row-major M x N.
std::vector<double> hida_derivative_profile(const PathFunctional& f, double epsilon,
                                            const BrownianEnsemble& noise);

/// phi(t_i) as a function of the path. `adapted` states whether the value
/// at t_i reads only b[0..i]; an anticipating integrand is rejected.
struct AdaptedIntegrand {
  std::string name;
  std::function<double(std::size_t node, std::span<const double> b)> value;
  bool adapted = true;

  static AdaptedIntegrand deterministic(const TimeFunction& phi, const TimeGrid& grid);
  static AdaptedIntegrand path_value();          // phi(t) = B(t)
  static AdaptedIntegrand terminal_lookahead();  // phi(t) = B(T), not adapted
};

struct DualityResult {
  std::string functional;
  std::string integrand;
  Estimate lhs;  // E[F int phi dB]
  Estimate rhs;  // E[int E[D_t F | F_t] phi dt]
  bool analytic_conditional = false;
  double combined_se() const;
  // |lhs - rhs| <= k * combined SE (+ abs_tol)
  bool agrees(double k = 3.0, double abs_tol = 1e-12) const;
};

DualityResult duality_check(const PathFunctional& f, const AdaptedIntegrand& phi,
                            const BrownianEnsemble& noise, const MalliavinOptions& options = {});

/// Pathwise finite-sum rearrangements on the grid:
///   (1) sum_i p_i (sum_{j<i} G(t_i,t_j) dt) dt = sum_j (sum_{i>j} p_i G(t_i,t_j) dt) dt
///   (2) sum_i p_i (sum_{j<i} G(t_i,t_j) dxi_j) dt = sum_j (sum_{i>j} p_i G(t_i,t_j) dt) dxi_j
/// Residuals are the largest per-path |lhs - rhs|.
struct FubiniReport {
  double identity1 = 0.0;
  double identity2 = 0.0;
  // |lhs - rhs| with dxi moved to the outer integral of the left side, which
  // is not an identity in general; kept as a diagnostic.
  double identity2_outer_dxi_gap = 0.0;
};

FubiniReport fubini_checks(const ProcessPath& p, const TwoTimeKernel& g, const SingularControl& xi);

/// p(t_i) as a functional of the path up to t_i.
using ProcessFunctional = std::function<double(std::size_t node, std::span<const double> b)>;

/// (3): E[sum_i p_i (sum_{j<i} G(t_i,t_j) dB_j) dt]
///    = E[sum_j sum_{i>j} E[D_{t_j} p_i | F_{t_j}] G(t_i,t_j) dt dt].
struct StochasticFubiniResult {
  Estimate lhs;
  Estimate rhs;
  bool agrees(double k = 3.0, double abs_tol = 1e-12) const;
};

StochasticFubiniResult fubini_stochastic(const ProcessFunctional& p, const TwoTimeKernel& g,
                                         const BrownianEnsemble& noise,
                                         const MalliavinOptions& options = {});

}  // namespace volterra
