#pragma once

#include <cstddef>
#include <vector>

#include "volterra/brownian.hpp"
#include "volterra/control.hpp"
#include "volterra/kernels.hpp"
#include "volterra/process.hpp"
#include "volterra/stats.hpp"

namespace volterra {

/// c(t,s,x,u) = state(t,s) x + control(t,s) u + shift(t,s).
struct AffineCoefficient {
  TwoTimeKernel state;
  TwoTimeKernel control;
  TwoTimeKernel shift;

  double operator()(double t, double s, double x, double u) const {
    return state(t, s) * x + control(t, s) * u + shift(t, s);
  }
  // d/dt in the first time argument.
  double time_derivative(double t, double s, double x, double u) const;
  bool has_time_derivative() const noexcept;
  bool is_zero() const noexcept { return state.is_zero() && control.is_zero() && shift.is_zero(); }
  bool constant_in_time() const noexcept {
    return state.constant_in_time() && control.constant_in_time() && shift.constant_in_time();
  }
};

// K(t,s) = f(s): a deterministic function used as a kernel constant in t.
// The bound on [0, horizon] is exact for the constant and exponential forms
// and sampled for custom ones.
TwoTimeKernel kernel_of(const TimeFunction& f, double horizon);

/// Controlled SVIE
///   X(t) = phi(t) + int_0^t b(t,s,X,u) ds + int_0^t sigma(t,s,X,u) dB(s)
///          + int_0^t h(t,s) dxi(s).
/// h is signed: a harvesting model passes -h.
struct SvieSpec {
  TimeFunction phi = TimeFunction::constant(1.0);
  AffineCoefficient drift;
  AffineCoefficient diffusion;
  TwoTimeKernel singular;
};

/// Left-point Euler scheme with the full two-time sum at every node:
///   X_i = phi(t_i) + sum_{j<i} [b(t_i,t_j,X_j,u_j) dt + sigma(t_i,t_j,X_j,u_j) dB_j
///                               + h(t_i,t_j) dxi_j].
/// A non-finite state throws SimulationDiverged with the first bad (path, node).
ProcessPath simulate(const SvieSpec& spec, const RegularControl& u, const SingularControl& xi,
                     const BrownianEnsemble& noise);

enum class SingularRewardKind { none, linear, log, price };

/// theta = c0 + c1 B(T) + c2 B(T)^2.
struct TerminalWeight {
  double c0 = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;

  bool is_deterministic() const noexcept { return c1 == 0.0 && c2 == 0.0; }
  double operator()(double bt) const noexcept { return c0 + (c1 + c2 * bt) * bt; }
};

/// J = E[ sum_{i<N} f0(t_i,X_i,u_i) dt + sum_{i<N} f1(t_i,X_i) dxi_i + theta X_N ].
/// f0 = x_coef x + u_coef u + u2_coef u^2; f1 is coef*x, coef*log x or rho(t).
struct PerformanceSpec {
  double f0_x = 0.0;
  double f0_u = 0.0;
  double f0_u2 = 0.0;
  SingularRewardKind f1 = SingularRewardKind::none;
  double f1_coef = 1.0;
  TimeFunction rho;
  TerminalWeight theta;

  double running(double x, double u) const noexcept { return f0_x * x + f0_u * u + f0_u2 * u * u; }
  double running_du(double u) const noexcept { return f0_u + 2.0 * f0_u2 * u; }
  double running_dx() const noexcept { return f0_x; }
  // Throws DomainError for log at x <= 0.
  double singular(double t, double x, std::size_t path, std::size_t node) const;
  // d f1 / dx, the singular-drift weight of the adjoint.
  double singular_dx(double x) const noexcept;
};

struct JEstimate {
  Estimate value;
  std::vector<double> per_path;
};

// `noise` supplies B(T) for a random theta; it may be null when theta is
// deterministic.
JEstimate evaluate_J(const PerformanceSpec& perf, const ProcessPath& x, const RegularControl& u,
                     const SingularControl& xi, const BrownianEnsemble* noise);

// (X^{u + lambda v, xi} - X^{u, xi}) / lambda on common noise.
ProcessPath derivative_process(const SvieSpec& spec, const RegularControl& u,
                               const SingularControl& xi, const RegularControl& direction,
                               const BrownianEnsemble& noise, double lambda = 1e-4);
// (X^{u, xi + lambda zeta} - X^{u, xi}) / lambda; throws std::invalid_argument
// when xi + lambda zeta has a negative increment.
ProcessPath derivative_process(const SvieSpec& spec, const RegularControl& u,
                               const SingularControl& xi, const SingularControl& direction,
                               const BrownianEnsemble& noise, double lambda = 1e-4);

}  // namespace volterra
