#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "volterra/grid.hpp"

namespace volterra {

enum class KernelKind { constant, exp_decay, poly, custom, tabulated };

std::string to_string(KernelKind kind);

/// Two-time coefficient K(t, s).
///
/// The presets are functions of the lag |t - s|: constant c, exp_decay
/// c*exp(-lambda*|t-s|), poly sum_k a_k |t-s|^k. Forward equations use the
/// triangle s <= t and backward ones s >= t; the lag form keeps one bound C
/// valid on both. `time_derivative` is dK/dt in the first argument.
class TwoTimeKernel {
public:
  TwoTimeKernel();  // identically zero

  static TwoTimeKernel constant(double c);
  static TwoTimeKernel exp_decay(double c, double lambda);
  static TwoTimeKernel poly(std::vector<double> coefficients);
  // `bound` must dominate |f| on [0,T]^2. An empty derivative means none.
  // `time_invariant` declares that f does not depend on its first argument.
  static TwoTimeKernel custom(std::function<double(double, double)> f,
                              std::function<double(double, double)> dfdt, double bound,
                              bool time_invariant = false);
  // values[i*(N+1)+j] = K(t_i, t_j) on the full node square; only node
  // arguments are accepted. dK/dt comes from finite differences in i.
  static TwoTimeKernel tabulated(const TimeGrid& grid, std::vector<double> values, double bound);

  double operator()(double t, double s) const;
  bool has_time_derivative() const noexcept;
  double time_derivative(double t, double s) const;

  // C with |K| <= C on [0,T]^2.
  double bound(double horizon) const;

  KernelKind kind() const noexcept { return kind_; }
  const std::vector<double>& params() const noexcept { return params_; }
  bool is_zero() const noexcept;
  // True when K(t,s) does not depend on t (so dK/dt == 0).
  bool constant_in_time() const noexcept;
  // Grid a tabulated kernel is pinned to (nullptr otherwise).
  const TimeGrid* tabulation_grid() const noexcept { return table_grid_.get(); }

  TwoTimeKernel scaled(double factor) const;

private:
  KernelKind kind_ = KernelKind::constant;
  std::vector<double> params_;
  double scale_ = 1.0;
  std::function<double(double, double)> f_;
  std::function<double(double, double)> dfdt_;
  double custom_bound_ = 0.0;
  bool time_invariant_ = false;
  std::shared_ptr<const TimeGrid> table_grid_;
  std::shared_ptr<const std::vector<double>> table_;
};

/// Deterministic function of one time variable (e.g. sigma_0(s), rho(t)).
class TimeFunction {
public:
  TimeFunction() = default;  // zero
  static TimeFunction constant(double c);
  // a * exp(b t)
  static TimeFunction exponential(double a, double b);
  static TimeFunction custom(std::function<double(double)> f, std::string label = "custom");

  double operator()(double t) const;
  bool is_constant() const noexcept { return !f_ && b_ == 0.0; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  const std::string& label() const noexcept { return label_; }

private:
  double a_ = 0.0;
  double b_ = 0.0;
  std::function<double(double)> f_;
  std::string label_ = "constant";
};

/// Values T(t_i, t_j) for i <= j (first time no later than the second),
/// packed row by row.
class KernelTable {
public:
  explicit KernelTable(TimeGrid grid);

  const TimeGrid& grid() const noexcept { return grid_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[offset(i) + (j - i)]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[offset(i) + (j - i)]; }
  double max_abs() const noexcept;

private:
  std::size_t offset(std::size_t i) const noexcept {
    const std::size_t n1 = grid_.steps() + 1;
    return i * n1 - i * (i - 1) / 2;
  }
  TimeGrid grid_;
  std::vector<double> values_;
};

// K(t_i, t_j) for i <= j.
KernelTable tabulate(const TwoTimeKernel& kernel, const TimeGrid& grid);

/// Truncated Neumann series Psi = sum_{n=1}^{order} b^n.
struct ResolventTable {
  KernelTable values;
  std::size_t order = 0;
  double tail_bound = 0.0;
  // tail bound after each included order; nonincreasing.
  std::vector<double> tail_history;
};

// b^1 = b, b^n(t,r) = int_t^r b^{n-1}(t,s) b(s,r) ds (trapezoid on the nodes).
KernelTable iterated_kernel(const TwoTimeKernel& b0, std::size_t n, const TimeGrid& grid);

// C^n T^(n-1) / (n-1)!: bound on |b^n| from |b| <= C.
double iterated_kernel_majorant(double bound, double horizon, std::size_t n);
// sum_{n > order} of the majorant above.
double neumann_tail_bound(double bound, double horizon, std::size_t order);

ResolventTable neumann_psi(const TwoTimeKernel& b0, const TimeGrid& grid, double tol,
                           std::size_t max_order = 400);

enum class Quadrature { trapezoid, simpson };

// Node weights (in units of dt) for integrating over `intervals` cells.
std::vector<double> quadrature_weights(std::size_t intervals, Quadrature rule);

// max |Psi(t,r) - b(t,r) - int_t^r b(t,s) Psi(s,r) ds| over nodes t <= r.
// The series is built with b on the right, so this left-sided identity is an
// independent check. With the trapezoid and a lag kernel the discrete
// identity holds exactly, so the default Simpson rule is what exposes the
// O(dt^2) discretisation error.
double resolvent_residual(const TwoTimeKernel& b0, const ResolventTable& psi,
                          Quadrature rule = Quadrature::simpson);

}  // namespace volterra
