#include "volterra/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "volterra/errors.hpp"
#include "volterra/parallel.hpp"

namespace volterra {

double AffineCoefficient::time_derivative(double t, double s, double x, double u) const {
  double d = 0.0;
  if (!state.is_zero()) d += state.time_derivative(t, s) * x;
  if (!control.is_zero()) d += control.time_derivative(t, s) * u;
  if (!shift.is_zero()) d += shift.time_derivative(t, s);
  return d;
}

bool AffineCoefficient::has_time_derivative() const noexcept {
  return (state.is_zero() || state.has_time_derivative()) &&
         (control.is_zero() || control.has_time_derivative()) &&
         (shift.is_zero() || shift.has_time_derivative());
}

TwoTimeKernel kernel_of(const TimeFunction& f, double horizon) {
  if (f.is_constant()) return TwoTimeKernel::constant(f.a());
  double bound = 0.0;
  if (f.label() == "exponential") {
    bound = std::abs(f.a()) * std::max(1.0, std::exp(f.b() * horizon));
  } else {
    for (int k = 0; k <= 4096; ++k) bound = std::max(bound, std::abs(f(horizon * k / 4096.0)));
  }
  return TwoTimeKernel::custom([f](double, double s) { return f(s); }, {}, bound, true);
}

namespace {

// Lower-triangular table K(t_i, t_j), j < i, packed by row.
class LowerTable {
public:
  LowerTable(const TwoTimeKernel& k, const TimeGrid& g) : zero_(k.is_zero()) {
    if (zero_) return;
    const std::size_t n = g.steps();
    values_.resize(n * (n + 1) / 2);
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < i; ++j) values_[offset(i) + j] = k(g.node(i), g.node(j));
    }
  }
  bool zero() const noexcept { return zero_; }
  const double* row(std::size_t i) const noexcept { return values_.data() + offset(i); }

private:
  static std::size_t offset(std::size_t i) noexcept { return i * (i - 1) / 2; }
  bool zero_;
  std::vector<double> values_;
};

void check_alignment(const TimeGrid& g, const RegularControl& u, const SingularControl& xi,
                     const BrownianEnsemble& noise) {
  if (!(u.grid() == g) || !(xi.grid() == g)) {
    throw std::invalid_argument("simulate: controls and noise must share one grid");
  }
  const std::size_t m = noise.paths();
  if ((u.rows() != 1 && u.rows() != m) || (xi.rows() != 1 && xi.rows() != m)) {
    throw std::invalid_argument("simulate: per-path controls must match the path count");
  }
}

}  // namespace

ProcessPath simulate(const SvieSpec& spec, const RegularControl& u, const SingularControl& xi,
                     const BrownianEnsemble& noise) {
  const TimeGrid& g = noise.grid();
  check_alignment(g, u, xi, noise);
  const std::size_t n = g.steps();
  const double dt = g.dt();

  const LowerTable bx(spec.drift.state, g), bu(spec.drift.control, g), bc(spec.drift.shift, g);
  const LowerTable sx(spec.diffusion.state, g), su(spec.diffusion.control, g),
      sc(spec.diffusion.shift, g);
  const LowerTable hh(spec.singular, g);
  std::vector<double> phi(n + 1);
  for (std::size_t i = 0; i <= n; ++i) phi[i] = spec.phi(g.node(i));

  ProcessPath out(g, noise.paths());
  parallel_for(noise.paths(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> uu(n), dxi(n);
    for (std::size_t m = begin; m < end; ++m) {
      auto x = out.path(m);
      const auto db = noise.increments(m);
      for (std::size_t i = 0; i < n; ++i) {
        uu[i] = u.value(m, i);
        dxi[i] = xi.increment(m, i);
      }
      x[0] = phi[0];
      if (!std::isfinite(x[0])) throw SimulationDiverged(m, 0, "simulate: non-finite initial state");
      for (std::size_t i = 1; i <= n; ++i) {
        double drift = 0.0, noise_sum = 0.0, jumps = 0.0;
        if (!bx.zero()) {
          const double* r = bx.row(i);
          for (std::size_t j = 0; j < i; ++j) drift += r[j] * x[j];
        }
        if (!bu.zero()) {
          const double* r = bu.row(i);
          for (std::size_t j = 0; j < i; ++j) drift += r[j] * uu[j];
        }
        if (!bc.zero()) {
          const double* r = bc.row(i);
          for (std::size_t j = 0; j < i; ++j) drift += r[j];
        }
        if (!sx.zero()) {
          const double* r = sx.row(i);
          for (std::size_t j = 0; j < i; ++j) noise_sum += r[j] * x[j] * db[j];
        }
        if (!su.zero()) {
          const double* r = su.row(i);
          for (std::size_t j = 0; j < i; ++j) noise_sum += r[j] * uu[j] * db[j];
        }
        if (!sc.zero()) {
          const double* r = sc.row(i);
          for (std::size_t j = 0; j < i; ++j) noise_sum += r[j] * db[j];
        }
        if (!hh.zero()) {
          const double* r = hh.row(i);
          for (std::size_t j = 0; j < i; ++j) jumps += r[j] * dxi[j];
        }
        x[i] = phi[i] + drift * dt + noise_sum + jumps;
        if (!std::isfinite(x[i])) {
          throw SimulationDiverged(m, i, "simulate: state diverged on path " + std::to_string(m) +
                                             " at node " + std::to_string(i));
        }
      }
    }
  });
  return out;
}

double PerformanceSpec::singular(double t, double x, std::size_t path, std::size_t node) const {
  switch (f1) {
    case SingularRewardKind::none: return 0.0;
    case SingularRewardKind::linear: return f1_coef * x;
    case SingularRewardKind::log:
      if (!(x > 0.0)) {
        throw DomainError(path, node, "log reward at nonpositive state on path " +
                                          std::to_string(path) + " at node " + std::to_string(node));
      }
      return f1_coef * std::log(x);
    case SingularRewardKind::price: return rho(t);
  }
  return 0.0;
}

double PerformanceSpec::singular_dx(double x) const noexcept {
  switch (f1) {
    case SingularRewardKind::linear: return f1_coef;
    case SingularRewardKind::log: return f1_coef / x;
    default: return 0.0;
  }
}

JEstimate evaluate_J(const PerformanceSpec& perf, const ProcessPath& x, const RegularControl& u,
                     const SingularControl& xi, const BrownianEnsemble* noise) {
  const TimeGrid& g = x.grid();
  if (!(u.grid() == g) || !(xi.grid() == g)) {
    throw std::invalid_argument("evaluate_J: grids differ");
  }
  if (!perf.theta.is_deterministic()) {
    if (!noise) throw std::invalid_argument("evaluate_J: random theta needs the Brownian ensemble");
    if (noise->paths() != x.paths() || !(noise->grid() == g)) {
      throw std::invalid_argument("evaluate_J: noise is not aligned with the state paths");
    }
  }
  const std::size_t n = g.steps();
  const double dt = g.dt();
  JEstimate out;
  out.per_path.resize(x.paths());
  parallel_for(x.paths(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      double running = 0.0, singular = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        running += perf.running(x(m, i), u.value(m, i));
        const double d = xi.increment(m, i);
        if (d > 0.0) singular += perf.singular(g.node(i), x(m, i), m, i) * d;
      }
      const double theta = perf.theta.is_deterministic() ? perf.theta.c0
                                                         : perf.theta(noise->terminal(m));
      out.per_path[m] = running * dt + singular + theta * x(m, n);
    }
  });
  out.value = mean_estimate(out.per_path);
  return out;
}

namespace {

ProcessPath difference_quotient(const ProcessPath& bumped, const ProcessPath& base, double lambda) {
  std::vector<double> v(base.raw().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = (bumped.raw()[k] - base.raw()[k]) / lambda;
  return ProcessPath(base.grid(), base.paths(), std::move(v));
}

}  // namespace

ProcessPath derivative_process(const SvieSpec& spec, const RegularControl& u,
                               const SingularControl& xi, const RegularControl& direction,
                               const BrownianEnsemble& noise, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("derivative_process: lambda must be positive");
  const ProcessPath base = simulate(spec, u, xi, noise);
  return difference_quotient(simulate(spec, u.plus(lambda, direction), xi, noise), base, lambda);
}

ProcessPath derivative_process(const SvieSpec& spec, const RegularControl& u,
                               const SingularControl& xi, const SingularControl& direction,
                               const BrownianEnsemble& noise, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("derivative_process: lambda must be positive");
  const SingularControl perturbed = xi.plus(lambda, direction);
  const ProcessPath base = simulate(spec, u, xi, noise);
  return difference_quotient(simulate(spec, u, perturbed, noise), base, lambda);
}

}  // namespace volterra
