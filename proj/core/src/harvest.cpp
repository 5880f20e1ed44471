#include "volterra/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "volterra/errors.hpp"
#include "volterra/parallel.hpp"
#include "volterra/regression.hpp"

namespace volterra {

std::string to_string(PriceMode mode) {
  switch (mode) {
    case PriceMode::density_dependent: return "density_dependent";
    case PriceMode::log: return "log";
    case PriceMode::density_independent: return "density_independent";
  }
  return "unknown";
}

PriceMode price_mode_from_string(const std::string& name) {
  if (name == "density_dependent") return PriceMode::density_dependent;
  if (name == "log") return PriceMode::log;
  if (name == "density_independent") return PriceMode::density_independent;
  throw std::invalid_argument("unknown price mode '" + name + "'");
}

void HarvestScenario::validate(const TimeGrid& grid) const {
  if (!(x0 > 0.0)) throw std::invalid_argument("harvest: x0 must be positive");
  for (std::size_t i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    if (!(h(t, t) > 0.0)) {
      throw std::invalid_argument("harvest: h(t,t) must be positive (fails at t=" +
                                  std::to_string(t) + ")");
    }
    if (mode == PriceMode::density_independent && !(rho(t) > 0.0)) {
      throw std::invalid_argument("harvest: rho must be positive (fails at t=" +
                                  std::to_string(t) + ")");
    }
  }
}

ControlProblem HarvestScenario::problem(const TimeGrid& grid) const {
  ControlProblem out;
  out.state.phi = TimeFunction::constant(x0);
  out.state.drift.state = b0;
  out.state.diffusion.state = kernel_of(sigma0, grid.horizon());
  out.state.singular = h.scaled(-1.0);
  out.reward.theta = theta;
  switch (mode) {
    case PriceMode::density_dependent: out.reward.f1 = SingularRewardKind::linear; break;
    case PriceMode::log: out.reward.f1 = SingularRewardKind::log; break;
    case PriceMode::density_independent:
      out.reward.f1 = SingularRewardKind::price;
      out.reward.rho = rho;
      break;
  }
  return out;
}

Barrier local_barrier(const HarvestScenario& scenario, const TimeGrid& grid) {
  Barrier b{1, grid.steps(), std::vector<double>(grid.steps() + 1), false};
  for (std::size_t i = 0; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    b.values[i] = scenario.rho(t) / scenario.h(t, t);
  }
  return b;
}

namespace {

bool all_equal(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

std::vector<std::vector<double>> features(std::size_t i, const BrownianEnsemble& noise,
                                          const ProcessPath* x) {
  const std::size_t paths = noise.paths();
  std::vector<std::vector<double>> cols(1, std::vector<double>(paths));
  for (std::size_t m = 0; m < paths; ++m) cols[0][m] = noise.value(m, i);
  if (x) {
    cols.emplace_back(paths);
    for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = (*x)(m, i);
  }
  return cols;
}

struct Sweep {
  AdjointSolution p;
  std::vector<double> increments;  // M x N
};

// Reflected backward sweep: p_i = max(p~_i, L_i), pushes enter the Volterra target
// of every earlier node through sum_{j>i} dK_j; dxi_i = dK_i / push_unit_i.
Sweep reflected_sweep(const TwoTimeKernel& b0, const TimeFunction& sigma0,
                      const TerminalWeight& theta, const Barrier& barrier,
                      const std::vector<double>& push_unit, const ProcessPath* x,
                      const BrownianEnsemble& noise, const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const KernelTable b = tabulate(b0, g);
  const ProcessPath k = girsanov_path(sigma0, noise);
  const ProcessPath* xf = options.use_state ? x : nullptr;

  Sweep out{AdjointSolution{ProcessPath(g, paths), "reflected", 0, options.regression.degree,
                            std::vector<Estimate>(n + 1), std::vector<double>(n + 1, 1.0), {},
                            std::vector<std::optional<RegressionFit>>(n + 1), xf != nullptr, false},
            std::vector<double>(paths * n, 0.0)};
  AdjointSolution& sol = out.p;
  std::vector<double> th(paths), pushed(paths, 0.0);
  for (std::size_t m = 0; m < paths; ++m) {
    th[m] = theta(noise.terminal(m));
    sol.p(m, n) = th[m];
  }
  sol.node_estimate[n] = mean_estimate(th);

  std::vector<double> target(paths), weight(paths), tilde(paths);
  for (std::size_t i = n; i-- > 0;) {
    const double implicit = 1.0 - 0.5 * b(i, i) * dt;
    if (!(implicit > 0.0)) {
      throw std::invalid_argument("reflected sweep: step too coarse for the kernel (b dt/2 >= 1)");
    }
    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        double s = 0.5 * b(i, n) * th[m];
        for (std::size_t j = i + 1; j < n; ++j) s += b(i, j) * sol.p(m, j);
        target[m] = (th[m] + s * dt + pushed[m]) / implicit;
        weight[m] = k(m, n) / k(m, i);
      }
    });
    sol.node_estimate[i] = weighted_mean_estimate(target, weight);
    if (all_equal(target)) {
      std::fill(tilde.begin(), tilde.end(), target[0]);
    } else {
      const auto cols = features(i, noise, xf);
      RegressionFit fit = fit_least_squares(
          cols, target, all_equal(weight) ? std::span<const double>{} : weight, options.regression);
      sol.condition[i] = fit.condition_number();
      if (fit.ill_conditioned()) {
        sol.warnings.push_back("ill-conditioned regression at node " + std::to_string(i));
      }
      std::vector<double> f(cols.size());
      for (std::size_t m = 0; m < paths; ++m) {
        for (std::size_t v = 0; v < cols.size(); ++v) f[v] = cols[v][m];
        tilde[m] = fit.predict(f);
      }
      sol.fits[i] = std::move(fit);
    }
    for (std::size_t m = 0; m < paths; ++m) {
      const double l = barrier(m, i);
      const double p = std::max(tilde[m], l);
      const double push = p - tilde[m];
      sol.p(m, i) = p;
      out.increments[m * n + i] = push / push_unit[i];
      pushed[m] += push;
    }
  }
  return out;
}

// (rho_i - E[sum_{j>i} dh/dt(t_j,t_i) p_j dt | F_i]) / h(t_i,t_i)
Barrier nonlocal_barrier(const HarvestScenario& s, const ProcessPath& p,
                         const BrownianEnsemble& noise, const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  Barrier out{paths, n, std::vector<double>(paths * (n + 1)), true};
  std::vector<double> future(paths);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = g.node(i);
    for (std::size_t m = 0; m < paths; ++m) {
      double acc = 0.0;
      for (std::size_t j = i + 1; j <= n; ++j) acc += s.h.time_derivative(g.node(j), t) * p(m, j);
      future[m] = acc * g.dt();
    }
    const std::vector<double> cond =
        all_equal(future) ? future : project(features(i, noise, nullptr), future, {}, options.regression);
    const double hii = s.h(t, t);
    for (std::size_t m = 0; m < paths; ++m) {
      out.values[m * (n + 1) + i] = (s.rho(t) - cond[m]) / hii;
    }
  }
  return out;
}

std::vector<double> diagonal_h(const HarvestScenario& s, const TimeGrid& g) {
  std::vector<double> out(g.steps());
  for (std::size_t i = 0; i < g.steps(); ++i) out[i] = s.h(g.node(i), g.node(i));
  return out;
}

RegularControl no_control(const TimeGrid& g) { return RegularControl::constant(g, ControlSet{}, 0.0); }

}  // namespace

ReflectedSolution solve_reflected_adjoint(const HarvestScenario& scenario,
                                          const BrownianEnsemble& noise,
                                          const ReflectionOptions& options) {
  if (scenario.mode != PriceMode::density_independent) {
    throw std::invalid_argument("solve_reflected_adjoint: needs the density_independent price mode");
  }
  const TimeGrid& g = noise.grid();
  scenario.validate(g);
  const std::vector<double> unit = diagonal_h(scenario, g);
  Barrier barrier = local_barrier(scenario, g);

  if (scenario.h.constant_in_time()) {
    Sweep s = reflected_sweep(scenario.b0, scenario.sigma0, scenario.theta, barrier, unit, nullptr,
                              noise, options.adjoint);
    return {std::move(s.p), SingularControl(g, noise.paths(), std::move(s.increments)),
            std::move(barrier), false, 1, {}};
  }
  if (!scenario.h.has_time_derivative()) {
    throw std::invalid_argument("solve_reflected_adjoint: h depends on t but has no time derivative");
  }
  std::vector<double> history;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    Sweep s = reflected_sweep(scenario.b0, scenario.sigma0, scenario.theta, barrier, unit, nullptr,
                              noise, options.adjoint);
    Barrier next = nonlocal_barrier(scenario, s.p.p, noise, options.adjoint);
    double res = 0.0;
    for (std::size_t m = 0; m < noise.paths(); ++m) {
      for (std::size_t i = 0; i < g.steps(); ++i) res = std::max(res, std::abs(next(m, i) - barrier(m, i)));
    }
    history.push_back(res);
    if (res <= options.tol) {
      s.p.warnings.push_back("nonlocal barrier iteration (experimental)");
      return {std::move(s.p), SingularControl(g, noise.paths(), std::move(s.increments)),
              std::move(barrier), true, it, std::move(history)};
    }
    barrier = std::move(next);
  }
  throw NotConverged(std::move(history), "solve_reflected_adjoint: nonlocal barrier iteration did not converge in " +
                                             std::to_string(options.max_iter) + " iterations");
}

DensityDiagnosis diagnose_density_dependent(const HarvestScenario& scenario,
                                            const SingularControl& candidate,
                                            const BrownianEnsemble& noise,
                                            const CheckTolerances& tol,
                                            const AdjointOptions& options) {
  if (scenario.mode == PriceMode::density_independent) {
    throw std::invalid_argument("diagnose_density_dependent: needs a density-dependent price mode");
  }
  const TimeGrid& g = noise.grid();
  scenario.validate(g);
  const ControlProblem problem = scenario.problem(g);
  const RegularControl u = no_control(g);
  ProcessPath x = simulate(problem.state, u, candidate, noise);
  AdjointSolution p = solve_regression(adjoint_spec(problem, candidate), &x, noise, options);
  MpReport report = check_singular_conditions(problem, x, candidate, p, noise, tol, options);

  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  std::vector<Estimate> lhs, rhs;
  std::vector<double> a(paths), c(paths);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = g.node(i);
    for (std::size_t m = 0; m < paths; ++m) {
      double s = scenario.h(t, t) * p.p(m, i);
      if (!scenario.h.constant_in_time()) {
        double acc = 0.0;
        for (std::size_t j = i + 1; j <= n; ++j) acc += scenario.h.time_derivative(g.node(j), t) * p.p(m, j);
        s += acc * g.dt();
      }
      a[m] = s;
      c[m] = scenario.mode == PriceMode::log ? std::log(x(m, i)) : x(m, i);
    }
    lhs.push_back(mean_estimate(a));
    rhs.push_back(mean_estimate(c));
  }
  return {std::move(report), std::move(x), std::move(p), std::move(lhs), std::move(rhs)};
}

CoupledResult coupled_fixed_point(const HarvestScenario& scenario, const BrownianEnsemble& noise,
                                  const CoupledOptions& options) {
  if (scenario.mode != PriceMode::density_dependent) {
    throw std::invalid_argument("coupled_fixed_point: needs the density_dependent price mode");
  }
  const TimeGrid& g = noise.grid();
  scenario.validate(g);
  for (std::size_t i = 0; i <= g.steps(); ++i) {
    for (std::size_t j = 0; j <= g.steps(); ++j) {
      if (scenario.h(g.node(i), g.node(j)) != 1.0) {
        throw std::invalid_argument("coupled_fixed_point: needs h = 1");
      }
    }
  }
  if (!(options.damping >= 0.0 && options.damping < 1.0)) {
    throw std::invalid_argument("coupled_fixed_point: damping must lie in [0, 1)");
  }
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const ControlProblem problem = scenario.problem(g);
  const RegularControl u = no_control(g);
  const std::vector<double> unit(n, 1.0);

  std::vector<double> current(paths * n, 0.0);
  CoupledResult out{simulate(problem.state, u, SingularControl(g, paths, current), noise),
                    solve_regression(adjoint_spec(problem, SingularControl(g, paths, current)),
                                     nullptr, noise, options.adjoint),
                    SingularControl(g, paths, current), false, 0, {}};
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    const SingularControl xi(g, paths, current);
    const ProcessPath x = simulate(problem.state, u, xi, noise);
    Barrier barrier{paths, n, std::vector<double>(paths * (n + 1)), false};
    for (std::size_t m = 0; m < paths; ++m) {
      for (std::size_t i = 0; i <= n; ++i) barrier.values[m * (n + 1) + i] = x(m, i);
    }
    const Sweep s = reflected_sweep(scenario.b0, scenario.sigma0, scenario.theta, barrier, unit, &x,
                                    noise, options.adjoint);
    double tv = 0.0;
    std::vector<double> next(paths * n);
    for (std::size_t k = 0; k < next.size(); ++k) {
      next[k] = options.damping * current[k] + (1.0 - options.damping) * s.increments[k];
      tv += std::abs(next[k] - current[k]);
    }
    tv /= static_cast<double>(paths);
    out.tv_history.push_back(tv);
    out.iterations = it;
    current = std::move(next);
    if (tv <= options.tol) {
      out.converged = true;
      break;
    }
  }
  out.xi = SingularControl(g, paths, current);
  out.x = simulate(problem.state, u, out.xi, noise);
  out.p = solve_regression(adjoint_spec(problem, out.xi), &out.x, noise, options.adjoint);
  return out;
}

std::vector<std::pair<std::string, SingularControl>> shipped_alternatives(
    const TimeGrid& grid, const AlternativeSpec& spec, double scale) {
  if (spec.atom_sizes.size() != spec.atom_times.size()) {
    throw std::invalid_argument("alternatives: atom_times and atom_sizes differ in length");
  }
  const std::size_t n = grid.steps();
  std::vector<std::pair<std::string, SingularControl>> out;
  out.emplace_back("zero", SingularControl::zero(grid));
  for (std::size_t k = 0; k < spec.atom_times.size(); ++k) {
    const double frac = spec.atom_times[k];
    if (!(frac >= 0.0 && frac < 1.0)) throw std::invalid_argument("alternatives: atom time outside [0, 1)");
    const std::size_t i = std::min(n - 1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
    std::vector<double> inc(n, 0.0);
    inc[i] = spec.atom_sizes[k] * scale;
    std::ostringstream name;
    name << "atom[t=" << grid.node(i) << ",size=" << inc[i] << "]";
    out.emplace_back(name.str(), SingularControl::deterministic(grid, std::move(inc)));
  }
  out.emplace_back("uniform_rate",
                   SingularControl::deterministic(grid, std::vector<double>(n, scale / static_cast<double>(n))));
  return out;
}

SkorokhodStats skorokhod_stats(const ReflectedSolution& r) {
  const TimeGrid& g = r.p.p.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = r.p.p.paths();
  SkorokhodStats s;
  s.min_gap = INFINITY;
  std::vector<double> comp(paths, 0.0), mass(paths, 0.0);
  for (std::size_t m = 0; m < paths; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = r.p.p(m, i) - r.barrier(m, i);
      const double d = r.xi.increment(m, i);
      s.min_gap = std::min(s.min_gap, gap);
      comp[m] += gap * d;
      mass[m] += d;
      if (d > 0.0 && gap != 0.0) ++s.off_barrier_pushes;
    }
  }
  s.complementarity = mean_estimate(comp);
  s.mean_mass = mean(mass);
  return s;
}

HarvestReport run_harvest(const HarvestScenario& scenario, const BrownianEnsemble& noise,
                          const HarvestOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const ControlProblem problem = scenario.problem(g);
  const RegularControl u = no_control(g);

  if (scenario.mode == PriceMode::density_independent) {
    ReflectedSolution r = solve_reflected_adjoint(scenario, noise, options.reflection);
    ProcessPath x = simulate(problem.state, u, r.xi, noise);
    MpReport check = check_singular_conditions(problem, x, r.xi, r.p, noise, options.tol,
                                               options.reflection.adjoint);
    const SkorokhodStats sk = skorokhod_stats(r);
    const double scale = options.alternatives.scale > 0.0 ? options.alternatives.scale
                         : sk.mean_mass > 0.0             ? sk.mean_mass
                                                          : 0.1 * scenario.x0;
    std::vector<PolicyRow> tournament = compare_policies(
        problem, u, r.xi, shipped_alternatives(g, options.alternatives, scale), noise, options.tol);
    std::vector<PolicyRow> scaling;
    if (options.scaling_probe) {
      std::vector<std::pair<std::string, SingularControl>> scaled;
      for (double f : {0.8, 1.2}) {
        std::vector<double> inc(r.xi.raw());
        for (double& v : inc) v *= f;
        std::ostringstream name;
        name << "scale_" << f;
        scaled.emplace_back(name.str(), SingularControl(g, r.xi.rows(), std::move(inc)));
      }
      scaling = compare_policies(problem, u, r.xi, scaled, noise, options.tol);
      scaling.erase(scaling.begin());
    }
    HarvestReport out{scenario.mode, std::move(x), std::move(r.p), std::move(r.xi),
                      std::move(r.barrier), std::move(check), std::move(tournament),
                      std::move(scaling), sk, {}};
    if (r.experimental) out.notes.push_back("nonlocal barrier found by iteration (experimental)");
    return out;
  }

  SingularControl candidate = SingularControl::zero(g);
  std::vector<std::string> notes;
  if (options.candidate == "coupled") {
    if (scenario.mode != PriceMode::density_dependent) {
      throw std::invalid_argument("harvest: the coupled candidate needs the density_dependent mode");
    }
    const CoupledResult coupled = coupled_fixed_point(scenario, noise, options.coupled);
    candidate = coupled.xi;
    std::ostringstream note;
    note << "coupled fixed point (experimental): " << coupled.iterations << " iteration(s), "
         << (coupled.converged ? "converged" : "not converged");
    notes.push_back(note.str());
  } else if (options.candidate != "zero") {
    throw std::invalid_argument("harvest: unknown candidate '" + options.candidate + "'");
  }
  DensityDiagnosis d = diagnose_density_dependent(scenario, candidate, noise, options.tol,
                                                  options.reflection.adjoint);
  Barrier barrier{paths, n, std::vector<double>(paths * (n + 1)), false};
  for (std::size_t m = 0; m < paths; ++m) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = g.node(i);
      const double xv = d.x(m, i);
      const double f = scenario.mode == PriceMode::log ? (xv > 0.0 ? std::log(xv) : -INFINITY) : xv;
      barrier.values[m * (n + 1) + i] = f / scenario.h(t, t);
    }
  }
  for (const auto& note : d.report.notes) notes.push_back(note);
  const double scale = options.alternatives.scale > 0.0 ? options.alternatives.scale : 0.1 * scenario.x0;
  std::vector<PolicyRow> tournament = compare_policies(
      problem, u, candidate, shipped_alternatives(g, options.alternatives, scale), noise, options.tol);
  notes.push_back("policy comparison is informational here; the reward is not concave in x");
  SkorokhodStats sk;
  sk.mean_mass = mean(std::vector<double>([&] {
    std::vector<double> v(paths);
    for (std::size_t m = 0; m < paths; ++m) v[m] = candidate.total(m);
    return v;
  }()));
  return {scenario.mode, std::move(d.x), std::move(d.p), std::move(candidate), std::move(barrier),
          std::move(d.report), std::move(tournament), {}, sk, std::move(notes)};
}

}  // namespace volterra
