#include "volterra/maxprinciple.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "volterra/parallel.hpp"
#include "volterra/regression.hpp"

namespace volterra {

BsvieSpec adjoint_spec(const ControlProblem& problem, const SingularControl& xi) {
  const AffineCoefficient& b = problem.state.drift;
  const AffineCoefficient& s = problem.state.diffusion;
  BsvieSpec spec;
  const TwoTimeKernel& bx = b.state;
  if (bx.kind() == KernelKind::custom || bx.kind() == KernelKind::tabulated) {
    const TwoTimeKernel k = bx;
    spec.b0 = TwoTimeKernel::custom([k](double t, double r) { return k(r, t); }, {},
                                    k.bound(xi.grid().horizon()));
  } else {
    spec.b0 = bx;  // lag presets are symmetric in (t, s)
  }
  if (!s.state.is_zero()) {
    if (!s.state.constant_in_time()) {
      throw std::invalid_argument(
          "adjoint_spec: the diffusion state kernel must not depend on its first time argument");
    }
    if (s.state.kind() == KernelKind::constant) {
      spec.sigma0 = TimeFunction::constant(s.state(0.0, 0.0));
    } else {
      const TwoTimeKernel k = s.state;
      spec.sigma0 = TimeFunction::custom([k](double r) { return k(r, r); }, "diffusion");
    }
  }
  spec.theta = problem.reward.theta;
  spec.source = problem.reward.f0_x;
  switch (problem.reward.f1) {
    case SingularRewardKind::linear: spec.weight = SingularWeight::one; break;
    case SingularRewardKind::log: spec.weight = SingularWeight::inverse_state; break;
    default: spec.weight = SingularWeight::zero; break;
  }
  spec.weight_coef = problem.reward.f1_coef;
  spec.xi = xi;
  return spec;
}

namespace {

std::vector<std::vector<double>> features_at(std::size_t i, const BrownianEnsemble& noise,
                                             const ProcessPath* x, const SingularControl* xi,
                                             const AdjointOptions& options) {
  const std::size_t paths = noise.paths();
  std::vector<std::vector<double>> cols;
  cols.emplace_back(paths);
  for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = noise.value(m, i);
  if (options.use_state && x) {
    cols.emplace_back(paths);
    for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = (*x)(m, i);
  }
  if (options.use_control && xi && !xi->is_deterministic()) {
    cols.emplace_back(paths);
    for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = xi->cumulative(m, i);
  }
  return cols;
}

bool constant_column(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

std::vector<double> conditional(std::size_t i, const std::vector<double>& target,
                                const BrownianEnsemble& noise, const ProcessPath* x,
                                const SingularControl* xi, const AdjointOptions& options) {
  if (constant_column(target)) return target;
  return project(features_at(i, noise, x, xi, options), target, {}, options.regression);
}

// dK/dt(t_j, t_i) for j > i, or zeros when K does not move in t.
std::vector<double> slope_row(const TwoTimeKernel& k, const TimeGrid& g, std::size_t i,
                              const char* what) {
  std::vector<double> out(g.steps() + 1, 0.0);
  if (k.constant_in_time()) return out;
  if (!k.has_time_derivative()) {
    throw std::invalid_argument(std::string("missing time derivative of the ") + what + " kernel");
  }
  for (std::size_t j = i + 1; j <= g.steps(); ++j) out[j] = k.time_derivative(g.node(j), g.node(i));
  return out;
}

// E[D_{t_i} p(t_j) | F_{t_i}] for j > i, from the B-derivative of the fit of p(t_j).
std::vector<std::vector<double>> malliavin_terms(std::size_t i, const AdjointSolution& sol,
                                                 const ProcessPath& x, const SingularControl& xi,
                                                 const BrownianEnsemble& noise,
                                                 const AdjointOptions& options) {
  const std::size_t n = noise.steps();
  const std::size_t paths = noise.paths();
  std::vector<std::vector<double>> out(n + 1, std::vector<double>(paths, 0.0));
  const ProcessPath* xp = sol.state_feature ? &x : nullptr;
  const SingularControl* xip = sol.control_feature ? &xi : nullptr;
  for (std::size_t j = i + 1; j < n; ++j) {
    if (!sol.fits[j]) continue;
    const auto cols = features_at(j, noise, xp, xip, options);
    std::vector<double> d(paths), f(cols.size());
    for (std::size_t m = 0; m < paths; ++m) {
      for (std::size_t v = 0; v < cols.size(); ++v) f[v] = cols[v][m];
      d[m] = sol.fits[j]->derivative(f, 0);
    }
    out[j] = conditional(i, d, noise, xp, xip, options);
  }
  return out;
}

}  // namespace

HamiltonianEval eval_hamiltonian(const ControlProblem& problem, const ProcessPath& x,
                                 const RegularControl& u, const SingularControl& xi,
                                 const AdjointSolution& p, const QDiagonal* q_diag,
                                 const BrownianEnsemble& noise, const HamiltonianOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const AffineCoefficient& b = problem.state.drift;
  const AffineCoefficient& s = problem.state.diffusion;
  const TwoTimeKernel& h = problem.state.singular;
  const bool needs_q = !s.is_zero();
  if (needs_q && !q_diag) {
    throw std::invalid_argument("eval_hamiltonian: the diffusion term needs a q(t,t) estimate");
  }
  const bool malliavin = !s.constant_in_time();
  if (malliavin && !options.experimental_malliavin) {
    throw std::invalid_argument(
        "eval_hamiltonian: diffusion depends on t; enable the experimental Malliavin estimate");
  }
  if (malliavin && !s.has_time_derivative()) {
    throw std::invalid_argument("eval_hamiltonian: missing time derivative of the diffusion kernel");
  }
  if (!b.constant_in_time() && !b.has_time_derivative()) {
    throw std::invalid_argument("eval_hamiltonian: missing time derivative of the drift kernel");
  }

  HamiltonianEval out{ProcessPath(g, paths), ProcessPath(g, paths), ProcessPath(g, paths),
                      ProcessPath(g, paths)};
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = g.node(i);
    const std::size_t ui = std::min(i, n - 1);
    const std::vector<double> dh = slope_row(h, g, i, "singular");
    std::vector<std::vector<double>> mall;
    if (malliavin && i < n) mall = malliavin_terms(i, p, x, xi, noise, options.adjoint);
    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        const double xv = x(m, i);
        const double uv = u.value(m, ui);
        const double pv = p.p(m, i);
        double h0 = problem.reward.running(xv, uv) + pv * b(t, t, xv, uv);
        if (needs_q && i < n) h0 += (*q_diag)(m, i) * s(t, t, xv, uv);
        double h1 = 0.0, hb1 = 0.0;
        for (std::size_t j = i + 1; j <= n; ++j) {
          const double tj = g.node(j);
          if (!b.constant_in_time()) h1 += p.p(m, j) * b.time_derivative(tj, t, xv, uv) * dt;
          if (malliavin && j < n) h1 += mall[j][m] * s.time_derivative(tj, t, xv, uv) * dt;
          hb1 += p.p(m, j) * dh[j] * dt;
        }
        out.h0(m, i) = h0;
        out.h1(m, i) = h1;
        out.hbar0(m, i) = problem.reward.singular(t, xv, m, i) + pv * h(t, t);
        out.hbar1(m, i) = hb1;
      }
    });
  }
  return out;
}

bool MpReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

const CheckRow* MpReport::find(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::vector<double> singular_gap(const ControlProblem& problem, const ProcessPath& x,
                                 const SingularControl& xi, const AdjointSolution& p,
                                 const BrownianEnsemble& noise, const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const TwoTimeKernel& h = problem.state.singular;
  std::vector<double> gap(paths * n);
  std::vector<double> future(paths);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = g.node(i);
    const std::vector<double> dh = slope_row(h, g, i, "singular");
    const bool moving = !h.constant_in_time();
    if (moving) {
      for (std::size_t m = 0; m < paths; ++m) {
        double s = 0.0;
        for (std::size_t j = i + 1; j <= n; ++j) s += p.p(m, j) * dh[j] * dt;
        future[m] = s;
      }
      future = conditional(i, future, noise, &x, &xi, options);
    }
    const double hii = h(t, t);
    for (std::size_t m = 0; m < paths; ++m) {
      const double xv = x(m, i);
      const double f1 = problem.reward.f1 == SingularRewardKind::log && !(xv > 0.0)
                            ? -INFINITY
                            : problem.reward.singular(t, xv, m, i);
      gap[m * n + i] = f1 + p.p(m, i) * hii + (moving ? future[m] : 0.0);
    }
  }
  return gap;
}

MpReport check_singular_conditions(const ControlProblem& problem, const ProcessPath& x,
                                   const SingularControl& xi, const AdjointSolution& p,
                                   const BrownianEnsemble& noise, const CheckTolerances& tol,
                                   const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const std::vector<double> gap = singular_gap(problem, x, xi, p, noise, options);

  MpReport report;
  std::vector<double> col(paths), pos(paths), prod(paths), per_path(paths, 0.0);
  std::size_t flagged = 0;
  double worst = 0.0, worst_se = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < paths; ++m) {
      col[m] = gap[m * n + i];
      pos[m] = std::max(col[m], 0.0);
      prod[m] = col[m] * xi.increment(m, i);
      per_path[m] += prod[m];
    }
    NodeGap ng{g.node(i), mean_estimate(col), mean_estimate(pos)};
    if (ng.positive.value > tol.k_se * ng.positive.se + tol.abs_tol) ++flagged;
    if (i == 0 || ng.positive.value > worst) {
      worst = ng.positive.value;
      worst_se = ng.positive.se;
    }
    abs_sum += std::abs(mean(prod));
    report.gaps.push_back(ng);
  }
  CheckRow ineq{"singular_inequality", worst, worst_se, tol.k_se * worst_se + tol.abs_tol,
                flagged == 0, std::to_string(flagged) + " node(s) with E[G+] above tolerance"};
  const Estimate comp = mean_estimate(per_path);
  std::ostringstream note;
  note << "sum over nodes of |E[G dxi]| = " << abs_sum;
  CheckRow compl_row{"complementarity", comp.value, comp.se, tol.k_se * comp.se + tol.abs_tol,
                     std::abs(comp.value) <= tol.k_se * comp.se + tol.abs_tol, note.str()};
  report.rows.push_back(ineq);
  report.rows.push_back(compl_row);
  report.notes.push_back("necessary conditions only; passing is not a certificate of optimality");
  return report;
}

std::vector<double> hamiltonian_u_gradient(const ControlProblem& problem, const ProcessPath& x,
                                           const RegularControl& u, const AdjointSolution& p,
                                           const QDiagonal* q_diag, const BrownianEnsemble& noise,
                                           const HamiltonianOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const TwoTimeKernel& bu = problem.state.drift.control;
  const TwoTimeKernel& su = problem.state.diffusion.control;
  if (!su.is_zero() && !q_diag) {
    throw std::invalid_argument("hamiltonian_u_gradient: control in the diffusion needs q(t,t)");
  }
  const bool malliavin = !su.constant_in_time();
  if (malliavin && !options.experimental_malliavin) {
    throw std::invalid_argument(
        "hamiltonian_u_gradient: diffusion control kernel depends on t; enable the experimental "
        "Malliavin estimate");
  }
  std::vector<double> out(paths * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = g.node(i);
    const std::vector<double> dbu = slope_row(bu, g, i, "drift control");
    std::vector<double> dsu;
    std::vector<std::vector<double>> mall;
    if (malliavin) {
      dsu = slope_row(su, g, i, "diffusion control");
      const SingularControl zero = SingularControl::zero(g);
      mall = malliavin_terms(i, p, x, zero, noise, options.adjoint);
    }
    const double bii = bu(t, t);
    const double sii = su(t, t);
    for (std::size_t m = 0; m < paths; ++m) {
      double d = problem.reward.running_du(u.value(m, i)) + p.p(m, i) * bii;
      if (!su.is_zero()) d += (*q_diag)(m, i) * sii;
      for (std::size_t j = i + 1; j <= n; ++j) {
        d += p.p(m, j) * dbu[j] * dt;
        if (malliavin && j < n) d += mall[j][m] * dsu[j] * dt;
      }
      out[m * n + i] = d;
    }
  }
  return out;
}

std::vector<double> scheme_u_gradient(const ControlProblem& problem, const ProcessPath& x,
                                      const RegularControl& u, const SingularControl& xi,
                                      const BrownianEnsemble& noise) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t w = n + 1;
  const double dt = g.dt();
  const AffineCoefficient& b = problem.state.drift;
  const AffineCoefficient& s = problem.state.diffusion;
  const PerformanceSpec& r = problem.reward;
  // dense[k * w + i] = K(t_k, t_i) for k > i
  const auto dense = [&](const TwoTimeKernel& k) {
    std::vector<double> out(w * w, 0.0);
    if (k.is_zero()) return out;
    for (std::size_t a = 1; a <= n; ++a) {
      for (std::size_t c = 0; c < a; ++c) out[a * w + c] = k(g.node(a), g.node(c));
    }
    return out;
  };
  const std::vector<double> bx = dense(b.state), bu = dense(b.control);
  const std::vector<double> sx = dense(s.state), su = dense(s.control);
  const bool noisy_x = !s.state.is_zero(), noisy_u = !s.control.is_zero();

  std::vector<double> out(noise.paths() * n);
  parallel_for(noise.paths(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> lam(w);
    for (std::size_t m = begin; m < end; ++m) {
      lam[n] = r.theta(noise.terminal(m));
      for (std::size_t i = n; i-- > 0;) {
        const double db = noise.increment(m, i);
        double acc = 0.0;
        for (std::size_t k = i + 1; k <= n; ++k) {
          double dk = bx[k * w + i] * dt;
          if (noisy_x) dk += sx[k * w + i] * db;
          acc += lam[k] * dk;
        }
        lam[i] = r.running_dx() * dt + r.singular_dx(x(m, i)) * xi.increment(m, i) + acc;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double db = noise.increment(m, i);
        double d = r.running_du(u.value(m, i));
        for (std::size_t k = i + 1; k <= n; ++k) {
          d += lam[k] * bu[k * w + i];
          if (noisy_u) d += lam[k] * su[k * w + i] * db / dt;
        }
        out[m * n + i] = d;
      }
    }
  });
  return out;
}

StationarityReport check_stationarity_u(const ControlProblem& problem, const RegularControl& u,
                                        const SingularControl& xi, const BrownianEnsemble& noise,
                                        const std::vector<Bump>& bumps,
                                        const StationarityOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const CheckTolerances& tol = options.tol;
  const AdjointOptions& aopt = options.hamiltonian.adjoint;

  const ProcessPath x = simulate(problem.state, u, xi, noise);
  std::vector<double> grad;
  if (options.form == GradientForm::scheme) {
    grad = scheme_u_gradient(problem, x, u, xi, noise);
  } else {
    const AdjointSolution p = solve_regression(adjoint_spec(problem, xi), &x, noise, aopt);
    std::optional<QDiagonal> q;
    if (!problem.state.diffusion.control.is_zero()) q = estimate_q_diagonal(p, &x, &xi, noise, aopt);
    grad = hamiltonian_u_gradient(problem, x, u, p, q ? &*q : nullptr, noise, options.hamiltonian);
  }

  StationarityReport out;
  std::vector<double> cond(paths * n), col(paths);
  std::size_t flagged = 0, one_sided = 0;
  double worst = 0.0, worst_se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < paths; ++m) col[m] = grad[m * n + i];
    const Estimate raw = mean_estimate(col);
    const std::vector<double> c = conditional(i, col, noise, &x, &xi, aopt);
    for (std::size_t m = 0; m < paths; ++m) cond[m * n + i] = c[m];
    out.node_gradient.push_back(raw);
    // Boundary nodes: every path sits on the same edge of U.
    bool at_lo = true, at_hi = true;
    for (std::size_t m = 0; m < (u.is_deterministic() ? 1 : paths); ++m) {
      at_lo = at_lo && u.value(m, i) == problem.set.lo;
      at_hi = at_hi && u.value(m, i) == problem.set.hi;
    }
    const double band = tol.k_se * raw.se + tol.abs_tol;
    bool ok;
    if (at_lo) {
      ++one_sided;
      ok = raw.value <= band;  // cannot move down; gradient must not point up
    } else if (at_hi) {
      ++one_sided;
      ok = raw.value >= -band;
    } else {
      ok = std::abs(raw.value) <= band;
    }
    if (!ok) ++flagged;
    if (std::abs(raw.value) >= worst) {
      worst = std::abs(raw.value);
      worst_se = raw.se;
    }
  }
  std::ostringstream note;
  note << flagged << " node(s) flagged";
  if (one_sided > 0) note << "; one-sided sign check at " << one_sided << " boundary node(s)";
  note << (options.form == GradientForm::scheme ? "; scheme gradient" : "; continuous Hamiltonian");
  out.report.rows.push_back({"stationarity_u", worst, worst_se, tol.k_se * worst_se + tol.abs_tol,
                             flagged == 0, note.str()});

  const JEstimate j0 = evaluate_J(problem.reward, x, u, xi, &noise);
  for (const Bump& bump : bumps) {
    const RegularControl v = bump_direction(g, bump.start, bump.width, bump.eta);
    GradientCheck gc;
    gc.bump = bump;
    const double lam = options.lambda;
    std::vector<double> fd(paths);
    const RegularControl up = u.plus(lam, v);
    const JEstimate jp = evaluate_J(problem.reward, simulate(problem.state, up, xi, noise), up, xi, &noise);
    bool central = true;
    RegularControl down = u;
    try {
      down = u.plus(-lam, v);
    } catch (const std::invalid_argument&) {
      central = false;
    }
    if (central) {
      const JEstimate jm =
          evaluate_J(problem.reward, simulate(problem.state, down, xi, noise), down, xi, &noise);
      for (std::size_t m = 0; m < paths; ++m) fd[m] = (jp.per_path[m] - jm.per_path[m]) / (2.0 * lam);
    } else {
      for (std::size_t m = 0; m < paths; ++m) fd[m] = (jp.per_path[m] - j0.per_path[m]) / lam;
    }
    std::vector<double> ham(paths, 0.0);
    for (std::size_t m = 0; m < paths; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += cond[m * n + i] * v.value(0, i);
      ham[m] = s * dt;
    }
    gc.fd = mean_estimate(fd);
    gc.hamiltonian = mean_estimate(ham);
    gc.difference = paired_difference(fd, ham);
    gc.consistent =
        std::abs(gc.difference.value) <= tol.k_se * gc.difference.se + tol.abs_tol;
    std::ostringstream name;
    name << "bump_gradient[t=" << bump.start << ",h=" << bump.width << ",eta=" << bump.eta << "]";
    out.report.rows.push_back({name.str(), gc.difference.value, gc.difference.se,
                               tol.k_se * gc.difference.se + tol.abs_tol, gc.consistent,
                               central ? "central difference" : "one-sided difference"});
    out.bumps.push_back(gc);
  }
  return out;
}

std::vector<PolicyRow> compare_policies(
    const ControlProblem& problem, const RegularControl& u, const SingularControl& candidate,
    const std::vector<std::pair<std::string, SingularControl>>& alternatives,
    const BrownianEnsemble& noise, const CheckTolerances& tol) {
  const JEstimate jc =
      evaluate_J(problem.reward, simulate(problem.state, u, candidate, noise), u, candidate, &noise);
  std::vector<PolicyRow> rows;
  rows.push_back({"candidate", jc.value, {0.0, 0.0}, true});
  for (const auto& [name, alt] : alternatives) {
    const JEstimate ja =
        evaluate_J(problem.reward, simulate(problem.state, u, alt, noise), u, alt, &noise);
    PolicyRow r{name, ja.value, paired_difference(jc.per_path, ja.per_path), true};
    r.pass = r.advantage.value >= -(tol.k_se * r.advantage.se + tol.abs_tol);
    rows.push_back(r);
  }
  return rows;
}

Estimate concavity_probe(const ControlProblem& problem, const RegularControl& u,
                         const SingularControl& a, const SingularControl& b,
                         const BrownianEnsemble& noise) {
  const TimeGrid& g = noise.grid();
  const std::size_t rows = std::max(a.rows(), b.rows());
  std::vector<double> mid(rows * g.steps());
  for (std::size_t m = 0; m < rows; ++m) {
    for (std::size_t i = 0; i < g.steps(); ++i) {
      mid[m * g.steps() + i] = 0.5 * (a.increment(m, i) + b.increment(m, i));
    }
  }
  const SingularControl c(g, rows, std::move(mid));
  const auto j = [&](const SingularControl& xi) {
    return evaluate_J(problem.reward, simulate(problem.state, u, xi, noise), u, xi, &noise).per_path;
  };
  const auto ja = j(a), jb = j(b), jm = j(c);
  std::vector<double> d(ja.size());
  for (std::size_t m = 0; m < d.size(); ++m) d[m] = jm[m] - 0.5 * (ja[m] + jb[m]);
  return mean_estimate(d);
}

}  // namespace volterra
