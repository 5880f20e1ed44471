#include "volterra/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "volterra/errors.hpp"
#include "volterra/parallel.hpp"

namespace volterra {

std::vector<double> girsanov_weight(const TimeFunction& sigma0, const BrownianEnsemble& noise) {
  const ProcessPath k = girsanov_path(sigma0, noise);
  return k.column(noise.steps());
}

ProcessPath girsanov_path(const TimeFunction& sigma0, const BrownianEnsemble& noise) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) s[j] = sigma0(g.node(j));
  ProcessPath out(g, noise.paths());
  parallel_for(noise.paths(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      double log_k = 0.0;
      out(m, 0) = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        log_k += s[j] * noise.increment(m, j) - 0.5 * s[j] * s[j] * g.dt();
        out(m, j + 1) = std::exp(log_k);
      }
    }
  });
  return out;
}

namespace {

struct Setup {
  const TimeGrid& grid;
  std::size_t paths;
  std::size_t n;
  std::vector<double> theta;  // per path
  std::vector<double> source; // R(t_i) per path, M x (N+1)
  ProcessPath kpath;
};

std::vector<double> terminal_values(const TerminalWeight& theta, const BrownianEnsemble& noise) {
  std::vector<double> out(noise.paths());
  for (std::size_t m = 0; m < noise.paths(); ++m) out[m] = theta(noise.terminal(m));
  return out;
}

// R(t_i) = sum_{j >= i} w_j dxi_j + c (T - t_i)
std::vector<double> singular_source(const BsvieSpec& spec, const ProcessPath* x,
                                    const BrownianEnsemble& noise) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  std::vector<double> r(paths * (n + 1), 0.0);
  const bool charged = spec.xi.has_value() && spec.weight != SingularWeight::zero;
  if (charged) {
    const SingularControl& xi = *spec.xi;
    if (!(xi.grid() == g)) throw std::invalid_argument("adjoint: control grid differs");
    if (xi.rows() != 1 && xi.rows() != paths) {
      throw std::invalid_argument("adjoint: control rows do not match the paths");
    }
    if (spec.weight == SingularWeight::inverse_state && !x) {
      throw std::invalid_argument("adjoint: weight 1/X needs the state paths");
    }
  }
  if (x && (x->paths() != paths || !(x->grid() == g))) {
    throw std::invalid_argument("adjoint: state paths are not aligned with the noise");
  }
  for (std::size_t m = 0; m < paths; ++m) {
    double acc = 0.0;
    r[m * (n + 1) + n] = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      if (charged) {
        const double d = spec.xi->increment(m, i);
        if (d > 0.0) {
          double w = spec.weight_coef;
          if (spec.weight == SingularWeight::inverse_state) {
            const double xv = (*x)(m, i);
            if (!(xv > 0.0)) {
              throw DomainError(m, i, "adjoint: weight 1/X at nonpositive state on path " +
                                          std::to_string(m) + " at node " + std::to_string(i));
            }
            w /= xv;
          }
          acc += w * d;
        }
      }
      r[m * (n + 1) + i] = acc + spec.source * (g.horizon() - g.node(i));
    }
  }
  return r;
}

// B(t_i), then X(t_i) and xi(t_i) when they are in play.
std::vector<std::vector<double>> node_features(std::size_t i, const BrownianEnsemble& noise,
                                               const ProcessPath* x, const SingularControl* xi,
                                               bool use_state, bool use_control) {
  const std::size_t paths = noise.paths();
  std::vector<std::vector<double>> cols;
  cols.emplace_back(paths);
  for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = noise.value(m, i);
  if (use_state && x) {
    cols.emplace_back(paths);
    for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = (*x)(m, i);
  }
  if (use_control && xi && !xi->is_deterministic()) {
    cols.emplace_back(paths);
    for (std::size_t m = 0; m < paths; ++m) cols.back()[m] = xi->cumulative(m, i);
  }
  return cols;
}

std::vector<double> trapezoid(std::size_t from, std::size_t to) {
  std::vector<double> w(to - from + 1, 1.0);
  if (to == from) return {0.0};
  w.front() = w.back() = 0.5;
  return w;
}

void note_condition(AdjointSolution& sol, std::size_t i, double cond, const RegressionOptions& opts) {
  sol.condition[i] = std::max(sol.condition[i], cond);
  if (cond > opts.warn_condition) {
    std::ostringstream os;
    os << "ill-conditioned regression at node " << i << " (condition number " << cond << ")";
    sol.warnings.push_back(os.str());
  }
}

bool all_equal(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

AdjointSolution solve_closed_form(const BsvieSpec& spec, const ResolventTable& psi,
                                  const ProcessPath* x, const BrownianEnsemble& noise,
                                  const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  if (!(psi.values.grid() == g)) throw std::invalid_argument("solve_closed_form: resolvent grid differs");
  if (psi.order == 0) throw std::invalid_argument("solve_closed_form: resolvent table is not built");
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const std::vector<double> theta = terminal_values(spec.theta, noise);
  const std::vector<double> r = singular_source(spec, x, noise);
  const ProcessPath k = girsanov_path(spec.sigma0, noise);
  const SingularControl* xi = spec.xi ? &*spec.xi : nullptr;

  AdjointSolution sol{ProcessPath(g, paths), "closed-form", psi.order, options.regression.degree,
                      std::vector<Estimate>(n + 1), std::vector<double>(n + 1, 1.0), {},
                      std::vector<std::optional<RegressionFit>>(n + 1), false, false};
  sol.state_feature = options.use_state && x;
  sol.control_feature = options.use_control && xi && !xi->is_deterministic();

  std::vector<double> y(paths), ratio(paths);
  for (std::size_t i = 0; i <= n; ++i) {
    const std::vector<double> w = trapezoid(i, n);
    double psi_int = 0.0;
    for (std::size_t j = i; j <= n; ++j) psi_int += w[j - i] * psi.values(i, j);
    psi_int *= dt;
    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        const double* rm = r.data() + m * (n + 1);
        double s = 0.0;
        for (std::size_t j = i; j <= n; ++j) s += w[j - i] * psi.values(i, j) * rm[j];
        y[m] = theta[m] * (1.0 + psi_int) + s * dt + rm[i];
        ratio[m] = k(m, n) / k(m, i);
      }
    });
    sol.node_estimate[i] = weighted_mean_estimate(y, ratio);
    if (i == n) {
      for (std::size_t m = 0; m < paths; ++m) sol.p(m, n) = theta[m];
      continue;
    }
    std::vector<double> z(paths);
    for (std::size_t m = 0; m < paths; ++m) z[m] = ratio[m] * y[m];
    if (all_equal(z) && all_equal(ratio)) {
      for (std::size_t m = 0; m < paths; ++m) sol.p(m, i) = z[0] / ratio[0];
      continue;
    }
    const auto cols = node_features(i, noise, x, xi, options.use_state, options.use_control);
    double c1 = 1.0, c2 = 1.0;
    const std::vector<double> num = project(cols, z, {}, options.regression, &c1);
    const std::vector<double> den =
        all_equal(ratio) ? ratio : project(cols, ratio, {}, options.regression, &c2);
    note_condition(sol, i, std::max(c1, c2), options.regression);
    for (std::size_t m = 0; m < paths; ++m) {
      if (!(den[m] > 0.0)) {
        throw RegressionError("solve_closed_form: nonpositive density estimate at node " +
                              std::to_string(i));
      }
      sol.p(m, i) = num[m] / den[m];
    }
  }
  return sol;
}

AdjointSolution solve_regression(const BsvieSpec& spec, const ProcessPath* x,
                                 const BrownianEnsemble& noise, const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const double dt = g.dt();
  const std::vector<double> theta = terminal_values(spec.theta, noise);
  const std::vector<double> r = singular_source(spec, x, noise);
  const ProcessPath k = girsanov_path(spec.sigma0, noise);
  const SingularControl* xi = spec.xi ? &*spec.xi : nullptr;
  const KernelTable b = tabulate(spec.b0, g);

  AdjointSolution sol{ProcessPath(g, paths), "regression", 0, options.regression.degree,
                      std::vector<Estimate>(n + 1), std::vector<double>(n + 1, 1.0), {},
                      std::vector<std::optional<RegressionFit>>(n + 1), false, false};
  sol.state_feature = options.use_state && x;
  sol.control_feature = options.use_control && xi && !xi->is_deterministic();
  for (std::size_t m = 0; m < paths; ++m) sol.p(m, n) = theta[m];
  sol.node_estimate[n] = mean_estimate(theta);

  std::vector<double> target(paths), weight(paths);
  for (std::size_t i = n; i-- > 0;) {
    const double implicit = 1.0 - 0.5 * b(i, i) * dt;
    if (!(implicit > 0.0)) {
      throw std::invalid_argument("solve_regression: step too coarse for the kernel (b dt/2 >= 1)");
    }
    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        double s = 0.5 * b(i, n) * theta[m];
        for (std::size_t j = i + 1; j < n; ++j) s += b(i, j) * sol.p(m, j);
        target[m] = (theta[m] + s * dt + r[m * (n + 1) + i]) / implicit;
        weight[m] = k(m, n) / k(m, i);
      }
    });
    sol.node_estimate[i] = weighted_mean_estimate(target, weight);
    if (all_equal(target)) {
      for (std::size_t m = 0; m < paths; ++m) sol.p(m, i) = target[0];
      continue;
    }
    const auto cols = node_features(i, noise, x, xi, options.use_state, options.use_control);
    const bool uniform = all_equal(weight);
    RegressionFit fit = fit_least_squares(cols, target, uniform ? std::span<const double>{} : weight,
                                          options.regression);
    note_condition(sol, i, fit.condition_number(), options.regression);
    std::vector<double> f(cols.size());
    for (std::size_t m = 0; m < paths; ++m) {
      for (std::size_t v = 0; v < cols.size(); ++v) f[v] = cols[v][m];
      sol.p(m, i) = fit.predict(f);
    }
    sol.fits[i] = std::move(fit);
  }
  return sol;
}

std::vector<double> QDiagonal::node_means() const {
  std::vector<double> out(steps, 0.0);
  std::vector<double> col(paths);
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t m = 0; m < paths; ++m) col[m] = fitted[m * steps + i];
    out[i] = mean(col);
  }
  return out;
}

QDiagonal estimate_q_diagonal(const AdjointSolution& solution, const ProcessPath* x,
                              const SingularControl* xi, const BrownianEnsemble& noise,
                              const AdjointOptions& options) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  if (solution.p.paths() != paths || !(solution.p.grid() == g)) {
    throw std::invalid_argument("estimate_q_diagonal: solution is not aligned with the noise");
  }
  QDiagonal q{std::vector<double>(paths * n), std::vector<double>(paths * n), paths, n};
  std::vector<double> next(paths), prod(paths);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < paths; ++m) next[m] = solution.p(m, i + 1);
    const auto cols = node_features(i, noise, x, xi, options.use_state, options.use_control);
    const std::vector<double> cond = all_equal(next) ? next : project(cols, next, {}, options.regression);
    for (std::size_t m = 0; m < paths; ++m) {
      prod[m] = (next[m] - cond[m]) * noise.increment(m, i) / g.dt();
      q.raw[m * n + i] = prod[m];
    }
    const std::vector<double> fitted = all_equal(prod) ? prod : project(cols, prod, {}, options.regression);
    for (std::size_t m = 0; m < paths; ++m) q.fitted[m * n + i] = fitted[m];
  }
  return q;
}

SolverComparison compare_solutions(const AdjointSolution& a, const AdjointSolution& b,
                                   const TimeFunction& sigma0, const BrownianEnsemble& noise,
                                   double k, double abs_tol) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  if (a.p.paths() != paths || b.p.paths() != paths) {
    throw std::invalid_argument("compare_solutions: path counts differ");
  }
  const ProcessPath kp = girsanov_path(sigma0, noise);
  SolverComparison out;
  std::vector<double> d(paths), w(paths), ad(paths);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t m = 0; m < paths; ++m) {
      d[m] = a.p(m, i) - b.p(m, i);
      ad[m] = std::abs(d[m]);
      w[m] = kp(m, n) / kp(m, i);
    }
    const double diff = weighted_mean_estimate(d, w).value;
    const double se = std::sqrt(a.node_estimate[i].se * a.node_estimate[i].se +
                                b.node_estimate[i].se * b.node_estimate[i].se);
    out.difference.push_back(diff);
    out.combined_se.push_back(se);
    out.mean_abs_difference.push_back(mean(ad));
    const double tol = k * se + abs_tol;
    out.worst_ratio = std::max(out.worst_ratio, std::abs(diff) / std::max(se, abs_tol));
    if (std::abs(diff) > tol) out.agrees = false;
  }
  return out;
}

}  // namespace volterra
