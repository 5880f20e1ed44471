#include "volterra/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "volterra/parallel.hpp"
#include "volterra/regression.hpp"

namespace volterra {

PathFunctional PathFunctional::constant(double c) {
  PathFunctional f;
  f.name = "constant";
  f.value = [c](std::span<const double>) { return c; };
  f.derivative = [](std::size_t, std::span<const double>) { return 0.0; };
  f.conditional_derivative = f.derivative;
  f.scale = std::max(1.0, std::abs(c));
  return f;
}

PathFunctional PathFunctional::terminal_value() {
  PathFunctional f;
  f.name = "BT";
  f.value = [](std::span<const double> b) { return b.back(); };
  f.derivative = [](std::size_t, std::span<const double>) { return 1.0; };
  f.conditional_derivative = f.derivative;
  return f;
}

PathFunctional PathFunctional::terminal_square() {
  PathFunctional f;
  f.name = "BT2";
  f.value = [](std::span<const double> b) { return b.back() * b.back(); };
  f.derivative = [](std::size_t, std::span<const double> b) { return 2.0 * b.back(); };
  f.conditional_derivative = [](std::size_t i, std::span<const double> b) { return 2.0 * b[i]; };
  return f;
}

namespace {

std::shared_ptr<const std::vector<double>> node_values(const TimeFunction& phi, const TimeGrid& g) {
  auto v = std::make_shared<std::vector<double>>(g.steps());
  for (std::size_t j = 0; j < g.steps(); ++j) (*v)[j] = phi(g.node(j));
  return v;
}

}  // namespace

PathFunctional PathFunctional::wiener_integral(const TimeFunction& phi, const TimeGrid& grid) {
  const auto v = node_values(phi, grid);
  PathFunctional f;
  f.name = "wiener";
  f.value = [v](std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < v->size(); ++j) s += (*v)[j] * (b[j + 1] - b[j]);
    return s;
  };
  f.derivative = [v](std::size_t j, std::span<const double>) { return (*v)[j]; };
  f.conditional_derivative = f.derivative;
  return f;
}

PathFunctional PathFunctional::exp_wiener(const TimeFunction& phi, const TimeGrid& grid) {
  const auto v = node_values(phi, grid);
  const double dt = grid.dt();
  // exp(sum_{j<upto} phi_j dB_j - 1/2 phi_j^2 dt)
  auto partial = [v, dt](std::span<const double> b, std::size_t upto) {
    double s = 0.0;
    for (std::size_t j = 0; j < upto; ++j) s += (*v)[j] * (b[j + 1] - b[j]) - 0.5 * (*v)[j] * (*v)[j] * dt;
    return std::exp(s);
  };
  PathFunctional f;
  f.name = "exp_wiener";
  f.value = [partial, v](std::span<const double> b) { return partial(b, v->size()); };
  f.derivative = [partial, v](std::size_t j, std::span<const double> b) {
    return (*v)[j] * partial(b, v->size());
  };
  f.conditional_derivative = [partial, v](std::size_t i, std::span<const double> b) {
    return (*v)[i] * partial(b, i);
  };
  return f;
}

PathFunctional PathFunctional::composite(std::function<double(double)> outer,
                                         std::function<double(double)> outer_prime,
                                         const PathFunctional& inner, std::string name) {
  PathFunctional f;
  f.name = std::move(name);
  const Eval in = inner.value;
  f.value = [outer, in](std::span<const double> b) { return outer(in(b)); };
  if (inner.derivative && outer_prime) {
    const Derivative din = inner.derivative;
    f.derivative = [outer_prime, in, din](std::size_t j, std::span<const double> b) {
      return outer_prime(in(b)) * din(j, b);
    };
  }
  f.scale = inner.scale;
  return f;
}

PathFunctional PathFunctional::linear_combination(double a, const PathFunctional& f, double c,
                                                  const PathFunctional& g) {
  PathFunctional out;
  out.name = "lincomb(" + f.name + "," + g.name + ")";
  const Eval fv = f.value, gv = g.value;
  out.value = [a, c, fv, gv](std::span<const double> b) { return a * fv(b) + c * gv(b); };
  if (f.derivative && g.derivative) {
    const Derivative fd = f.derivative, gd = g.derivative;
    out.derivative = [a, c, fd, gd](std::size_t j, std::span<const double> b) {
      return a * fd(j, b) + c * gd(j, b);
    };
  }
  if (f.conditional_derivative && g.conditional_derivative) {
    const Derivative fd = f.conditional_derivative, gd = g.conditional_derivative;
    out.conditional_derivative = [a, c, fd, gd](std::size_t i, std::span<const double> b) {
      return a * fd(i, b) + c * gd(i, b);
    };
  }
  out.scale = std::max(f.scale, g.scale);
  return out;
}

std::vector<double> directional_derivative(const PathFunctional& f, std::span<const double> gamma,
                                           double epsilon, const BrownianEnsemble& noise) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  if (gamma.size() != n) throw std::invalid_argument("directional_derivative: gamma needs N values");
  if (!(epsilon > 0.0)) throw std::invalid_argument("directional_derivative: epsilon must be positive");
  const double eps = epsilon * f.scale;
  std::vector<double> shift(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) shift[i] = shift[i - 1] + gamma[i - 1] * g.dt();
  std::vector<double> out(noise.paths());
  parallel_for(noise.paths(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> up(n + 1), down(n + 1);
    for (std::size_t m = begin; m < end; ++m) {
      const auto b = noise.values(m);
      for (std::size_t i = 0; i <= n; ++i) {
        up[i] = b[i] + eps * shift[i];
        down[i] = b[i] - eps * shift[i];
      }
      out[m] = (f(up) - f(down)) / (2.0 * eps);
    }
  });
  return out;
}

std::vector<double> hida_derivative_profile(const PathFunctional& f, double epsilon,
                                            const BrownianEnsemble& noise) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("hida_derivative_profile: epsilon must be positive");
  const std::size_t n = noise.steps();
  const double eps = epsilon * f.scale;
  std::vector<double> out(noise.paths() * n);
  parallel_for(noise.paths(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> up(n + 1), down(n + 1);
    for (std::size_t m = begin; m < end; ++m) {
      const auto b = noise.values(m);
      for (std::size_t j = 0; j < n; ++j) {
        // gamma = 1_{cell j}/dt shifts B(t_k) by eps for k > j.
        for (std::size_t k = 0; k <= n; ++k) {
          const double s = k > j ? eps : 0.0;
          up[k] = b[k] + s;
          down[k] = b[k] - s;
        }
        out[m * n + j] = (f(up) - f(down)) / (2.0 * eps);
      }
    }
  });
  return out;
}

AdaptedIntegrand AdaptedIntegrand::deterministic(const TimeFunction& phi, const TimeGrid& grid) {
  const auto v = node_values(phi, grid);
  return {"deterministic", [v](std::size_t i, std::span<const double>) { return (*v)[i]; }, true};
}

AdaptedIntegrand AdaptedIntegrand::path_value() {
  return {"path_value", [](std::size_t i, std::span<const double> b) { return b[i]; }, true};
}

AdaptedIntegrand AdaptedIntegrand::terminal_lookahead() {
  return {"terminal_lookahead", [](std::size_t, std::span<const double> b) { return b.back(); }, false};
}

double DualityResult::combined_se() const { return std::sqrt(lhs.se * lhs.se + rhs.se * rhs.se); }

bool DualityResult::agrees(double k, double abs_tol) const {
  return std::abs(lhs.value - rhs.value) <= k * combined_se() + abs_tol;
}

namespace {

// E[target | B(t_i)] by polynomial regression; the mean at t_0.
std::vector<double> condition_on_brownian(const BrownianEnsemble& noise, std::size_t i,
                                          std::span<const double> target, int degree) {
  std::vector<std::vector<double>> features(1, std::vector<double>(noise.paths()));
  for (std::size_t m = 0; m < noise.paths(); ++m) features[0][m] = noise.value(m, i);
  RegressionOptions opts;
  opts.degree = degree;
  return project(features, target, {}, opts);
}

}  // namespace

DualityResult duality_check(const PathFunctional& f, const AdaptedIntegrand& phi,
                            const BrownianEnsemble& noise, const MalliavinOptions& options) {
  if (!phi.adapted) {
    throw std::invalid_argument("duality_check: integrand '" + phi.name + "' is not adapted");
  }
  const std::size_t n = noise.steps();
  const std::size_t paths = noise.paths();
  const double dt = noise.grid().dt();
  std::vector<double> lhs(paths), rhs(paths, 0.0);
  std::vector<double> phis(paths * n);
  parallel_for(paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const auto b = noise.values(m);
      double integral = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = phi.value(i, b.first(i + 1));
        phis[m * n + i] = v;
        integral += v * noise.increment(m, i);
      }
      lhs[m] = f(b) * integral;
    }
  });

  DualityResult out;
  out.functional = f.name;
  out.integrand = phi.name;
  if (f.conditional_derivative) {
    out.analytic_conditional = true;
    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
      for (std::size_t m = begin; m < end; ++m) {
        const auto b = noise.values(m);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += f.conditional_derivative(i, b.first(i + 1)) * phis[m * n + i];
        rhs[m] = s * dt;
      }
    });
  } else {
    std::vector<double> profile;
    if (f.derivative) {
      profile.resize(paths * n);
      for (std::size_t m = 0; m < paths; ++m) {
        const auto b = noise.values(m);
        for (std::size_t j = 0; j < n; ++j) profile[m * n + j] = f.derivative(j, b);
      }
    } else {
      profile = hida_derivative_profile(f, options.epsilon, noise);
    }
    std::vector<double> column(paths);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < paths; ++m) column[m] = profile[m * n + i];
      const auto cond = condition_on_brownian(noise, i, column, options.degree);
      for (std::size_t m = 0; m < paths; ++m) rhs[m] += cond[m] * phis[m * n + i] * dt;
    }
  }
  out.lhs = mean_estimate(lhs);
  out.rhs = mean_estimate(rhs);
  return out;
}

FubiniReport fubini_checks(const ProcessPath& p, const TwoTimeKernel& g, const SingularControl& xi) {
  const TimeGrid& grid = p.grid();
  if (!(xi.grid() == grid)) throw std::invalid_argument("fubini_checks: grids differ");
  if (xi.rows() != 1 && xi.rows() != p.paths()) {
    throw std::invalid_argument("fubini_checks: control rows do not match the paths");
  }
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  std::vector<double> gt((n + 1) * (n + 1));
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) gt[i * (n + 1) + j] = g(grid.node(i), grid.node(j));
  }
  const auto G = [&](std::size_t i, std::size_t j) { return gt[i * (n + 1) + j]; };

  FubiniReport r;
  for (std::size_t m = 0; m < p.paths(); ++m) {
    const auto pm = p.path(m);
    const auto dxi = xi.row(m);
    // Inner sums run over j < i (left-point convention) on both sides.
    double l1 = 0.0, l2 = 0.0, printed = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      double a = 0.0, c = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        a += G(i, j) * dt;
        c += G(i, j) * dxi[j];
      }
      l1 += pm[i] * a * dt;
      l2 += pm[i] * c * dt;
      if (i < n) printed += pm[i] * a * dxi[i];
    }
    double r1 = 0.0, r2 = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
      double inner = 0.0;
      for (std::size_t i = j + 1; i <= n; ++i) inner += pm[i] * G(i, j) * dt;
      r1 += inner * dt;
      if (j < n) r2 += inner * dxi[j];
    }
    r.identity1 = std::max(r.identity1, std::abs(l1 - r1));
    r.identity2 = std::max(r.identity2, std::abs(l2 - r2));
    r.identity2_outer_dxi_gap = std::max(r.identity2_outer_dxi_gap, std::abs(printed - r2));
  }
  return r;
}

bool StochasticFubiniResult::agrees(double k, double abs_tol) const {
  return std::abs(lhs.value - rhs.value) <= k * std::sqrt(lhs.se * lhs.se + rhs.se * rhs.se) + abs_tol;
}

StochasticFubiniResult fubini_stochastic(const ProcessFunctional& p, const TwoTimeKernel& g,
                                         const BrownianEnsemble& noise,
                                         const MalliavinOptions& options) {
  const TimeGrid& grid = noise.grid();
  const std::size_t n = grid.steps();
  const std::size_t paths = noise.paths();
  const double dt = grid.dt();
  const double eps = options.epsilon;
  std::vector<double> gt((n + 1) * (n + 1));
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) gt[i * (n + 1) + j] = g(grid.node(i), grid.node(j));
  }
  std::vector<double> lhs(paths);
  std::vector<double> inner(paths * n);  // sum_{i>j} D_{t_j} p_i G(t_i,t_j) dt
  parallel_for(paths, [&](std::size_t begin, std::size_t end) {
    std::vector<double> up(n + 1), down(n + 1);
    for (std::size_t m = begin; m < end; ++m) {
      const auto b = noise.values(m);
      double l = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < i; ++j) s += gt[i * (n + 1) + j] * noise.increment(m, j);
        l += p(i, b.first(i + 1)) * s * dt;
      }
      lhs[m] = l;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k <= n; ++k) {
          const double sh = k > j ? eps : 0.0;
          up[k] = b[k] + sh;
          down[k] = b[k] - sh;
        }
        double s = 0.0;
        for (std::size_t i = j + 1; i <= n; ++i) {
          const std::span<const double> u(up.data(), i + 1), d(down.data(), i + 1);
          s += (p(i, u) - p(i, d)) / (2.0 * eps) * gt[i * (n + 1) + j] * dt;
        }
        inner[m * n + j] = s;
      }
    }
  });
  std::vector<double> rhs(paths, 0.0), column(paths);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t m = 0; m < paths; ++m) column[m] = inner[m * n + j];
    const auto cond = condition_on_brownian(noise, j, column, options.degree);
    for (std::size_t m = 0; m < paths; ++m) rhs[m] += cond[m] * dt;
  }
  return {mean_estimate(lhs), mean_estimate(rhs)};
}

}  // namespace volterra
