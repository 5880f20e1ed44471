#include "volterra/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "volterra/parallel.hpp"

namespace volterra {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::constant: return "constant";
    case KernelKind::exp_decay: return "exp_decay";
    case KernelKind::poly: return "poly";
    case KernelKind::custom: return "custom";
    case KernelKind::tabulated: return "tabulated";
  }
  return "unknown";
}

TwoTimeKernel::TwoTimeKernel() : params_{0.0} {}

TwoTimeKernel TwoTimeKernel::constant(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("kernel: constant must be finite");
  TwoTimeKernel k;
  k.params_ = {c};
  return k;
}

TwoTimeKernel TwoTimeKernel::exp_decay(double c, double lambda) {
  if (!std::isfinite(c) || !std::isfinite(lambda)) {
    throw std::invalid_argument("kernel: exp_decay parameters must be finite");
  }
  TwoTimeKernel k;
  k.kind_ = KernelKind::exp_decay;
  k.params_ = {c, lambda};
  return k;
}

TwoTimeKernel TwoTimeKernel::poly(std::vector<double> coefficients) {
  if (coefficients.empty()) throw std::invalid_argument("kernel: poly needs coefficients");
  for (double a : coefficients) {
    if (!std::isfinite(a)) throw std::invalid_argument("kernel: poly coefficients must be finite");
  }
  TwoTimeKernel k;
  k.kind_ = KernelKind::poly;
  k.params_ = std::move(coefficients);
  return k;
}

TwoTimeKernel TwoTimeKernel::custom(std::function<double(double, double)> f,
                                    std::function<double(double, double)> dfdt, double bound,
                                    bool time_invariant) {
  if (!f) throw std::invalid_argument("kernel: custom evaluator is empty");
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw std::invalid_argument("kernel: custom bound must be finite and nonnegative");
  }
  TwoTimeKernel k;
  k.kind_ = KernelKind::custom;
  k.params_.clear();
  k.f_ = std::move(f);
  k.dfdt_ = std::move(dfdt);
  k.custom_bound_ = bound;
  k.time_invariant_ = time_invariant;
  return k;
}

TwoTimeKernel TwoTimeKernel::tabulated(const TimeGrid& grid, std::vector<double> values,
                                       double bound) {
  const std::size_t n1 = grid.steps() + 1;
  if (values.size() != n1 * n1) throw std::invalid_argument("kernel: table must be (N+1)^2");
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("kernel: table values must be finite");
    if (std::abs(v) > bound) throw std::invalid_argument("kernel: table exceeds the stated bound");
  }
  TwoTimeKernel k;
  k.kind_ = KernelKind::tabulated;
  k.params_.clear();
  k.custom_bound_ = bound;
  k.table_grid_ = std::make_shared<const TimeGrid>(grid);
  k.table_ = std::make_shared<const std::vector<double>>(std::move(values));
  return k;
}

namespace {

double lag_value(KernelKind kind, const std::vector<double>& p, double lag) {
  switch (kind) {
    case KernelKind::constant: return p[0];
    case KernelKind::exp_decay: return p[0] * std::exp(-p[1] * lag);
    case KernelKind::poly: {
      double y = 0.0;
      for (std::size_t k = p.size(); k-- > 0;) y = y * lag + p[k];
      return y;
    }
    default: return 0.0;
  }
}

// d/dlag of the lag profile.
double lag_slope(KernelKind kind, const std::vector<double>& p, double lag) {
  switch (kind) {
    case KernelKind::constant: return 0.0;
    case KernelKind::exp_decay: return -p[1] * p[0] * std::exp(-p[1] * lag);
    case KernelKind::poly: {
      double y = 0.0;
      for (std::size_t k = p.size(); k-- > 1;) y = y * lag + static_cast<double>(k) * p[k];
      return y;
    }
    default: return 0.0;
  }
}

}  // namespace

double TwoTimeKernel::operator()(double t, double s) const {
  switch (kind_) {
    case KernelKind::custom: return scale_ * f_(t, s);
    case KernelKind::tabulated: {
      const std::size_t n1 = table_grid_->steps() + 1;
      return scale_ * (*table_)[table_grid_->index_of(t) * n1 + table_grid_->index_of(s)];
    }
    default: return scale_ * lag_value(kind_, params_, std::abs(t - s));
  }
}

bool TwoTimeKernel::has_time_derivative() const noexcept {
  return kind_ != KernelKind::custom || time_invariant_ || static_cast<bool>(dfdt_);
}

double TwoTimeKernel::time_derivative(double t, double s) const {
  switch (kind_) {
    case KernelKind::custom:
      if (time_invariant_) return 0.0;
      if (!dfdt_) throw std::invalid_argument("kernel: no time derivative supplied");
      return scale_ * dfdt_(t, s);
    case KernelKind::tabulated: {
      const TimeGrid& g = *table_grid_;
      const std::size_t n1 = g.steps() + 1;
      const std::size_t i = g.index_of(t);
      const std::size_t j = g.index_of(s);
      const auto at = [&](std::size_t a) { return (*table_)[a * n1 + j]; };
      if (g.steps() == 0) return 0.0;
      double d;
      if (i == 0) {
        d = (at(1) - at(0)) / g.dt();
      } else if (i == g.steps()) {
        d = (at(i) - at(i - 1)) / g.dt();
      } else {
        d = (at(i + 1) - at(i - 1)) / (2.0 * g.dt());
      }
      return scale_ * d;
    }
    default: {
      // d/dt f(|t-s|); at t == s the forward-triangle (t >= s) side is used.
      const double sign = t >= s ? 1.0 : -1.0;
      return scale_ * sign * lag_slope(kind_, params_, std::abs(t - s));
    }
  }
}

double TwoTimeKernel::bound(double horizon) const {
  double c = 0.0;
  switch (kind_) {
    case KernelKind::constant: c = std::abs(params_[0]); break;
    case KernelKind::exp_decay:
      c = std::abs(params_[0]) * std::max(1.0, std::exp(-params_[1] * horizon));
      break;
    case KernelKind::poly: {
      double tk = 1.0;
      for (double a : params_) {
        c += std::abs(a) * tk;
        tk *= horizon;
      }
      break;
    }
    case KernelKind::custom:
    case KernelKind::tabulated: c = custom_bound_; break;
  }
  return std::abs(scale_) * c;
}

bool TwoTimeKernel::is_zero() const noexcept {
  if (scale_ == 0.0) return true;
  switch (kind_) {
    case KernelKind::constant:
    case KernelKind::exp_decay: return params_[0] == 0.0;
    case KernelKind::poly:
      return std::all_of(params_.begin(), params_.end(), [](double a) { return a == 0.0; });
    default: return false;
  }
}

bool TwoTimeKernel::constant_in_time() const noexcept {
  if (is_zero()) return true;
  switch (kind_) {
    case KernelKind::constant: return true;
    case KernelKind::exp_decay: return params_[1] == 0.0;
    case KernelKind::poly:
      return std::all_of(params_.begin() + 1, params_.end(), [](double a) { return a == 0.0; });
    case KernelKind::custom: return time_invariant_;
    default: return false;
  }
}

TwoTimeKernel TwoTimeKernel::scaled(double factor) const {
  TwoTimeKernel k = *this;
  k.scale_ *= factor;
  return k;
}

TimeFunction TimeFunction::constant(double c) {
  TimeFunction f;
  f.a_ = c;
  return f;
}

TimeFunction TimeFunction::exponential(double a, double b) {
  TimeFunction f;
  f.a_ = a;
  f.b_ = b;
  f.label_ = "exponential";
  return f;
}

TimeFunction TimeFunction::custom(std::function<double(double)> fn, std::string label) {
  if (!fn) throw std::invalid_argument("TimeFunction: empty evaluator");
  TimeFunction f;
  f.f_ = std::move(fn);
  f.label_ = std::move(label);
  return f;
}

double TimeFunction::operator()(double t) const {
  if (f_) return f_(t);
  return b_ == 0.0 ? a_ : a_ * std::exp(b_ * t);
}

KernelTable::KernelTable(TimeGrid grid)
    : grid_(grid), values_((grid.steps() + 1) * (grid.steps() + 2) / 2, 0.0) {}

double KernelTable::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

KernelTable tabulate(const TwoTimeKernel& kernel, const TimeGrid& grid) {
  if (kernel.tabulation_grid() && !(*kernel.tabulation_grid() == grid)) {
    throw std::invalid_argument("kernel table: tabulated kernel lives on a different grid");
  }
  KernelTable table(grid);
  const std::size_t n = grid.steps();
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = i; j <= n; ++j) table(i, j) = kernel(grid.node(i), grid.node(j));
  }
  return table;
}

namespace {

// next(i,j) = dt * trapezoid_k prev(i,k) * base(k,j), k = i..j.
KernelTable compose(const KernelTable& prev, const KernelTable& base) {
  const TimeGrid& g = base.grid();
  const std::size_t n = g.steps();
  const double dt = g.dt();
  KernelTable next(g);
  parallel_for(n + 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j <= n; ++j) {
        double s = 0.5 * (prev(i, i) * base(i, j) + prev(i, j) * base(j, j));
        for (std::size_t k = i + 1; k < j; ++k) s += prev(i, k) * base(k, j);
        next(i, j) = s * dt;
      }
    }
  });
  return next;
}

}  // namespace

KernelTable iterated_kernel(const TwoTimeKernel& b0, std::size_t n, const TimeGrid& grid) {
  if (n == 0) throw std::invalid_argument("iterated_kernel: order must be >= 1");
  const KernelTable base = tabulate(b0, grid);
  KernelTable cur = base;
  for (std::size_t k = 2; k <= n; ++k) cur = compose(cur, base);
  return cur;
}

double iterated_kernel_majorant(double bound, double horizon, std::size_t n) {
  if (n == 0) throw std::invalid_argument("majorant: order must be >= 1");
  // C^n T^(n-1)/(n-1)! built as a running product to avoid overflow.
  double v = bound;
  for (std::size_t k = 1; k < n; ++k) v *= bound * horizon / static_cast<double>(k);
  return v;
}

double neumann_tail_bound(double bound, double horizon, std::size_t order) {
  if (bound == 0.0) return 0.0;
  // C * sum_{k >= order} (CT)^k / k!
  const double x = bound * horizon;
  double term = 1.0;
  for (std::size_t k = 1; k <= order; ++k) term *= x / static_cast<double>(k);
  double sum = 0.0;
  for (std::size_t k = order; k < order + 100000; ++k) {
    sum += term;
    const double ratio = x / static_cast<double>(k + 1);
    term *= ratio;
    if (ratio < 0.5 && term < 1e-18 * sum) break;
    if (term == 0.0) break;
  }
  return bound * sum;
}

ResolventTable neumann_psi(const TwoTimeKernel& b0, const TimeGrid& grid, double tol,
                           std::size_t max_order) {
  if (!(tol > 0.0)) throw std::invalid_argument("neumann_psi: tolerance must be positive");
  const double c = b0.bound(grid.horizon());
  const KernelTable base = tabulate(b0, grid);
  ResolventTable out{base, 1, neumann_tail_bound(c, grid.horizon(), 1), {}};
  out.tail_history.push_back(out.tail_bound);
  const std::size_t n = grid.steps();
  KernelTable term = base;
  while (out.tail_bound >= tol) {
    if (out.order >= max_order) {
      throw std::invalid_argument("neumann_psi: tolerance not reachable within max_order terms");
    }
    term = compose(term, base);
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = i; j <= n; ++j) out.values(i, j) += term(i, j);
    }
    ++out.order;
    out.tail_bound = neumann_tail_bound(c, grid.horizon(), out.order);
    out.tail_history.push_back(out.tail_bound);
  }
  return out;
}

std::vector<double> quadrature_weights(std::size_t intervals, Quadrature rule) {
  std::vector<double> w(intervals + 1, 0.0);
  if (intervals == 0) return w;
  if (rule == Quadrature::trapezoid || intervals == 1) {
    for (std::size_t k = 0; k <= intervals; ++k) w[k] = 1.0;
    w.front() = w.back() = 0.5;
    return w;
  }
  const auto simpson = [&](std::size_t from, std::size_t count) {
    for (std::size_t k = 0; k < count; k += 2) {
      w[from + k] += 1.0 / 3.0;
      w[from + k + 1] += 4.0 / 3.0;
      w[from + k + 2] += 1.0 / 3.0;
    }
  };
  const auto three_eighths = [&](std::size_t from) {
    w[from] += 3.0 / 8.0;
    w[from + 1] += 9.0 / 8.0;
    w[from + 2] += 9.0 / 8.0;
    w[from + 3] += 3.0 / 8.0;
  };
  if (intervals % 2 == 0) {
    simpson(0, intervals);
  } else {
    simpson(0, intervals - 3);
    three_eighths(intervals - 3);
  }
  return w;
}

double resolvent_residual(const TwoTimeKernel& b0, const ResolventTable& psi, Quadrature rule) {
  const TimeGrid& g = psi.values.grid();
  if (b0.tabulation_grid() && !(*b0.tabulation_grid() == g)) {
    throw std::invalid_argument("resolvent_residual: kernel and resolvent grids differ");
  }
  const KernelTable base = tabulate(b0, g);
  const std::size_t n = g.steps();
  const double dt = g.dt();
  std::vector<std::vector<double>> weights(n + 1);
  for (std::size_t len = 0; len <= n; ++len) weights[len] = quadrature_weights(len, rule);
  std::vector<double> row_max(n + 1, 0.0);
  parallel_for(n + 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double worst = 0.0;
      for (std::size_t j = i; j <= n; ++j) {
        const std::vector<double>& w = weights[j - i];
        double integral = 0.0;
        for (std::size_t k = i; k <= j; ++k) integral += w[k - i] * base(i, k) * psi.values(k, j);
        const double r = psi.values(i, j) - base(i, j) - integral * dt;
        worst = std::max(worst, std::abs(r));
      }
      row_max[i] = worst;
    }
  });
  return *std::max_element(row_max.begin(), row_max.end());
}

}  // namespace volterra
