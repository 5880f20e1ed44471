#include "volterra/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace volterra {

SingularControl::SingularControl(TimeGrid grid, std::size_t rows, std::vector<double> increments)
    : grid_(grid), rows_(rows), increments_(std::move(increments)) {
  if (rows_ == 0) throw std::invalid_argument("SingularControl: need at least one row");
  if (increments_.size() != rows_ * grid_.steps()) {
    throw std::invalid_argument("SingularControl: increment matrix has wrong size");
  }
  for (double d : increments_) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("SingularControl: increments must be finite and nonnegative");
    }
  }
}

SingularControl SingularControl::zero(const TimeGrid& grid) {
  return SingularControl(grid, 1, std::vector<double>(grid.steps(), 0.0));
}

SingularControl SingularControl::deterministic(const TimeGrid& grid, std::vector<double> increments) {
  return SingularControl(grid, 1, std::move(increments));
}

SingularControl SingularControl::atoms(const TimeGrid& grid,
                                       const std::vector<std::pair<double, double>>& atoms) {
  std::vector<double> inc(grid.steps(), 0.0);
  for (const auto& [t, size] : atoms) {
    const std::size_t i = grid.index_of(t);
    if (i >= grid.steps()) {
      throw std::invalid_argument("SingularControl: atoms must sit strictly before T");
    }
    inc[i] += size;
  }
  return SingularControl(grid, 1, std::move(inc));
}

SingularControl SingularControl::per_path(const TimeGrid& grid, std::size_t paths,
                                          std::vector<double> increments) {
  return SingularControl(grid, paths, std::move(increments));
}

double SingularControl::cumulative(std::size_t path, std::size_t i) const noexcept {
  const auto r = row(path);
  double s = 0.0;
  for (std::size_t j = 0; j < i && j < r.size(); ++j) s += r[j];
  return s;
}

SingularControl SingularControl::plus(double scale, const SingularControl& other) const {
  if (!(other.grid_ == grid_)) throw std::invalid_argument("SingularControl::plus: grid mismatch");
  if (rows_ != 1 && other.rows_ != 1 && rows_ != other.rows_) {
    throw std::invalid_argument("SingularControl::plus: path count mismatch");
  }
  const std::size_t rows = std::max(rows_, other.rows_);
  const std::size_t n = grid_.steps();
  std::vector<double> out(rows * n);
  for (std::size_t m = 0; m < rows; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = increment(m, i) + scale * other.increment(m, i);
      if (v < 0.0) {
        if (v < -1e-15) {
          throw std::invalid_argument("perturbed singular control has a negative increment at node " +
                                      std::to_string(i));
        }
        v = 0.0;
      }
      out[m * n + i] = v;
    }
  }
  return SingularControl(grid_, rows, std::move(out));
}

double cumulate(const SingularControl& xi, double t, std::size_t path) {
  return xi.cumulative(path, xi.grid().index_of(t));
}

RegularControl::RegularControl(TimeGrid grid, ControlSet set, std::size_t rows,
                               std::vector<double> values)
    : grid_(grid), set_(set), rows_(rows), values_(std::move(values)) {
  if (!(set_.lo <= set_.hi)) throw std::invalid_argument("RegularControl: empty control set");
  if (rows_ == 0) throw std::invalid_argument("RegularControl: need at least one row");
  if (values_.size() != rows_ * grid_.steps()) {
    throw std::invalid_argument("RegularControl: value matrix has wrong size");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]) || !set_.contains(values_[k])) {
      throw std::invalid_argument("RegularControl: value outside U at node " +
                                  std::to_string(k % grid_.steps()));
    }
  }
}

RegularControl RegularControl::constant(const TimeGrid& grid, ControlSet set, double value) {
  return RegularControl(grid, set, 1, std::vector<double>(grid.steps(), value));
}

RegularControl RegularControl::deterministic(const TimeGrid& grid, ControlSet set,
                                             std::vector<double> values) {
  return RegularControl(grid, set, 1, std::move(values));
}

RegularControl RegularControl::feedback(
    const TimeGrid& grid, ControlSet set, const BrownianEnsemble& noise,
    const std::function<double(std::size_t, std::span<const double>)>& rule) {
  if (!(noise.grid() == grid)) throw std::invalid_argument("RegularControl::feedback: grid mismatch");
  const std::size_t n = grid.steps();
  std::vector<double> values(noise.paths() * n);
  for (std::size_t m = 0; m < noise.paths(); ++m) {
    const auto b = noise.values(m);
    for (std::size_t i = 0; i < n; ++i) values[m * n + i] = rule(i, b.first(i + 1));
  }
  return RegularControl(grid, set, noise.paths(), std::move(values));
}

RegularControl RegularControl::plus(double scale, const RegularControl& direction) const {
  if (!(direction.grid_ == grid_)) throw std::invalid_argument("RegularControl::plus: grid mismatch");
  if (rows_ != 1 && direction.rows_ != 1 && rows_ != direction.rows_) {
    throw std::invalid_argument("RegularControl::plus: path count mismatch");
  }
  const std::size_t rows = std::max(rows_, direction.rows_);
  const std::size_t n = grid_.steps();
  std::vector<double> out(rows * n);
  for (std::size_t m = 0; m < rows; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = value(m, i) + scale * direction.value(m, i);
      if (!set_.contains(v)) {
        throw std::invalid_argument("perturbed regular control leaves U at node " + std::to_string(i));
      }
      out[m * n + i] = v;
    }
  }
  return RegularControl(grid_, set_, rows, std::move(out));
}

RegularControl bump_direction(const TimeGrid& grid, double start, double width, double eta) {
  std::vector<double> v(grid.steps(), 0.0);
  const double tol = 1e-9 * grid.dt();
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double t = grid.node(i);
    if (t >= start - tol && t < start + width - tol) v[i] = eta;
  }
  return RegularControl::deterministic(grid, ControlSet{}, std::move(v));
}

}  // namespace volterra
