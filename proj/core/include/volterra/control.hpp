#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "volterra/brownian.hpp"
#include "volterra/grid.hpp"

namespace volterra {

/// Singular control stored as atoms dxi_i >= 0 at nodes t_0..t_{N-1}.
///
/// The cumulative path xi(t_i) = sum_{j<i} dxi_j excludes the atom at t_i,
/// which makes it left-continuous with xi(0) = 0. Either one row shared by
/// every path (deterministic) or one row per path.
class SingularControl {
public:
  SingularControl(TimeGrid grid, std::size_t rows, std::vector<double> increments);

  static SingularControl zero(const TimeGrid& grid);
  static SingularControl deterministic(const TimeGrid& grid, std::vector<double> increments);
  // (time, size) atoms; each time must be a node strictly before T.
  static SingularControl atoms(const TimeGrid& grid,
                               const std::vector<std::pair<double, double>>& atoms);
  static SingularControl per_path(const TimeGrid& grid, std::size_t paths,
                                  std::vector<double> increments);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t rows() const noexcept { return rows_; }
  bool is_deterministic() const noexcept { return rows_ == 1; }

  double increment(std::size_t path, std::size_t i) const noexcept {
    return increments_[row_index(path) * grid_.steps() + i];
  }
  std::span<const double> row(std::size_t path) const noexcept {
    return {increments_.data() + row_index(path) * grid_.steps(), grid_.steps()};
  }

  // xi(t_i), left-continuous.
  double cumulative(std::size_t path, std::size_t i) const noexcept;
  double total(std::size_t path) const noexcept { return cumulative(path, grid_.steps()); }

  // this + scale * other; throws std::invalid_argument if an increment would
  // turn negative (beyond -1e-15 rounding, which is clipped to zero).
  SingularControl plus(double scale, const SingularControl& other) const;

  const std::vector<double>& raw() const noexcept { return increments_; }

private:
  std::size_t row_index(std::size_t path) const noexcept { return rows_ == 1 ? 0 : path; }

  TimeGrid grid_;
  std::size_t rows_;
  std::vector<double> increments_;
};

// xi(t) at a grid node t; off-grid t throws std::invalid_argument.
double cumulate(const SingularControl& xi, double t, std::size_t path = 0);

/// Closed interval U of admissible control values.
struct ControlSet {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double u) const noexcept { return u >= lo && u <= hi; }
  bool operator==(const ControlSet&) const = default;
};

/// Regular control values u_i in U at nodes t_0..t_{N-1}.
class RegularControl {
public:
  RegularControl(TimeGrid grid, ControlSet set, std::size_t rows, std::vector<double> values);

  static RegularControl constant(const TimeGrid& grid, ControlSet set, double value);
  static RegularControl deterministic(const TimeGrid& grid, ControlSet set,
                                      std::vector<double> values);
  // Adapted feedback: u_i(path) = rule(i, B(t_0..t_i)), so u_i sees only
  // dB_0..dB_{i-1}.
  static RegularControl feedback(
      const TimeGrid& grid, ControlSet set, const BrownianEnsemble& noise,
      const std::function<double(std::size_t, std::span<const double>)>& rule);

  const TimeGrid& grid() const noexcept { return grid_; }
  const ControlSet& set() const noexcept { return set_; }
  std::size_t rows() const noexcept { return rows_; }
  bool is_deterministic() const noexcept { return rows_ == 1; }

  double value(std::size_t path, std::size_t i) const noexcept {
    return values_[(rows_ == 1 ? 0 : path) * grid_.steps() + i];
  }

  // this + scale * direction, checked against U.
  RegularControl plus(double scale, const RegularControl& direction) const;

  const std::vector<double>& raw() const noexcept { return values_; }

private:
  TimeGrid grid_;
  ControlSet set_;
  std::size_t rows_;
  std::vector<double> values_;
};

// Bump direction eta * 1_{[t, t+h)} evaluated on the nodes; unrestricted set.
RegularControl bump_direction(const TimeGrid& grid, double start, double width, double eta);

}  // namespace volterra
