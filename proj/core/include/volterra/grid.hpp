#pragma once

#include <cstddef>
#include <vector>

namespace volterra {

/// Uniform partition t_i = i*T/N of [0, T].
class TimeGrid {
public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }

  // t_N is returned as exactly T.
  double node(std::size_t i) const noexcept {
    return i == steps_ ? horizon_ : static_cast<double>(i) * dt_;
  }
  std::vector<double> nodes() const;

  // Index of the node equal to t (up to 1e-9 relative to dt); throws
  // std::invalid_argument for off-grid times.
  std::size_t index_of(double t) const;

  bool operator==(const TimeGrid& other) const noexcept {
    return horizon_ == other.horizon_ && steps_ == other.steps_;
  }

private:
  double horizon_;
  std::size_t steps_;
  double dt_;
};

TimeGrid make_grid(double horizon, std::size_t steps);

}  // namespace volterra
