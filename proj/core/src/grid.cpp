#include "volterra/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace volterra {

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps), dt_(0.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("TimeGrid: horizon T must be positive and finite");
  }
  if (steps == 0) {
    throw std::invalid_argument("TimeGrid: step count N must be at least 1");
  }
  dt_ = horizon_ / static_cast<double>(steps_);
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(steps_ + 1);
  for (std::size_t i = 0; i <= steps_; ++i) out[i] = node(i);
  return out;
}

std::size_t TimeGrid::index_of(double t) const {
  const double x = t / dt_;
  const double r = std::round(x);
  if (!std::isfinite(x) || r < 0.0 || r > static_cast<double>(steps_) ||
      std::abs(x - r) > 1e-9) {
    throw std::invalid_argument("TimeGrid: t = " + std::to_string(t) +
                                " is not a grid node");
  }
  return static_cast<std::size_t>(r);
}

TimeGrid make_grid(double horizon, std::size_t steps) { return TimeGrid(horizon, steps); }

}  // namespace volterra
