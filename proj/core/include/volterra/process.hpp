#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "volterra/grid.hpp"

namespace volterra {

/// Values X(t_i), i = 0..N, for each of M paths (path-major storage).
class ProcessPath {
public:
  ProcessPath(TimeGrid grid, std::size_t paths)
      : grid_(grid), paths_(paths), values_(paths * (grid.steps() + 1), 0.0) {
    if (paths == 0) throw std::invalid_argument("ProcessPath: need at least one path");
  }
  ProcessPath(TimeGrid grid, std::size_t paths, std::vector<double> values)
      : grid_(grid), paths_(paths), values_(std::move(values)) {
    if (paths == 0 || values_.size() != paths * (grid.steps() + 1)) {
      throw std::invalid_argument("ProcessPath: value matrix has wrong size");
    }
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t paths() const noexcept { return paths_; }
  std::size_t width() const noexcept { return grid_.steps() + 1; }

  double operator()(std::size_t path, std::size_t i) const noexcept {
    return values_[path * width() + i];
  }
  double& operator()(std::size_t path, std::size_t i) noexcept {
    return values_[path * width() + i];
  }
  std::span<const double> path(std::size_t m) const noexcept {
    return {values_.data() + m * width(), width()};
  }
  std::span<double> path(std::size_t m) noexcept { return {values_.data() + m * width(), width()}; }

  // Cross-section at node i, in path order.
  std::vector<double> column(std::size_t i) const {
    std::vector<double> out(paths_);
    for (std::size_t m = 0; m < paths_; ++m) out[m] = (*this)(m, i);
    return out;
  }

  const std::vector<double>& raw() const noexcept { return values_; }

private:
  TimeGrid grid_;
  std::size_t paths_;
  std::vector<double> values_;
};

}  // namespace volterra
