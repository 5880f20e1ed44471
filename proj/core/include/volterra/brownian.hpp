#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "volterra/grid.hpp"

namespace volterra {

/// M Brownian paths on a grid: increments dB_i ~ N(0, dt) for i < N and the
/// running values B(t_i) for i <= N (B(t_0) = 0).
///
/// Path m is drawn from CounterStream(seed, m), so the ensemble is a pure
/// function of (seed, grid, M) whatever the worker count.
class BrownianEnsemble {
public:
  BrownianEnsemble(TimeGrid grid, std::size_t paths, std::uint64_t seed,
                   std::vector<double> increments);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t paths() const noexcept { return paths_; }
  std::size_t steps() const noexcept { return grid_.steps(); }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<const double> increments(std::size_t path) const noexcept {
    return {increments_.data() + path * steps(), steps()};
  }
  std::span<const double> values(std::size_t path) const noexcept {
    return {values_.data() + path * (steps() + 1), steps() + 1};
  }
  double increment(std::size_t path, std::size_t i) const noexcept {
    return increments_[path * steps() + i];
  }
  double value(std::size_t path, std::size_t i) const noexcept {
    return values_[path * (steps() + 1) + i];
  }
  double terminal(std::size_t path) const noexcept { return value(path, steps()); }

  const std::vector<double>& raw_increments() const noexcept { return increments_; }

private:
  TimeGrid grid_;
  std::size_t paths_;
  std::uint64_t seed_;
  std::vector<double> increments_;
  std::vector<double> values_;
};

BrownianEnsemble sample_brownian(const TimeGrid& grid, std::size_t paths, std::uint64_t seed);

}  // namespace volterra
