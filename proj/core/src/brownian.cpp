#include "volterra/brownian.hpp"

#include <cmath>
#include <stdexcept>

#include "volterra/parallel.hpp"
#include "volterra/random.hpp"

namespace volterra {

BrownianEnsemble::BrownianEnsemble(TimeGrid grid, std::size_t paths, std::uint64_t seed,
                                   std::vector<double> increments)
    : grid_(grid), paths_(paths), seed_(seed), increments_(std::move(increments)) {
  if (paths_ == 0) throw std::invalid_argument("BrownianEnsemble: need at least one path");
  const std::size_t n = grid_.steps();
  if (increments_.size() != paths_ * n) {
    throw std::invalid_argument("BrownianEnsemble: increment matrix has wrong size");
  }
  values_.assign(paths_ * (n + 1), 0.0);
  for (std::size_t m = 0; m < paths_; ++m) {
    double b = 0.0;
    double* row = values_.data() + m * (n + 1);
    const double* inc = increments_.data() + m * n;
    for (std::size_t i = 0; i < n; ++i) {
      b += inc[i];
      row[i + 1] = b;
    }
  }
}

BrownianEnsemble sample_brownian(const TimeGrid& grid, std::size_t paths, std::uint64_t seed) {
  if (paths == 0) throw std::invalid_argument("sample_brownian: M must be at least 1");
  const std::size_t n = grid.steps();
  const double sd = std::sqrt(grid.dt());
  std::vector<double> inc(paths * n);
  parallel_for(paths, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      CounterStream rng(seed, m);
      double* row = inc.data() + m * n;
      for (std::size_t i = 0; i < n; ++i) row[i] = sd * rng.next_normal();
    }
  });
  return BrownianEnsemble(grid, paths, seed, std::move(inc));
}

}  // namespace volterra
