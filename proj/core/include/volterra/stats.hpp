#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace volterra {

// Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Pairwise (cascade) summation in index order; deterministic for a given input.
double pairwise_sum(std::span<const double> x);

double mean(std::span<const double> x);
// Sample standard deviation (divisor n-1); 0 for n < 2.
double sample_sd(std::span<const double> x);
Estimate mean_estimate(std::span<const double> x);

// Mean of a - b and the paired standard error.
Estimate paired_difference(std::span<const double> a, std::span<const double> b);

// Self-normalised weighted mean sum(w x)/sum(w) with a delta-method SE.
Estimate weighted_mean_estimate(std::span<const double> x, std::span<const double> w);

// True when |value - target| <= k*se + abs_tol.
inline bool within(const Estimate& e, double target, double k, double abs_tol = 0.0) {
  const double d = e.value - target;
  return (d < 0 ? -d : d) <= k * e.se + abs_tol;
}

}  // namespace volterra
