#include "volterra/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace volterra {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mu = mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) sq[k] = (x[k] - mu) * (x[k] - mu);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(x.size() - 1));
}

Estimate mean_estimate(std::span<const double> x) {
  return {mean(x), sample_sd(x) / std::sqrt(static_cast<double>(x.size()))};
}

Estimate paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_difference: size mismatch");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return mean_estimate(d);
}

Estimate weighted_mean_estimate(std::span<const double> x, std::span<const double> w) {
  if (x.size() != w.size() || x.empty()) {
    throw std::invalid_argument("weighted_mean_estimate: size mismatch");
  }
  std::vector<double> wx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) wx[k] = w[k] * x[k];
  const double sw = pairwise_sum(w);
  const double value = pairwise_sum(wx) / sw;
  // Ratio estimator: influence terms w_k (x_k - value) / mean(w).
  const double wbar = sw / static_cast<double>(x.size());
  std::vector<double> infl(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) infl[k] = w[k] * (x[k] - value) / wbar;
  return {value, sample_sd(infl) / std::sqrt(static_cast<double>(x.size()))};
}

}  // namespace volterra
