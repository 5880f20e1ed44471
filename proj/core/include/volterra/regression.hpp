#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace volterra {

struct RegressionOptions {
  int degree = 2;
  // Design condition numbers above this are reported through the fit.
  double warn_condition = 1e8;
  // At or above this the design is treated as singular.
  double singular_condition = 1e13;
};

/// Least-squares projection onto polynomials (total degree <= d) of a few
/// cross-sectional features. Features are standardised first; features that
/// are constant across paths, or affine in earlier features, are dropped, so
/// at t = 0 the fit reduces to the (weighted) mean.
class RegressionFit {
public:
  double predict(std::span<const double> features) const;
  // d(prediction)/d(feature var) at the given point.
  double derivative(std::span<const double> features, std::size_t var) const;

  double condition_number() const noexcept { return condition_; }
  bool ill_conditioned() const noexcept { return ill_conditioned_; }
  std::size_t basis_size() const noexcept { return exponents_.size(); }

private:
  friend RegressionFit fit_least_squares(const std::vector<std::vector<double>>&,
                                         std::span<const double>, std::span<const double>,
                                         const RegressionOptions&);

  std::size_t vars_ = 0;
  std::vector<std::size_t> kept_;           // indices of non-constant vars
  std::vector<double> centre_, scale_;      // per kept var
  std::vector<std::vector<int>> exponents_; // per basis function, per kept var
  std::vector<double> coef_;
  double condition_ = 1.0;
  bool ill_conditioned_ = false;
};

// columns[v][m] is feature v on path m; weights may be empty (uniform).
// Throws RegressionError when the design is singular.
RegressionFit fit_least_squares(const std::vector<std::vector<double>>& columns,
                                std::span<const double> target, std::span<const double> weights,
                                const RegressionOptions& options);

// Fits and returns the fitted values on the same cross-section.
std::vector<double> project(const std::vector<std::vector<double>>& columns,
                            std::span<const double> target, std::span<const double> weights,
                            const RegressionOptions& options, double* condition = nullptr);

}  // namespace volterra
