#include "volterra/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "volterra/errors.hpp"
#include "volterra/stats.hpp"

namespace volterra {

namespace {

void enumerate_exponents(std::size_t vars, int degree, std::vector<int>& current, std::size_t v,
                         int remaining, std::vector<std::vector<int>>& out) {
  if (v == vars) {
    out.push_back(current);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    current[v] = e;
    enumerate_exponents(vars, degree, current, v + 1, remaining - e, out);
  }
  current[v] = 0;
}

}  // namespace

double RegressionFit::predict(std::span<const double> features) const {
  double z[8];
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    z[k] = (features[kept_[k]] - centre_[k]) / scale_[k];
  }
  double y = 0.0;
  for (std::size_t b = 0; b < exponents_.size(); ++b) {
    double phi = 1.0;
    for (std::size_t k = 0; k < kept_.size(); ++k) {
      for (int e = 0; e < exponents_[b][k]; ++e) phi *= z[k];
    }
    y += coef_[b] * phi;
  }
  return y;
}

double RegressionFit::derivative(std::span<const double> features, std::size_t var) const {
  std::size_t slot = kept_.size();
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    if (kept_[k] == var) slot = k;
  }
  if (slot == kept_.size()) return 0.0;
  double z[8];
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    z[k] = (features[kept_[k]] - centre_[k]) / scale_[k];
  }
  double dy = 0.0;
  for (std::size_t b = 0; b < exponents_.size(); ++b) {
    const int e_slot = exponents_[b][slot];
    if (e_slot == 0) continue;
    double phi = static_cast<double>(e_slot);
    for (std::size_t k = 0; k < kept_.size(); ++k) {
      const int e = k == slot ? e_slot - 1 : exponents_[b][k];
      for (int j = 0; j < e; ++j) phi *= z[k];
    }
    dy += coef_[b] * phi;
  }
  return dy / scale_[slot];
}

RegressionFit fit_least_squares(const std::vector<std::vector<double>>& columns,
                                std::span<const double> target, std::span<const double> weights,
                                const RegressionOptions& options) {
  const std::size_t m = target.size();
  if (m == 0) throw std::invalid_argument("fit_least_squares: empty cross-section");
  if (columns.size() > 8) throw std::invalid_argument("fit_least_squares: at most 8 features");
  if (!weights.empty() && weights.size() != m) {
    throw std::invalid_argument("fit_least_squares: weight size mismatch");
  }
  if (options.degree < 0) throw std::invalid_argument("fit_least_squares: negative degree");

  RegressionFit fit;
  fit.vars_ = columns.size();
  // Orthonormal directions of the kept standardised features; a feature that
  // is (numerically) affine in earlier ones adds nothing and is dropped.
  std::vector<std::vector<double>> basis;
  std::vector<double> r(m);
  for (std::size_t v = 0; v < columns.size(); ++v) {
    if (columns[v].size() != m) throw std::invalid_argument("fit_least_squares: ragged features");
    const double mu = mean(columns[v]);
    const double sd = sample_sd(columns[v]);
    if (!(sd > 1e-12 * (1.0 + std::abs(mu)))) continue;
    for (std::size_t p = 0; p < m; ++p) r[p] = (columns[v][p] - mu) / sd;
    for (const std::vector<double>& q : basis) {
      double dot = 0.0;
      for (std::size_t p = 0; p < m; ++p) dot += r[p] * q[p];
      for (std::size_t p = 0; p < m; ++p) r[p] -= dot * q[p];
    }
    double norm2 = 0.0;
    for (double x : r) norm2 += x * x;
    if (norm2 <= 1e-10 * static_cast<double>(m)) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : r) x *= inv;
    basis.push_back(r);
    fit.kept_.push_back(v);
    fit.centre_.push_back(mu);
    fit.scale_.push_back(sd);
  }
  const std::size_t kept = fit.kept_.size();
  std::vector<int> current(kept, 0);
  enumerate_exponents(kept, options.degree, current, 0, options.degree, fit.exponents_);
  const std::size_t nb = fit.exponents_.size();

  Eigen::MatrixXd phi(m, nb);
  std::vector<double> z(kept);
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t k = 0; k < kept; ++k) {
      z[k] = (columns[fit.kept_[k]][p] - fit.centre_[k]) / fit.scale_[k];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      double val = 1.0;
      for (std::size_t k = 0; k < kept; ++k) {
        for (int e = 0; e < fit.exponents_[b][k]; ++e) val *= z[k];
      }
      phi(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)) = val;
    }
  }
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(m));
  Eigen::MatrixXd weighted = phi;
  if (!weights.empty()) {
    for (std::size_t p = 0; p < m; ++p) {
      weighted.row(static_cast<Eigen::Index>(p)) *= weights[p];
    }
  }
  const Eigen::MatrixXd gram = weighted.transpose() * phi;
  const Eigen::VectorXd rhs = weighted.transpose() * y;

  // Jacobi-scaled Gram, so the condition number reflects the basis and not
  // the column norms.
  Eigen::VectorXd d = gram.diagonal();
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (!(d(k) > 0.0)) throw RegressionError("regression: zero basis column (too few paths?)");
    d(k) = 1.0 / std::sqrt(d(k));
  }
  const Eigen::MatrixXd scaled = d.asDiagonal() * gram * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  fit.condition_ = lmin > 0.0 ? std::sqrt(lmax / lmin) : INFINITY;
  if (!(fit.condition_ < options.singular_condition)) {
    std::ostringstream os;
    os << "regression: singular design (condition number " << fit.condition_ << ", "
       << m << " paths, " << nb << " basis functions)";
    throw RegressionError(os.str());
  }
  fit.ill_conditioned_ = fit.condition_ > options.warn_condition;

  const Eigen::VectorXd srhs = d.asDiagonal() * rhs;
  const Eigen::VectorXd sol =
      eig.eigenvectors() * (lambda.cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * srhs));
  const Eigen::VectorXd coef = d.asDiagonal() * sol;
  fit.coef_.assign(coef.data(), coef.data() + coef.size());
  return fit;
}

std::vector<double> project(const std::vector<std::vector<double>>& columns,
                            std::span<const double> target, std::span<const double> weights,
                            const RegressionOptions& options, double* condition) {
  const RegressionFit fit = fit_least_squares(columns, target, weights, options);
  if (condition) *condition = fit.condition_number();
  std::vector<double> out(target.size());
  std::vector<double> f(columns.size());
  for (std::size_t p = 0; p < target.size(); ++p) {
    for (std::size_t v = 0; v < columns.size(); ++v) f[v] = columns[v][p];
    out[p] = fit.predict(f);
  }
  return out;
}

}  // namespace volterra
