#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "volterra/brownian.hpp"
#include "volterra/control.hpp"
#include "volterra/forward.hpp"
#include "volterra/kernels.hpp"
#include "volterra/process.hpp"
#include "volterra/regression.hpp"
#include "volterra/stats.hpp"

namespace volterra {

enum class SingularWeight { zero, one, inverse_state };

/// Linear BSVIE with singular drift
///   p(t) = theta + int_t^T {b0(t,s) p(s) + sigma0(s) q(t,s) + c} ds
///          + int_t^T w(s) dxi(s) - int_t^T q(t,s) dB(s),
/// with w = 0, coef or coef/X(s).
struct BsvieSpec {
  TwoTimeKernel b0;
  TimeFunction sigma0;
  TerminalWeight theta;
  SingularWeight weight = SingularWeight::zero;
  double weight_coef = 1.0;
  double source = 0.0;  // the constant c
  std::optional<SingularControl> xi;  // empty means xi = 0
};

struct AdjointOptions {
  RegressionOptions regression;  // degree 2 by default
  bool use_state = true;         // X(t_i) as a feature when X is supplied
  bool use_control = true;       // xi(t_i) as a feature when xi is per path
};

struct AdjointSolution {
  ProcessPath p;
  std::string method;
  std::size_t truncation_order = 0;  // closed form only
  int degree = 0;
  // Per node: Q-mean of p(t_i) with the SE of the regression target.
  std::vector<Estimate> node_estimate;
  std::vector<double> condition;  // largest design condition number per node
  std::vector<std::string> warnings;
  // Fit of p(t_i) on the node features (regression solver, random nodes only).
  std::vector<std::optional<RegressionFit>> fits;
  // Feature layout used by the fits: B, then X (if used), then xi (if used).
  bool state_feature = false;
  bool control_feature = false;
};

// K(T) = exp(sum sigma0(t_j) dB_j - 1/2 sum sigma0(t_j)^2 dt) per path.
std::vector<double> girsanov_weight(const TimeFunction& sigma0, const BrownianEnsemble& noise);
// K(t_i) for all nodes, M x (N+1).
ProcessPath girsanov_path(const TimeFunction& sigma0, const BrownianEnsemble& noise);

// p(t_i) = E_Q[theta (1 + int Psi(t_i,s) ds) + int Psi(t_i,s) R(s) ds + R(t_i) | F_{t_i}]
// with R(s) = int_s^T w dxi + c (T - s). E_Q is the ratio of the regressions
// of (K(T)/K(t_i)) Y and K(T)/K(t_i). `x` may be null unless w = 1/X.
AdjointSolution solve_closed_form(const BsvieSpec& spec, const ResolventTable& psi,
                                  const ProcessPath* x, const BrownianEnsemble& noise,
                                  const AdjointOptions& options = {});

// Backward sweep with trapezoid weights in s (the s = t_i term is implicit):
//   p_i (1 - b0(t_i,t_i) dt/2) = E_Q[theta (1 + b0(t_i,T) dt/2) + sum_{i<j<N} b0(t_i,t_j) p_j dt
//                                    + R(t_i) | F_{t_i}],
// E_Q by least squares weighted with K(T)/K(t_i). Independent of Psi.
AdjointSolution solve_regression(const BsvieSpec& spec, const ProcessPath* x,
                                 const BrownianEnsemble& noise, const AdjointOptions& options = {});

/// Experimental q(t_i, t_i): regression of (p_{i+1} - E[p_{i+1} | F_i]) dB_i / dt
/// on the node features, under P.
struct QDiagonal {
  std::vector<double> fitted;  // M x N
  std::vector<double> raw;     // M x N unregressed products
  std::size_t paths = 0;
  std::size_t steps = 0;

  double operator()(std::size_t path, std::size_t i) const { return fitted[path * steps + i]; }
  // Mean over paths of mean_i (raw - oracle(path, i)), with its SE.
  template <class Oracle>
  Estimate pooled_error(Oracle oracle) const {
    std::vector<double> per_path(paths, 0.0);
    for (std::size_t m = 0; m < paths; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < steps; ++i) s += raw[m * steps + i] - oracle(m, i);
      per_path[m] = s / static_cast<double>(steps);
    }
    return mean_estimate(per_path);
  }
  std::vector<double> node_means() const;
};

QDiagonal estimate_q_diagonal(const AdjointSolution& solution, const ProcessPath* x,
                              const SingularControl* xi, const BrownianEnsemble& noise,
                              const AdjointOptions& options = {});

/// Per-node difference of the Q-means of two solutions against the combined
/// target SE.
struct SolverComparison {
  std::vector<double> difference;     // Q-mean of p_a - p_b per node
  std::vector<double> combined_se;
  std::vector<double> mean_abs_difference;  // diagnostic
  double worst_ratio = 0.0;  // max |difference| / combined SE (SE floored at abs_tol)
  bool agrees = true;
};

SolverComparison compare_solutions(const AdjointSolution& a, const AdjointSolution& b,
                                   const TimeFunction& sigma0, const BrownianEnsemble& noise,
                                   double k = 3.0, double abs_tol = 1e-9);

}  // namespace volterra
