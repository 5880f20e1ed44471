#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "volterra/adjoint.hpp"
#include "volterra/brownian.hpp"
#include "volterra/control.hpp"
#include "volterra/forward.hpp"
#include "volterra/process.hpp"
#include "volterra/stats.hpp"

namespace volterra {

/// State equation, reward and control set of one control problem.
struct ControlProblem {
  SvieSpec state;
  PerformanceSpec reward;
  ControlSet set;
};

// Adjoint BSVIE of a problem with affine coefficients:
// b0(t,s) = b_x(s,t) (state kernel with arguments swapped), sigma0(s) = sigma_x(s,s),
// source = df0/dx, weight from f1, theta from g. Throws std::invalid_argument
// when the diffusion state kernel depends on its first argument.
BsvieSpec adjoint_spec(const ControlProblem& problem, const SingularControl& xi);

/// Per node and path; nodes 0..N (u at t_N is taken as u_{N-1}).
struct HamiltonianEval {
  ProcessPath h0, h1, hbar0, hbar1;

  double dt_part(std::size_t m, std::size_t i) const { return h0(m, i) + h1(m, i); }
  double dxi_part(std::size_t m, std::size_t i) const { return hbar0(m, i) + hbar1(m, i); }
};

struct HamiltonianOptions {
  AdjointOptions adjoint;
  // Allow the regression-based estimate of E[D_t p(s) | F_t] when the
  // diffusion depends on its first time argument.
  bool experimental_malliavin = false;
};

// q_diag may be null when the diffusion does not depend on (x, u) at the
// diagonal, i.e. when q never multiplies a nonzero coefficient.
HamiltonianEval eval_hamiltonian(const ControlProblem& problem, const ProcessPath& x,
                                 const RegularControl& u, const SingularControl& xi,
                                 const AdjointSolution& p, const QDiagonal* q_diag,
                                 const BrownianEnsemble& noise, const HamiltonianOptions& options = {});

struct CheckRow {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string note;
};

struct NodeGap {
  double t = 0.0;
  Estimate gap;       // mean over paths of G(t_i)
  Estimate positive;  // mean over paths of G(t_i)^+
};

struct MpReport {
  std::vector<CheckRow> rows;
  std::vector<NodeGap> gaps;
  std::vector<std::string> notes;

  bool passed() const;
  const CheckRow* find(const std::string& name) const;
};

struct CheckTolerances {
  double k_se = 3.0;       // statistical comparisons at k standard errors
  double abs_tol = 1e-9;   // floor when the SE vanishes
};

// G(t_i) = E[f1(t_i, X_i) + p_i h(t_i,t_i) + sum_{j>i} p_j dh/dt(t_j,t_i) dt | F_{t_i}],
// with h as signed in the state equation. Only the future sum is regressed.
// Returns M x N.
std::vector<double> singular_gap(const ControlProblem& problem, const ProcessPath& x,
                                 const SingularControl& xi, const AdjointSolution& p,
                                 const BrownianEnsemble& noise, const AdjointOptions& options = {});

// Inequality G <= 0 (per node, k SE) and complementarity sum_i G_i dxi_i = 0.
// Uses p and X only (never q).
MpReport check_singular_conditions(const ControlProblem& problem, const ProcessPath& x,
                                   const SingularControl& xi, const AdjointSolution& p,
                                   const BrownianEnsemble& noise,
                                   const CheckTolerances& tol = {}, const AdjointOptions& options = {});

struct Bump {
  double start = 0.0;
  double width = 0.0;
  double eta = 1.0;
};

struct GradientCheck {
  Bump bump;
  Estimate fd;            // dJ/dlambda by central differences on common noise
  Estimate hamiltonian;   // E[sum_i E[dH/du | F_i] v_i dt]
  Estimate difference;    // paired fd - hamiltonian
  bool consistent = true;
};

// How dH/du is discretised. `scheme` differentiates the Euler scheme exactly
// (pathwise discrete adjoint, then E[. | F_t_i] by regression), so its mean
// matches finite differences of the simulated J to Monte Carlo error.
// `continuous` evaluates the Hamiltonian with the regression adjoint p, which
// agrees only up to O(dt).
enum class GradientForm { scheme, continuous };

struct StationarityOptions {
  GradientForm form = GradientForm::scheme;
  double lambda = 1e-3;
  CheckTolerances tol;
  HamiltonianOptions hamiltonian;
};

// dH/du(t_i) per path and node (M x N) before conditioning.
std::vector<double> hamiltonian_u_gradient(const ControlProblem& problem, const ProcessPath& x,
                                           const RegularControl& u, const AdjointSolution& p,
                                           const QDiagonal* q_diag, const BrownianEnsemble& noise,
                                           const HamiltonianOptions& options = {});

// Pathwise dJ/du_i / dt of the Euler scheme (M x N): running_du(u_i) plus
// sum_{k>i} Lambda_k (b_u(t_k,t_i) + sigma_u(t_k,t_i) dB_i / dt), where
// Lambda = dJ/dX is propagated backwards through the scheme.
std::vector<double> scheme_u_gradient(const ControlProblem& problem, const ProcessPath& x,
                                      const RegularControl& u, const SingularControl& xi,
                                      const BrownianEnsemble& noise);

struct StationarityReport {
  MpReport report;
  std::vector<Estimate> node_gradient;  // E[dH/du | F_i] averaged over paths
  std::vector<GradientCheck> bumps;
};

// Solves the adjoint by regression on the given noise, then runs the nodewise
// stationarity test (one-sided where u sits on the boundary of U) and the bump
// consistency test for every bump.
StationarityReport check_stationarity_u(const ControlProblem& problem, const RegularControl& u,
                                        const SingularControl& xi, const BrownianEnsemble& noise,
                                        const std::vector<Bump>& bumps,
                                        const StationarityOptions& options = {});

struct PolicyRow {
  std::string name;
  Estimate j;
  Estimate advantage;  // J(candidate) - J(alternative), paired
  bool pass = true;    // advantage >= -k SE - abs_tol
};

std::vector<PolicyRow> compare_policies(
    const ControlProblem& problem, const RegularControl& u, const SingularControl& candidate,
    const std::vector<std::pair<std::string, SingularControl>>& alternatives,
    const BrownianEnsemble& noise, const CheckTolerances& tol = {});

// J((a+b)/2) - (J(a) + J(b))/2 on common noise; nonnegative within noise
// when J is concave along the segment. Diagnostic only.
Estimate concavity_probe(const ControlProblem& problem, const RegularControl& u,
                         const SingularControl& a, const SingularControl& b,
                         const BrownianEnsemble& noise);

}  // namespace volterra
