#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "volterra/harvest.hpp"
#include "volterra/maxprinciple.hpp"

using namespace volterra;

namespace {

// b = u, sigma = 1, f0 = -u^2/2, g(x) = x, harvesting with price rho:
// p = 1, u* = 1, G = rho - 1.
ControlProblem lq(double rho) {
  ControlProblem p;
  p.state.phi = TimeFunction::constant(0.0);
  p.state.drift.control = TwoTimeKernel::constant(1.0);
  p.state.diffusion.shift = TwoTimeKernel::constant(1.0);
  p.state.singular = TwoTimeKernel::constant(-1.0);
  p.reward.f0_u2 = -0.5;
  p.reward.f1 = SingularRewardKind::price;
  p.reward.rho = TimeFunction::constant(rho);
  return p;
}

MpReport singular_report(const ControlProblem& p, const SingularControl& xi, const BrownianEnsemble& w) {
  const RegularControl u = RegularControl::constant(w.grid(), {}, 1.0);
  const ProcessPath x = simulate(p.state, u, xi, w);
  const AdjointSolution adj = solve_regression(adjoint_spec(p, xi), &x, w);
  return check_singular_conditions(p, x, xi, adj, w);
}

}  // namespace

TEST(AdjointSpec, MapsProblemToBsvie) {
  ControlProblem p;
  p.state.drift.state = TwoTimeKernel::exp_decay(0.3, 1.0);
  p.state.diffusion.state = TwoTimeKernel::constant(0.2);
  p.reward.f0_x = 0.4;
  p.reward.f1 = SingularRewardKind::linear;
  p.reward.theta = {2.0, 0.0, 0.0};
  const TimeGrid g(1.0, 4);
  const BsvieSpec s = adjoint_spec(p, SingularControl::zero(g));
  EXPECT_DOUBLE_EQ(s.b0(0.25, 0.75), p.state.drift.state(0.75, 0.25));
  EXPECT_DOUBLE_EQ(s.sigma0(0.5), 0.2);
  EXPECT_EQ(s.source, 0.4);
  EXPECT_EQ(s.weight, SingularWeight::one);
  EXPECT_EQ(s.theta.c0, 2.0);
}

TEST(AdjointSpec, RejectsTimeDependentDiffusion) {
  ControlProblem p;
  p.state.diffusion.state = TwoTimeKernel::exp_decay(0.2, 1.0);
  EXPECT_THROW(adjoint_spec(p, SingularControl::zero(TimeGrid(1.0, 4))), std::invalid_argument);
}

TEST(Hamiltonian, ZeroProblemGivesZero) {
  const TimeGrid g(1.0, 8);
  const BrownianEnsemble w = sample_brownian(g, 20, 1);
  ControlProblem p;
  p.state.phi = TimeFunction::constant(0.0);
  p.reward.theta = {0.0, 0.0, 0.0};
  const RegularControl u = RegularControl::constant(g, {}, 0.0);
  const SingularControl xi = SingularControl::zero(g);
  const ProcessPath x = simulate(p.state, u, xi, w);
  const AdjointSolution adj = solve_regression(adjoint_spec(p, xi), &x, w);
  const HamiltonianEval h = eval_hamiltonian(p, x, u, xi, adj, nullptr, w);
  for (const ProcessPath* piece : {&h.h0, &h.h1, &h.hbar0, &h.hbar1}) {
    for (double v : piece->raw()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Hamiltonian, HarvestScenarioSinglePath) {
  const TimeGrid g(1.0, 10);
  const BrownianEnsemble w = sample_brownian(g, 1, 2);
  HarvestScenario sc;
  sc.b0 = TwoTimeKernel::exp_decay(0.3, 1.0);
  sc.rho = TimeFunction::constant(1.0);
  sc.theta = {1.2, 0.0, 0.0};
  const ControlProblem p = sc.problem(g);
  const RegularControl u = RegularControl::constant(g, {}, 0.0);
  const SingularControl xi = SingularControl::zero(g);
  const ProcessPath x = simulate(p.state, u, xi, w);
  const AdjointSolution adj = solve_regression(adjoint_spec(p, xi), &x, w);
  const HamiltonianEval h = eval_hamiltonian(p, x, u, xi, adj, nullptr, w);
  for (std::size_t i = 0; i <= 10; ++i) {
    // rho - h p(t); the dh/ds term vanishes for constant h.
    EXPECT_NEAR(h.dxi_part(0, i), 1.0 - adj.p(0, i), 1e-14) << i;
    EXPECT_EQ(h.hbar1(0, i), 0.0);
    EXPECT_NEAR(h.h0(0, i), adj.p(0, i) * 0.3 * x(0, i), 1e-14);
  }
  EXPECT_EQ(h.h1(0, 10), 0.0);
}

TEST(Hamiltonian, TerminalIntegralsVanish) {
  const TimeGrid g(1.0, 10);
  const BrownianEnsemble w = sample_brownian(g, 30, 3);
  ControlProblem p;
  p.state.drift.state = TwoTimeKernel::exp_decay(0.5, 1.0);
  p.state.singular = TwoTimeKernel::exp_decay(-1.0, 0.5);
  const RegularControl u = RegularControl::constant(g, {}, 0.0);
  const SingularControl xi = SingularControl::zero(g);
  const ProcessPath x = simulate(p.state, u, xi, w);
  const AdjointSolution adj = solve_regression(adjoint_spec(p, xi), &x, w);
  const HamiltonianEval h = eval_hamiltonian(p, x, u, xi, adj, nullptr, w);
  for (std::size_t m = 0; m < 30; ++m) {
    EXPECT_EQ(h.h1(m, 10), 0.0);
    EXPECT_EQ(h.hbar1(m, 10), 0.0);
  }
  EXPECT_NE(h.h1(0, 0), 0.0);
}

TEST(Hamiltonian, DiffusionControlNeedsQ) {
  const TimeGrid g(1.0, 4);
  const BrownianEnsemble w = sample_brownian(g, 30, 3);
  ControlProblem p;
  p.state.diffusion.control = TwoTimeKernel::constant(1.0);
  const RegularControl u = RegularControl::constant(g, {}, 0.0);
  const SingularControl xi = SingularControl::zero(g);
  const ProcessPath x = simulate(p.state, u, xi, w);
  const AdjointSolution adj = solve_regression(adjoint_spec(p, xi), &x, w);
  EXPECT_THROW(eval_hamiltonian(p, x, u, xi, adj, nullptr, w), std::invalid_argument);
}

TEST(SingularChecks, ZeroControlWithNegativeGap) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 2000, 4);
  const MpReport r = singular_report(lq(0.5), SingularControl::zero(w.grid()), w);
  EXPECT_TRUE(r.passed());
  ASSERT_NE(r.find("complementarity"), nullptr);
  EXPECT_EQ(r.find("complementarity")->value, 0.0);
  ASSERT_EQ(r.gaps.size(), 20u);
  EXPECT_NEAR(r.gaps[3].gap.value, -0.5, 1e-12);
  EXPECT_EQ(r.find("no such row"), nullptr);
}

TEST(SingularChecks, OverharvestingFlagged) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 2000, 5);
  const MpReport r = singular_report(lq(0.5), SingularControl::atoms(w.grid(), {{0.3, 1.0}}), w);
  EXPECT_FALSE(r.find("complementarity")->pass);
  EXPECT_TRUE(r.find("singular_inequality")->pass);
}

TEST(SingularChecks, PositiveGapFlagged) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 2000, 6);
  const MpReport r = singular_report(lq(1.5), SingularControl::zero(w.grid()), w);
  EXPECT_FALSE(r.find("singular_inequality")->pass);
  EXPECT_NEAR(r.find("singular_inequality")->value, 0.5, 1e-12);
}

TEST(SingularChecks, NoteDisclaimsOptimality) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 200, 6);
  const MpReport r = singular_report(lq(0.5), SingularControl::zero(w.grid()), w);
  bool found = false;
  for (const std::string& n : r.notes) found = found || n.find("not a certificate") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Stationarity, OptimalControlPasses) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 5000, 7);
  const StationarityReport r = check_stationarity_u(lq(0.5), RegularControl::constant(w.grid(), {}, 1.0),
                                                    SingularControl::zero(w.grid()), w,
                                                    {{0.2, 0.1, 1.0}, {0.5, 0.2, -1.0}});
  EXPECT_TRUE(r.report.passed());
  for (const Estimate& e : r.node_gradient) EXPECT_NEAR(e.value, 0.0, 1e-12);
  for (const GradientCheck& c : r.bumps) EXPECT_NEAR(c.fd.value, 0.0, 1e-6);
}

TEST(Stationarity, ZeroControlFlagged) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 5000, 8);
  const StationarityReport r = check_stationarity_u(lq(0.5), RegularControl::constant(w.grid(), {}, 0.0),
                                                    SingularControl::zero(w.grid()), w, {});
  EXPECT_FALSE(r.report.find("stationarity_u")->pass);
  for (const Estimate& e : r.node_gradient) EXPECT_NEAR(e.value, 1.0, 1e-12);
}

TEST(Stationarity, ContinuousFormAgreesOnLq) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 2000, 9);
  StationarityOptions o;
  o.form = GradientForm::continuous;
  const StationarityReport r = check_stationarity_u(lq(0.5), RegularControl::constant(w.grid(), {}, 0.0),
                                                    SingularControl::zero(w.grid()), w, {}, o);
  for (const Estimate& e : r.node_gradient) EXPECT_NEAR(e.value, 1.0, 1e-9);
}

TEST(Stationarity, BoundaryIsOneSided) {
  ControlProblem p = lq(0.5);
  p.set = {0.0, 0.5};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 2000, 10);
  // At u = 0.5 = hi the gradient 0.5 points outward, which is allowed; the bump points inward.
  const StationarityReport r = check_stationarity_u(p, RegularControl::constant(w.grid(), p.set, 0.5),
                                                    SingularControl::zero(w.grid()), w, {{0.2, 0.1, -1.0}});
  const CheckRow* row = r.report.find("stationarity_u");
  EXPECT_TRUE(row->pass);
  EXPECT_NE(row->note.find("one-sided"), std::string::npos);
  EXPECT_NE(r.report.rows.back().note.find("one-sided"), std::string::npos);
}

TEST(Stationarity, ZeroBumpGivesZeroDerivative) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 500, 11);
  const StationarityReport r = check_stationarity_u(lq(0.5), RegularControl::constant(w.grid(), {}, 0.3),
                                                    SingularControl::zero(w.grid()), w, {{0.2, 0.1, 0.0}});
  EXPECT_EQ(r.bumps[0].fd.value, 0.0);
  EXPECT_EQ(r.bumps[0].fd.se, 0.0);
}

TEST(Stationarity, GradientConsistencyWithMemory) {
  ControlProblem p;
  p.state.drift.state = TwoTimeKernel::exp_decay(0.3, 1.0);
  p.state.drift.control = TwoTimeKernel::exp_decay(0.5, 2.0);
  p.state.diffusion.state = TwoTimeKernel::constant(0.2);
  p.reward.f0_x = 0.1;
  p.reward.f0_u2 = -0.5;
  p.reward.theta = {1.0, 0.2, 0.0};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 30), 4000, 12);
  std::vector<Bump> bumps;
  for (double s : {0.2, 0.5, 0.7}) {
    for (double eta : {1.0, -1.0}) bumps.push_back({s, 0.1, eta});
  }
  const StationarityReport r =
      check_stationarity_u(p, RegularControl::constant(w.grid(), {}, 0.3), SingularControl::zero(w.grid()), w, bumps);
  ASSERT_EQ(r.bumps.size(), 6u);
  for (const GradientCheck& c : r.bumps) EXPECT_TRUE(c.consistent) << c.bump.start;
}

TEST(SchemeGradient, MatchesFiniteDifferencePerPath) {
  ControlProblem p;
  p.state.drift.state = TwoTimeKernel::exp_decay(0.3, 1.0);
  p.state.drift.control = TwoTimeKernel::constant(0.7);
  p.state.diffusion.state = TwoTimeKernel::constant(0.2);
  p.state.diffusion.control = TwoTimeKernel::constant(0.1);
  p.reward.f0_u = 0.2;
  p.reward.f0_u2 = -0.5;
  const TimeGrid g(1.0, 8);
  const BrownianEnsemble w = sample_brownian(g, 5, 13);
  const RegularControl u = RegularControl::constant(g, {}, 0.3);
  const SingularControl xi = SingularControl::zero(g);
  const ProcessPath x = simulate(p.state, u, xi, w);
  const std::vector<double> grad = scheme_u_gradient(p, x, u, xi, w);
  const double lam = 1e-5;
  for (std::size_t i = 0; i < 8; ++i) {
    std::vector<double> e(8, 0.0);
    e[i] = 1.0;
    const RegularControl v = RegularControl::deterministic(g, {}, e);
    const RegularControl up = u.plus(lam, v), dn = u.plus(-lam, v);
    const JEstimate jp = evaluate_J(p.reward, simulate(p.state, up, xi, w), up, xi, &w);
    const JEstimate jm = evaluate_J(p.reward, simulate(p.state, dn, xi, w), dn, xi, &w);
    for (std::size_t m = 0; m < 5; ++m) {
      const double fd = (jp.per_path[m] - jm.per_path[m]) / (2.0 * lam) / g.dt();
      EXPECT_NEAR(grad[m * 8 + i], fd, 1e-6) << m << "," << i;
    }
  }
}

TEST(Policies, SelfComparisonIsZero) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 500, 14);
  const ControlProblem p = lq(0.5);
  const RegularControl u = RegularControl::constant(w.grid(), {}, 1.0);
  const SingularControl xi = SingularControl::atoms(w.grid(), {{0.3, 0.2}});
  const std::vector<PolicyRow> rows = compare_policies(p, u, xi, {{"same", xi}}, w);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].name, "candidate");
  EXPECT_EQ(rows[1].advantage.value, 0.0);
  EXPECT_EQ(rows[1].advantage.se, 0.0);
  EXPECT_TRUE(rows[1].pass);
}

TEST(Policies, ZeroBeatsHarvestingBelowCost) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 500, 15);
  const RegularControl u = RegularControl::constant(w.grid(), {}, 1.0);
  const std::vector<PolicyRow> rows = compare_policies(
      lq(0.5), u, SingularControl::zero(w.grid()), {{"atom", SingularControl::atoms(w.grid(), {{0.5, 1.0}})}}, w);
  EXPECT_NEAR(rows[1].advantage.value, 0.5, 1e-12);
}

TEST(Concavity, LinearProblemProbeVanishes) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 300, 16);
  const RegularControl u = RegularControl::constant(w.grid(), {}, 1.0);
  const Estimate e = concavity_probe(lq(0.5), u, SingularControl::zero(w.grid()),
                                     SingularControl::atoms(w.grid(), {{0.5, 1.0}}), w);
  EXPECT_NEAR(e.value, 0.0, 1e-12);
}
