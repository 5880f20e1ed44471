#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "volterra/adjoint.hpp"
#include "volterra/forward.hpp"

using namespace volterra;

TEST(Girsanov, ZeroVolatilityGivesUnitWeight) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 16), 20, 1);
  for (double k : girsanov_weight(TimeFunction(), w)) EXPECT_EQ(k, 1.0);
}

TEST(Girsanov, ExponentialMartingaleAndDrift) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 32), 100000, 2);
  const std::vector<double> k = girsanov_weight(TimeFunction::constant(0.2), w);
  EXPECT_TRUE(within(mean_estimate(k), 1.0, 3.0));
  std::vector<double> b(w.paths());
  for (std::size_t m = 0; m < w.paths(); ++m) b[m] = w.terminal(m) - 0.2;
  EXPECT_TRUE(within(weighted_mean_estimate(b, k), 0.0, 3.0));
  const ProcessPath kp = girsanov_path(TimeFunction::constant(0.2), w);
  EXPECT_EQ(kp(0, 0), 1.0);
  EXPECT_NEAR(kp(7, 32), k[7], 1e-12);
}

class Deterministic : public ::testing::Test {
protected:
  TimeGrid g{1.0, 512};
  BrownianEnsemble w = sample_brownian(g, 8, 1);
};

TEST_F(Deterministic, ConstantKernelExponential) {
  BsvieSpec s;
  s.b0 = TwoTimeKernel::constant(0.1);
  s.theta = {2.0, 0.0, 0.0};
  const ResolventTable psi = neumann_psi(s.b0, g, 1e-12);
  const AdjointSolution cf = solve_closed_form(s, psi, nullptr, w);
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  EXPECT_NEAR(cf.p(0, 0), 2.0 * std::exp(0.1), 1e-3);
  EXPECT_NEAR(rg.p(0, 0), 2.0 * std::exp(0.1), 1e-3);
  for (std::size_t i = 0; i <= 512; i += 64) EXPECT_NEAR(cf.p(3, i), rg.p(3, i), 1e-3);
  EXPECT_GE(cf.truncation_order, 1u);
}

TEST_F(Deterministic, JumpSource) {
  BsvieSpec s;
  s.b0 = TwoTimeKernel::constant(0.1);
  s.weight = SingularWeight::one;
  s.xi = SingularControl::atoms(g, {{0.5, 0.5}});
  const ResolventTable psi = neumann_psi(s.b0, g, 1e-12);
  const double expect = std::exp(0.1) + 0.5 * std::exp(0.05);
  EXPECT_NEAR(solve_closed_form(s, psi, nullptr, w).p(0, 0), expect, 1e-3);
  EXPECT_NEAR(solve_regression(s, nullptr, w).p(0, 0), expect, 1e-3);
}

TEST_F(Deterministic, RunningSource) {
  BsvieSpec s;
  s.source = 0.5;
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  EXPECT_NEAR(rg.p(0, 0), 1.5, 1e-12);
  EXPECT_NEAR(rg.p(0, 256), 1.25, 1e-12);
}

TEST(Adjoint, TerminalConditionExact) {
  const TimeGrid g(1.0, 20);
  const BrownianEnsemble w = sample_brownian(g, 500, 3);
  BsvieSpec s;
  s.b0 = TwoTimeKernel::exp_decay(0.3, 1.0);
  s.sigma0 = TimeFunction::constant(0.2);
  s.theta = {0.5, 1.0, -0.3};
  const AdjointSolution cf = solve_closed_form(s, neumann_psi(s.b0, g, 1e-12), nullptr, w);
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  for (std::size_t m = 0; m < 500; ++m) {
    EXPECT_EQ(cf.p(m, 20), s.theta(w.terminal(m)));
    EXPECT_EQ(rg.p(m, 20), s.theta(w.terminal(m)));
  }
}

TEST(Adjoint, GaussianShiftUnderQ) {
  const TimeGrid g(1.0, 20);
  const BrownianEnsemble w = sample_brownian(g, 20000, 4);
  BsvieSpec s;
  s.sigma0 = TimeFunction::constant(0.2);
  s.theta = {0.0, 1.0, 0.0};
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  for (std::size_t i : {0u, 5u, 10u, 15u}) {
    const double t = g.node(i);
    std::vector<double> err(w.paths());
    for (std::size_t m = 0; m < w.paths(); ++m) err[m] = rg.p(m, i) - (w.value(m, i) + 0.2 * (1.0 - t));
    const Estimate e = mean_estimate(err);
    EXPECT_NEAR(e.value, 0.0, 3.0 * rg.node_estimate[i].se + 1e-9) << i;
    EXPECT_LT(sample_sd(err), 0.05) << i;
  }
}

TEST(Adjoint, QMartingaleIncrements) {
  const TimeGrid g(1.0, 20);
  const BrownianEnsemble w = sample_brownian(g, 20000, 5);
  BsvieSpec s;
  s.sigma0 = TimeFunction::constant(0.3);
  s.theta = {1.0, 0.5, 0.2};
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  const std::vector<double> k = girsanov_weight(s.sigma0, w);
  // Discrete integrals of F_t-measurable test functions against dp.
  std::vector<double> lin(w.paths(), 0.0), quad(w.paths(), 0.0);
  for (std::size_t m = 0; m < w.paths(); ++m) {
    for (std::size_t i = 0; i < 20; ++i) {
      const double dp = rg.p(m, i + 1) - rg.p(m, i);
      lin[m] += w.value(m, i) * dp;
      quad[m] += (w.value(m, i) * w.value(m, i) - g.node(i)) * dp;
    }
  }
  EXPECT_TRUE(within(weighted_mean_estimate(lin, k), 0.0, 3.0));
  EXPECT_TRUE(within(weighted_mean_estimate(quad, k), 0.0, 3.0));
}

TEST(Adjoint, ClosedFormAndRegressionAgree) {
  const TimeGrid g(1.0, 25);
  const BrownianEnsemble w = sample_brownian(g, 10000, 6);
  BsvieSpec s;
  s.b0 = TwoTimeKernel::exp_decay(0.4, 1.0);
  s.sigma0 = TimeFunction::constant(0.2);
  s.theta = {1.0, 0.3, 0.0};
  s.source = 0.1;
  s.weight = SingularWeight::one;
  s.xi = SingularControl::atoms(g, {{0.4, 0.2}});
  const AdjointSolution cf = solve_closed_form(s, neumann_psi(s.b0, g, 1e-12), nullptr, w);
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  const SolverComparison c = compare_solutions(cf, rg, s.sigma0, w);
  EXPECT_TRUE(c.agrees) << c.worst_ratio;
  EXPECT_EQ(c.difference.size(), 26u);
}

TEST(Adjoint, InverseStateWeightNeedsState) {
  const TimeGrid g(1.0, 8);
  const BrownianEnsemble w = sample_brownian(g, 50, 7);
  BsvieSpec s;
  s.weight = SingularWeight::inverse_state;
  s.xi = SingularControl::atoms(g, {{0.5, 0.1}});
  EXPECT_THROW(solve_regression(s, nullptr, w), std::invalid_argument);
  ProcessPath x(g, 50);
  for (std::size_t m = 0; m < 50; ++m) {
    for (std::size_t i = 0; i <= 8; ++i) x(m, i) = 2.0;
  }
  EXPECT_NEAR(solve_regression(s, &x, w).p(0, 0), 1.05, 1e-12);
}

TEST(QDiagonal, ZeroForDeterministicAdjoint) {
  const TimeGrid g(1.0, 16);
  const BrownianEnsemble w = sample_brownian(g, 2000, 8);
  BsvieSpec s;
  s.b0 = TwoTimeKernel::constant(0.2);
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  const QDiagonal q = estimate_q_diagonal(rg, nullptr, nullptr, w);
  const Estimate e = q.pooled_error([](std::size_t, std::size_t) { return 0.0; });
  EXPECT_NEAR(e.value, 0.0, 3.0 * e.se + 1e-12);
}

TEST(QDiagonal, TerminalValueHasUnitQ) {
  const TimeGrid g(1.0, 16);
  const BrownianEnsemble w = sample_brownian(g, 5000, 9);
  BsvieSpec s;
  s.theta = {0.0, 1.0, 0.0};
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  const QDiagonal q = estimate_q_diagonal(rg, nullptr, nullptr, w);
  EXPECT_TRUE(within(q.pooled_error([](std::size_t, std::size_t) { return 1.0; }), 0.0, 3.0));
}

TEST(QDiagonal, TerminalSquareHasTwiceB) {
  const TimeGrid g(1.0, 16);
  const BrownianEnsemble w = sample_brownian(g, 5000, 10);
  BsvieSpec s;
  s.theta = {0.0, 0.0, 1.0};
  const AdjointSolution rg = solve_regression(s, nullptr, w);
  const QDiagonal q = estimate_q_diagonal(rg, nullptr, nullptr, w);
  const Estimate e = q.pooled_error([&](std::size_t m, std::size_t i) { return 2.0 * w.value(m, i); });
  EXPECT_TRUE(within(e, 0.0, 3.0)) << e.value << " " << e.se;
}
