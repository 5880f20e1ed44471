#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "volterra/malliavin.hpp"

using namespace volterra;

namespace {

const TimeGrid kGrid(1.0, 20);

}  // namespace

TEST(Directional, LinearFunctionalIsExact) {
  const BrownianEnsemble w = sample_brownian(kGrid, 50, 1);
  std::vector<double> gamma(20);
  double integral = 0.0;
  for (std::size_t j = 0; j < 20; ++j) {
    gamma[j] = std::sin(0.3 * j);
    integral += gamma[j] * kGrid.dt();
  }
  for (double d : directional_derivative(PathFunctional::terminal_value(), gamma, 1e-3, w)) {
    EXPECT_NEAR(d, integral, 1e-10);
  }
}

TEST(Directional, QuadraticCentralDifferenceExact) {
  const BrownianEnsemble w = sample_brownian(kGrid, 50, 2);
  const std::vector<double> gamma(20, 1.0);
  const std::vector<double> d = directional_derivative(PathFunctional::terminal_square(), gamma, 1e-2, w);
  for (std::size_t m = 0; m < 50; ++m) EXPECT_NEAR(d[m], 2.0 * w.terminal(m), 1e-9);
}

TEST(Directional, ZeroDirection) {
  const BrownianEnsemble w = sample_brownian(kGrid, 10, 3);
  const std::vector<double> gamma(20, 0.0);
  for (double d : directional_derivative(PathFunctional::terminal_square(), gamma, 1e-3, w)) {
    EXPECT_EQ(d, 0.0);
  }
}

TEST(Hida, TerminalValueIsOne) {
  const BrownianEnsemble w = sample_brownian(kGrid, 10, 4);
  for (double d : hida_derivative_profile(PathFunctional::terminal_value(), 1e-4, w)) {
    EXPECT_NEAR(d, 1.0, 1e-6);
  }
}

TEST(Hida, WienerIntegralRecoversIntegrand) {
  const TimeFunction phi = TimeFunction::exponential(1.0, -0.5);
  const BrownianEnsemble w = sample_brownian(kGrid, 5, 5);
  const std::vector<double> d = hida_derivative_profile(PathFunctional::wiener_integral(phi, kGrid), 1e-4, w);
  for (std::size_t m = 0; m < 5; ++m) {
    for (std::size_t j = 0; j < 20; ++j) EXPECT_NEAR(d[m * 20 + j], phi(kGrid.node(j)), 1e-6);
  }
}

TEST(Hida, ChainRule) {
  const BrownianEnsemble w = sample_brownian(kGrid, 20, 6);
  const PathFunctional inner = PathFunctional::wiener_integral(TimeFunction::exponential(1.0, 1.0), kGrid);
  const PathFunctional f = PathFunctional::composite([](double v) { return std::sin(v); },
                                                     [](double v) { return std::cos(v); }, inner, "sin");
  const std::vector<double> d = hida_derivative_profile(f, 1e-4, w);
  for (std::size_t m = 0; m < 20; ++m) {
    const double outer = std::cos(inner(w.values(m)));
    for (std::size_t j = 0; j < 20; ++j) {
      EXPECT_NEAR(d[m * 20 + j], outer * std::exp(kGrid.node(j)), 1e-6);
      EXPECT_NEAR(d[m * 20 + j], f.derivative(j, w.values(m)), 1e-6);
    }
  }
}

TEST(Duality, TerminalValueAgainstOne) {
  const BrownianEnsemble w = sample_brownian(kGrid, 50000, 7);
  const DualityResult d = duality_check(PathFunctional::terminal_value(),
                                        AdaptedIntegrand::deterministic(TimeFunction::constant(1.0), kGrid), w);
  EXPECT_NEAR(d.rhs.value, 1.0, 1e-12);
  EXPECT_TRUE(within(d.lhs, 1.0, 3.0));
  EXPECT_TRUE(d.agrees());
}

TEST(Duality, TerminalSquareOddMoments) {
  const BrownianEnsemble w = sample_brownian(kGrid, 50000, 8);
  const DualityResult d = duality_check(PathFunctional::terminal_square(),
                                        AdaptedIntegrand::deterministic(TimeFunction::constant(1.0), kGrid), w);
  EXPECT_TRUE(within(d.lhs, 0.0, 3.0));
  EXPECT_TRUE(within(d.rhs, 0.0, 3.0));
  EXPECT_TRUE(d.agrees());
}

TEST(Duality, ConstantFunctional) {
  const BrownianEnsemble w = sample_brownian(kGrid, 1000, 9);
  const DualityResult d = duality_check(PathFunctional::constant(2.0), AdaptedIntegrand::path_value(), w);
  EXPECT_EQ(d.rhs.value, 0.0);
  EXPECT_TRUE(d.agrees());
}

TEST(Duality, RegressionConditionalForComposite) {
  const BrownianEnsemble w = sample_brownian(kGrid, 50000, 10);
  const PathFunctional f = PathFunctional::composite([](double v) { return v * v * v; },
                                                     [](double v) { return 3.0 * v * v; },
                                                     PathFunctional::terminal_value(), "cube");
  const DualityResult d = duality_check(f, AdaptedIntegrand::deterministic(TimeFunction::constant(1.0), kGrid), w);
  EXPECT_FALSE(d.analytic_conditional);
  EXPECT_TRUE(d.agrees());
}

TEST(Duality, RejectsAnticipatingIntegrand) {
  const BrownianEnsemble w = sample_brownian(kGrid, 10, 11);
  EXPECT_THROW(duality_check(PathFunctional::terminal_value(), AdaptedIntegrand::terminal_lookahead(), w),
               std::invalid_argument);
}

TEST(Fubini, DeterministicIdentities) {
  const TimeGrid g(2.0, 30);
  ProcessPath p(g, 4);
  for (std::size_t m = 0; m < 4; ++m) {
    for (std::size_t i = 0; i <= 30; ++i) p(m, i) = std::cos(0.2 * i * (m + 1));
  }
  const TwoTimeKernel k = TwoTimeKernel::poly({0.3, -1.0, 2.0});
  const SingularControl xi = SingularControl::atoms(g, {{0.4, 0.5}, {1.2, 2.0}});
  const FubiniReport r = fubini_checks(p, k, xi);
  EXPECT_LE(r.identity1, 1e-12);
  EXPECT_LE(r.identity2, 1e-12);
  EXPECT_GT(r.identity2_outer_dxi_gap, 1e-6);
}

TEST(Fubini, StochasticIdentityWithBrownianIntegrand) {
  const BrownianEnsemble w = sample_brownian(kGrid, 50000, 12);
  const ProcessFunctional p = [](std::size_t i, std::span<const double> b) { return b[i]; };
  const StochasticFubiniResult r = fubini_stochastic(p, TwoTimeKernel::exp_decay(1.0, 0.5), w);
  EXPECT_TRUE(r.agrees());
}
