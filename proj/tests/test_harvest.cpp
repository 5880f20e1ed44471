#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "volterra/errors.hpp"
#include "volterra/harvest.hpp"

using namespace volterra;

namespace {

HarvestScenario price_scenario(double theta, double sigma) {
  HarvestScenario sc;
  sc.b0 = TwoTimeKernel::exp_decay(0.3, 1.0);
  sc.sigma0 = TimeFunction::constant(sigma);
  sc.rho = TimeFunction::constant(1.0);
  sc.theta = {theta, 0.0, 0.0};
  return sc;
}

}  // namespace

TEST(PriceMode, RoundTrip) {
  for (PriceMode m : {PriceMode::density_dependent, PriceMode::log, PriceMode::density_independent}) {
    EXPECT_EQ(price_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(price_mode_from_string("linear"), std::invalid_argument);
}

TEST(Scenario, Validation) {
  const TimeGrid g(1.0, 8);
  HarvestScenario sc = price_scenario(1.0, 0.0);
  EXPECT_NO_THROW(sc.validate(g));
  sc.x0 = 0.0;
  EXPECT_THROW(sc.validate(g), std::invalid_argument);
  sc = price_scenario(1.0, 0.0);
  sc.h = TwoTimeKernel::constant(0.0);
  EXPECT_THROW(sc.validate(g), std::invalid_argument);
  sc = price_scenario(1.0, 0.0);
  sc.rho = TimeFunction::constant(-1.0);
  EXPECT_THROW(sc.validate(g), std::invalid_argument);
}

TEST(Barrier, LocalIsPriceOverDiagonal) {
  const TimeGrid g(1.0, 4);
  HarvestScenario sc = price_scenario(1.0, 0.0);
  sc.h = TwoTimeKernel::constant(2.0);
  sc.rho = TimeFunction::exponential(1.0, 1.0);
  const Barrier b = local_barrier(sc, g);
  EXPECT_FALSE(b.nonlocal);
  for (std::size_t i = 0; i <= 4; ++i) EXPECT_DOUBLE_EQ(b(0, i), std::exp(g.node(i)) / 2.0);
}

TEST(Reflected, TrivialObstacle) {
  HarvestScenario sc;
  sc.theta = {2.0, 0.0, 0.0};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 50, 1);
  const ReflectedSolution r = solve_reflected_adjoint(sc, w);
  for (double d : r.xi.raw()) EXPECT_EQ(d, 0.0);
  for (double v : r.p.p.raw()) EXPECT_DOUBLE_EQ(v, 2.0);
}

TEST(Reflected, DeterministicObstacleBindsOnce) {
  HarvestScenario sc;
  sc.theta = {0.4, 0.0, 0.0};
  const TimeGrid g(1.0, 10);
  const BrownianEnsemble w = sample_brownian(g, 5, 2);
  const ReflectedSolution r = solve_reflected_adjoint(sc, w);
  for (std::size_t m = 0; m < 5; ++m) {
    EXPECT_DOUBLE_EQ(r.p.p(m, 10), 0.4);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(r.p.p(m, i), 1.0, 1e-12) << i;
    EXPECT_NEAR(r.xi.total(m), 0.6, 1e-12);
    EXPECT_NEAR(r.xi.increment(m, 9), 0.6, 1e-12);
  }
}

TEST(Reflected, SkorokhodConditionsStochastic) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 25), 4000, 3);
  HarvestScenario sc = price_scenario(0.9, 0.3);
  sc.theta = {0.9, 0.4, 0.0};
  const ReflectedSolution r = solve_reflected_adjoint(sc, w);
  const SkorokhodStats s = skorokhod_stats(r);
  EXPECT_GE(s.min_gap, -1e-12);
  EXPECT_NEAR(s.complementarity.value, 0.0, 1e-12);
  EXPECT_EQ(s.off_barrier_pushes, 0u);
  EXPECT_GT(s.mean_mass, 0.0);
  for (double d : r.xi.raw()) EXPECT_GE(d, 0.0);
}

TEST(Reflected, MinimalPushNotLarger) {
  // Any push leaves p on the barrier exactly: a smaller push would violate feasibility.
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 2000, 4);
  const ReflectedSolution r = solve_reflected_adjoint(price_scenario(0.8, 0.2), w);
  for (std::size_t m = 0; m < w.paths(); ++m) {
    for (std::size_t i = 0; i < 20; ++i) {
      if (r.xi.increment(m, i) > 0.0) EXPECT_NEAR(r.p.p(m, i), r.barrier(m, i), 1e-12);
    }
  }
}

TEST(Reflected, NonlocalBarrierIterationLimit) {
  HarvestScenario sc = price_scenario(0.6, 0.2);
  sc.h = TwoTimeKernel::exp_decay(1.0, 2.0);
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 500, 5);
  ReflectionOptions o;
  o.max_iter = 1;
  o.tol = 1e-14;
  try {
    solve_reflected_adjoint(sc, w, o);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_FALSE(e.history().empty());
  }
  o.max_iter = 200;
  o.tol = 1e-10;
  const ReflectedSolution r = solve_reflected_adjoint(sc, w, o);
  EXPECT_TRUE(r.experimental);
  EXPECT_TRUE(r.barrier.nonlocal);
  EXPECT_LE(r.residual_history.back(), 1e-10);
}

TEST(Density, ZeroCandidateSides) {
  HarvestScenario sc;
  sc.mode = PriceMode::density_dependent;
  sc.theta = {0.3, 0.0, 0.0};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 200, 6);
  const DensityDiagnosis d = diagnose_density_dependent(sc, SingularControl::zero(w.grid()), w);
  ASSERT_EQ(d.lhs.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(d.lhs[i].value, 0.3, 1e-12);
    EXPECT_NEAR(d.rhs[i].value, 1.0, 1e-12);
  }
  // Harvest value X = 1 exceeds the shadow price 0.3, so not harvesting is flagged.
  EXPECT_FALSE(d.report.find("singular_inequality")->pass);
}

TEST(Density, ZeroCandidateConsistentWhenStockIsValuable) {
  HarvestScenario sc;
  sc.mode = PriceMode::log;
  sc.theta = {2.0, 0.0, 0.0};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 200, 7);
  const DensityDiagnosis d = diagnose_density_dependent(sc, SingularControl::zero(w.grid()), w);
  EXPECT_TRUE(d.report.passed());
  EXPECT_NEAR(d.rhs[0].value, 0.0, 1e-12);
}

TEST(Density, RejectsPriceMode) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 4), 10, 8);
  EXPECT_THROW(diagnose_density_dependent(price_scenario(1.0, 0.0), SingularControl::zero(w.grid()), w),
               std::invalid_argument);
}

TEST(Coupled, NoHarvestWhenTerminalValueDominates) {
  HarvestScenario sc;
  sc.mode = PriceMode::density_dependent;
  sc.theta = {3.0, 0.0, 0.0};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 100, 9);
  const CoupledResult r = coupled_fixed_point(sc, w);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  for (double d : r.xi.raw()) EXPECT_EQ(d, 0.0);
}

TEST(Coupled, DampingChangesHistoryAndValidates) {
  HarvestScenario sc;
  sc.mode = PriceMode::density_dependent;
  sc.b0 = TwoTimeKernel::constant(0.2);
  sc.sigma0 = TimeFunction::constant(0.2);
  sc.theta = {0.5, 0.0, 0.0};
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 10), 500, 10);
  CoupledOptions a, b;
  a.damping = 0.0;
  a.max_iter = 5;
  b.damping = 0.5;
  b.max_iter = 5;
  const CoupledResult ra = coupled_fixed_point(sc, w, a);
  const CoupledResult rb = coupled_fixed_point(sc, w, b);
  ASSERT_FALSE(ra.tv_history.empty());
  ASSERT_FALSE(rb.tv_history.empty());
  EXPECT_NE(ra.tv_history, rb.tv_history);
  b.damping = 1.0;
  EXPECT_THROW(coupled_fixed_point(sc, w, b), std::invalid_argument);
  sc.h = TwoTimeKernel::constant(2.0);
  EXPECT_THROW(coupled_fixed_point(sc, w), std::invalid_argument);
}

TEST(Alternatives, ShippedSet) {
  const TimeGrid g(1.0, 20);
  const auto alts = shipped_alternatives(g, AlternativeSpec{}, 0.4);
  EXPECT_GE(alts.size(), 6u);
  EXPECT_EQ(alts.front().first, "zero");
  for (const auto& [name, xi] : alts) {
    for (double d : xi.raw()) EXPECT_GE(d, 0.0) << name;
  }
}

TEST(RunHarvest, PriceModeReportsTournamentAndProbe) {
  const BrownianEnsemble w = sample_brownian(TimeGrid(1.0, 20), 3000, 11);
  const HarvestReport r = run_harvest(price_scenario(0.9, 0.2), w);
  EXPECT_EQ(r.mode, PriceMode::density_independent);
  EXPECT_GE(r.tournament.size(), 7u);
  EXPECT_EQ(r.scaling.size(), 2u);
  EXPECT_GE(r.skorokhod.min_gap, -1e-12);
}
