#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "volterra/brownian.hpp"
#include "volterra/control.hpp"
#include "volterra/errors.hpp"
#include "volterra/grid.hpp"
#include "volterra/io.hpp"
#include "volterra/parallel.hpp"
#include "volterra/random.hpp"
#include "volterra/regression.hpp"
#include "volterra/stats.hpp"

using namespace volterra;

TEST(Grid, UniformNodes) {
  const TimeGrid g(1.0, 4);
  EXPECT_EQ(g.nodes(), (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
}

TEST(Grid, SingleStep) {
  const TimeGrid g(2.0, 1);
  EXPECT_EQ(g.nodes(), (std::vector<double>{0.0, 2.0}));
}

TEST(Grid, RejectsBadArguments) {
  EXPECT_THROW(TimeGrid(0.0, 10), std::invalid_argument);
  EXPECT_THROW(TimeGrid(-1.0, 10), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
  EXPECT_THROW(TimeGrid(NAN, 4), std::invalid_argument);
}

TEST(Grid, TerminalNodeIsExact) {
  const TimeGrid g(0.3, 7);
  EXPECT_EQ(g.node(7), 0.3);
}

TEST(Grid, IndexOf) {
  const TimeGrid g(1.0, 4);
  EXPECT_EQ(g.index_of(0.5), 2u);
  EXPECT_EQ(g.index_of(1.0), 4u);
  EXPECT_THROW(g.index_of(0.3), std::invalid_argument);
  EXPECT_THROW(g.index_of(1.5), std::invalid_argument);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
  CounterStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int k = 0; k < 100; ++k) {
    const std::uint64_t va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
    EXPECT_NE(va, d.next_u64());
  }
}

TEST(Random, UniformInOpenInterval) {
  CounterStream s(7, 3);
  for (int k = 0; k < 100000; ++k) {
    const double u = s.next_uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Random, NormalMoments) {
  CounterStream s(1, 0);
  std::vector<double> z(200000);
  for (double& v : z) v = s.next_normal();
  const Estimate m = mean_estimate(z);
  EXPECT_TRUE(within(m, 0.0, 4.0));
  EXPECT_NEAR(sample_sd(z), 1.0, 0.01);
}

TEST(Brownian, SameSeedSameEnsemble) {
  const TimeGrid g(1.0, 16);
  const BrownianEnsemble a = sample_brownian(g, 50, 9);
  const BrownianEnsemble b = sample_brownian(g, 50, 9);
  EXPECT_EQ(a.raw_increments(), b.raw_increments());
  const BrownianEnsemble c = sample_brownian(g, 50, 10);
  EXPECT_NE(a.raw_increments(), c.raw_increments());
}

TEST(Brownian, PathsDoNotDependOnEnsembleSize) {
  const TimeGrid g(1.0, 8);
  const BrownianEnsemble small = sample_brownian(g, 3, 5);
  const BrownianEnsemble big = sample_brownian(g, 30, 5);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(small.increment(2, i), big.increment(2, i));
}

TEST(Brownian, IncrementVarianceMatchesDt) {
  const TimeGrid g(1.0, 1000);
  const BrownianEnsemble w = sample_brownian(g, 10000, 42);
  const std::vector<double>& inc = w.raw_increments();
  const double var = sample_sd(inc) * sample_sd(inc);
  EXPECT_NEAR(var / g.dt(), 1.0, 0.05);
}

TEST(Brownian, ValuesAreRunningSums) {
  const TimeGrid g(1.0, 10);
  const BrownianEnsemble w = sample_brownian(g, 1, 3);
  EXPECT_EQ(w.paths(), 1u);
  EXPECT_EQ(w.value(0, 0), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    s += w.increment(0, i);
    EXPECT_NEAR(w.value(0, i + 1), s, 1e-15);
  }
}

TEST(Brownian, IndependentOfWorkerCount) {
  const TimeGrid g(1.0, 32);
  set_worker_count(1);
  const BrownianEnsemble a = sample_brownian(g, 777, 1);
  set_worker_count(3);
  const BrownianEnsemble b = sample_brownian(g, 777, 1);
  set_worker_count(0);
  EXPECT_EQ(a.raw_increments(), b.raw_increments());
}

TEST(Brownian, RejectsZeroPaths) {
  EXPECT_THROW(sample_brownian(TimeGrid(1.0, 4), 0, 1), std::invalid_argument);
}

TEST(Parallel, CoversRangeOnceAndRethrows) {
  set_worker_count(4);
  std::vector<int> hits(1001, 0);
  parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) ++hits[i];
  });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(100, [](std::size_t b, std::size_t) {
                 if (b == 0) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  set_worker_count(0);
  EXPECT_GE(worker_count(), 1u);
}

TEST(Cumulate, ZeroControl) {
  const TimeGrid g(1.0, 4);
  const SingularControl xi = SingularControl::zero(g);
  for (double t : g.nodes()) EXPECT_EQ(cumulate(xi, t), 0.0);
}

TEST(Cumulate, LeftContinuousAtAtom) {
  const TimeGrid g(1.0, 4);
  const SingularControl xi = SingularControl::atoms(g, {{0.5, 0.5}});
  EXPECT_EQ(cumulate(xi, 0.5), 0.0);
  EXPECT_EQ(cumulate(xi, 0.75), 0.5);
}

TEST(Cumulate, SumsAtoms) {
  const TimeGrid g(1.0, 4);
  const SingularControl xi = SingularControl::deterministic(g, {0.1, 0.1, 0.1, 0.1});
  EXPECT_NEAR(cumulate(xi, 1.0), 0.4, 1e-15);
  EXPECT_THROW(cumulate(xi, 0.6), std::invalid_argument);
}

TEST(SingularControl, RejectsNegativeIncrements) {
  const TimeGrid g(1.0, 4);
  EXPECT_THROW(SingularControl::deterministic(g, {0.1, -0.1, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(SingularControl::atoms(g, {{1.0, 0.3}}), std::invalid_argument);
  const SingularControl a = SingularControl::atoms(g, {{0.25, 0.3}});
  EXPECT_THROW(a.plus(-2.0, a), std::invalid_argument);
  EXPECT_NEAR(a.plus(-1.0, a).total(0), 0.0, 0.0);
}

TEST(RegularControl, EnforcesControlSet) {
  const TimeGrid g(1.0, 4);
  const ControlSet set{0.0, 1.0};
  EXPECT_THROW(RegularControl::constant(g, set, 2.0), std::invalid_argument);
  const RegularControl u = RegularControl::constant(g, set, 1.0);
  EXPECT_THROW(u.plus(0.5, bump_direction(g, 0.0, 0.5, 1.0)), std::invalid_argument);
  EXPECT_NO_THROW(u.plus(-0.5, bump_direction(g, 0.0, 0.5, 1.0)));
}

TEST(RegularControl, BumpDirectionIndicator) {
  const TimeGrid g(1.0, 10);
  const RegularControl v = bump_direction(g, 0.2, 0.3, 2.0);
  for (std::size_t i = 0; i < 10; ++i) {
    const double expect = (i >= 2 && i < 5) ? 2.0 : 0.0;
    EXPECT_EQ(v.value(0, i), expect) << i;
  }
}

TEST(RegularControl, FeedbackIsAdapted) {
  const TimeGrid g(1.0, 8);
  const BrownianEnsemble w = sample_brownian(g, 4, 1);
  std::size_t seen_max = 0;
  const RegularControl u = RegularControl::feedback(g, {}, w, [&](std::size_t i, std::span<const double> b) {
    seen_max = std::max(seen_max, b.size());
    EXPECT_EQ(b.size(), i + 1);
    return b.back();
  });
  EXPECT_EQ(seen_max, 8u);
  EXPECT_EQ(u.value(2, 3), w.value(2, 3));
}

TEST(Stats, PairwiseSumIsAccurate) {
  std::vector<double> x(1 << 20, 0.1);
  EXPECT_NEAR(pairwise_sum(x), 0.1 * (1 << 20), 1e-8);
}

TEST(Stats, MeanAndStandardError) {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const Estimate e = mean_estimate(x);
  EXPECT_DOUBLE_EQ(e.value, 2.5);
  EXPECT_NEAR(e.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(sample_sd(std::vector<double>{3.0}), 0.0);
}

TEST(Stats, PairedDifference) {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const Estimate d = paired_difference(a, a);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_EQ(d.se, 0.0);
}

TEST(Stats, WeightedMean) {
  const std::vector<double> x = {1.0, 3.0};
  const std::vector<double> w = {3.0, 1.0};
  EXPECT_DOUBLE_EQ(weighted_mean_estimate(x, w).value, 1.5);
}

TEST(Regression, RecoversPolynomial) {
  CounterStream s(3, 0);
  std::vector<std::vector<double>> cols(1, std::vector<double>(500));
  std::vector<double> y(500);
  for (std::size_t m = 0; m < 500; ++m) {
    const double b = s.next_normal();
    cols[0][m] = b;
    y[m] = 1.0 + 2.0 * b - 0.5 * b * b;
  }
  RegressionOptions o;
  o.degree = 2;
  const RegressionFit fit = fit_least_squares(cols, y, {}, o);
  const double f[] = {0.7};
  EXPECT_NEAR(fit.predict(f), 1.0 + 1.4 - 0.245, 1e-10);
  EXPECT_NEAR(fit.derivative(f, 0), 2.0 - 0.7, 1e-10);
}

TEST(Regression, ConstantFeatureReducesToMean) {
  std::vector<std::vector<double>> cols(1, std::vector<double>(4, 0.0));
  const std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
  const std::vector<double> w = {1.0, 1.0, 1.0, 1.0};
  const std::vector<double> fitted = project(cols, y, w, {});
  for (double v : fitted) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Regression, DropsCollinearFeature) {
  CounterStream s(4, 0);
  std::vector<std::vector<double>> cols(2, std::vector<double>(300));
  std::vector<double> y(300);
  for (std::size_t m = 0; m < 300; ++m) {
    cols[0][m] = s.next_normal();
    cols[1][m] = 3.0 - 2.0 * cols[0][m];
    y[m] = cols[0][m] * cols[0][m];
  }
  RegressionOptions o;
  const RegressionFit fit = fit_least_squares(cols, y, {}, o);
  EXPECT_EQ(fit.basis_size(), 3u);
  const double f[] = {0.5, 2.0};
  EXPECT_NEAR(fit.predict(f), 0.25, 1e-10);
}

TEST(Regression, SingularDesignThrows) {
  std::vector<std::vector<double>> cols(1, {0.0, 1.0});
  const std::vector<double> y = {1.0, 2.0};
  RegressionOptions o;
  o.degree = 3;
  EXPECT_THROW(fit_least_squares(cols, y, {}, o), RegressionError);
}

TEST(Io, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1e300), "1e+300");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Io, CsvWriterQuotesAndFlags) {
  CsvWriter w("a,b,c");
  w.cell("x,y").cell(1.5).flag(false);
  w.end_row();
  EXPECT_EQ(w.text(), "a,b,c\n\"x,y\",1.5,fail\n");
  EXPECT_EQ(w.rows(), 1u);
}
