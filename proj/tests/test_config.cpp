#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "volterra/config.hpp"
#include "volterra/errors.hpp"

using namespace volterra;

namespace {

ConfigError parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError for:\n" << text;
  return ConfigError("", 0, "");
}

}  // namespace

TEST(Config, EmptyConfigUsesDefaults) {
  EXPECT_EQ(parse_config(""), RunConfig{});
}

TEST(Config, MinimalConfigFillsDefaults) {
  const RunConfig c = parse_config("[grid]\nN = 32\n[model]\nsigma0 = 0.25\n");
  EXPECT_EQ(c.grid.N, 32u);
  EXPECT_EQ(c.grid.M, RunConfig{}.grid.M);
  EXPECT_EQ(c.model.sigma0.kind, "constant");
  EXPECT_EQ(c.model.sigma0.params, std::vector<double>{0.25});
  EXPECT_EQ(c.solver, SolverConfig{});
  EXPECT_EQ(c.checks, ChecksConfig{});
}

TEST(Config, ZeroStepsNamesKeyAndLine) {
  const ConfigError e = parse_error("[grid]\nT = 1.0\nN = 0\n");
  EXPECT_EQ(e.key(), "grid.N");
  EXPECT_EQ(e.line(), 3u);
}

TEST(Config, UnknownKeyRejected) {
  const ConfigError e = parse_error("[model]\nkappa = 1.0\n");
  EXPECT_EQ(e.key(), "model.kappa");
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(parse_error("[extras]\na = 1\n").key(), "extras");
}

TEST(Config, SyntaxErrorCarriesLine) {
  const ConfigError e = parse_error("[grid]\nN = 10\nT = = 2\n");
  EXPECT_EQ(e.line(), 3u);
}

TEST(Config, WrongTypeRejected) {
  EXPECT_EQ(parse_error("[grid]\nN = \"many\"\n").key(), "grid.N");
  EXPECT_EQ(parse_error("[grid]\nN = -3\n").key(), "grid.N");
  EXPECT_EQ(parse_error("[grid]\nseed = -1\n").key(), "grid.seed");
}

TEST(Config, RangeChecks) {
  EXPECT_EQ(parse_error("[grid]\nT = 0.0\n").key(), "grid.T");
  EXPECT_EQ(parse_error("[grid]\nM = 0\n").key(), "grid.M");
  EXPECT_EQ(parse_error("[model]\nx0 = -1.0\n").key(), "model.x0");
  EXPECT_EQ(parse_error("[price]\nmode = \"barter\"\n").key(), "price.mode");
  EXPECT_EQ(parse_error("[solver]\nmethod = \"guess\"\n").key(), "solver.method");
  EXPECT_EQ(parse_error("[solver]\ndamping = 1.0\n").key(), "solver.damping");
  EXPECT_EQ(parse_error("[checks]\ngradient = \"both\"\n").key(), "checks.gradient");
  EXPECT_EQ(parse_error("[model]\nu_lo = 1.0\nu_hi = 0.0\n").key().rfind("model.u_", 0), 0u);
}

TEST(Config, PresetValidation) {
  EXPECT_EQ(parse_error("[model]\nb0 = { kind = \"spline\", params = [1.0] }\n").key(), "model.b0.kind");
  EXPECT_EQ(parse_error("[model]\nb0 = { kind = \"exp_decay\", params = [1.0] }\n").key(), "model.b0.params");
  const RunConfig c = parse_config("[model]\nb0 = { kind = \"poly\", params = [0.1, 0.2, 0.3] }\n");
  const TwoTimeKernel k = make_kernel(c.model.b0, 1.0);
  EXPECT_DOUBLE_EQ(k(0.5, 0.0), 0.1 + 0.2 * 0.5 + 0.3 * 0.25);
}

TEST(Config, EmitRoundTrip) {
  std::ifstream in(std::string(VOLTERRA_SOURCE_DIR) + "/configs/harvest_42.toml");
  ASSERT_TRUE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  const RunConfig c = parse_config(ss.str());
  EXPECT_EQ(parse_config(emit_config(c)), c);
  RunConfig d;
  d.model.u_lo = -2.0;
  d.checks.bump_starts = {0.1};
  d.price.theta = {0.5, -0.25, 0.125};
  EXPECT_EQ(parse_config(emit_config(d)), d);
  EXPECT_EQ(parse_config(emit_config(RunConfig{})), RunConfig{});
}

TEST(Config, LoadMissingFile) {
  try {
    load_config("/nonexistent/volterra.toml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("volterra.toml"), std::string::npos);
  }
}

TEST(Config, BundledConfigBuildsScenario) {
  const RunConfig c = load_config(std::string(VOLTERRA_SOURCE_DIR) + "/configs/harvest_42.toml");
  EXPECT_EQ(c.grid.seed, 42u);
  const TimeGrid g = make_grid(c);
  EXPECT_EQ(g.steps(), c.grid.N);
  EXPECT_NO_THROW(make_scenario(c).validate(g));
  EXPECT_EQ(make_harvest_options(c).tol.k_se, c.checks.k_se);
}
