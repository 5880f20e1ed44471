#include "volterra/run.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "volterra/adjoint.hpp"
#include "volterra/errors.hpp"
#include "volterra/forward.hpp"
#include "volterra/harvest.hpp"
#include "volterra/io.hpp"
#include "volterra/malliavin.hpp"
#include "volterra/maxprinciple.hpp"
#include "volterra/parallel.hpp"
#include "volterra/stats.hpp"
#include "volterra/version.hpp"

namespace volterra {

namespace {

BrownianEnsemble make_noise(const RunConfig& c) {
  return sample_brownian(make_grid(c), c.grid.M, c.grid.seed);
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream o;
  o << std::setprecision(precision) << v;
  return o.str();
}

Estimate column_stats(const ProcessPath& x, std::size_t i, double* sd) {
  const std::vector<double> col = x.column(i);
  if (sd) *sd = sample_sd(col);
  return mean_estimate(col);
}

double mean_cumulative(const SingularControl& xi, std::size_t paths, std::size_t i) {
  std::vector<double> v(xi.is_deterministic() ? 1 : paths);
  for (std::size_t m = 0; m < v.size(); ++m) v[m] = xi.cumulative(m, i);
  return mean(v);
}

double mean_increment(const SingularControl& xi, std::size_t paths, std::size_t i) {
  std::vector<double> v(xi.is_deterministic() ? 1 : paths);
  for (std::size_t m = 0; m < v.size(); ++m) v[m] = xi.increment(m, i);
  return mean(v);
}

std::string check_csv(const MpReport& report) {
  CsvWriter w(kCheckHeader);
  for (const CheckRow& r : report.rows) {
    w.cell(r.name).cell(r.value).cell(r.se).cell(r.tolerance).flag(r.pass).cell(r.note);
    w.end_row();
  }
  return w.text();
}

std::string gap_csv(const MpReport& report) {
  CsvWriter w(kGapHeader);
  for (const NodeGap& g : report.gaps) {
    w.cell(g.t).cell(g.gap.value).cell(g.gap.se).cell(g.positive.value).cell(g.positive.se);
    w.end_row();
  }
  return w.text();
}

std::string policy_csv(const std::vector<PolicyRow>& rows) {
  CsvWriter w(kPolicyHeader);
  for (const PolicyRow& r : rows) {
    w.cell(r.name).cell(r.j.value).cell(r.j.se).cell(r.advantage.value).cell(r.advantage.se).flag(r.pass);
    w.end_row();
  }
  return w.text();
}

void describe_checks(std::ostringstream& o, const MpReport& report) {
  for (const CheckRow& r : report.rows) {
    o << "  " << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(40) << r.name
      << std::right << " value " << fmt(r.value) << "  se " << fmt(r.se) << "  tol "
      << fmt(r.tolerance);
    if (!r.note.empty()) o << "  (" << r.note << ")";
    o << "\n";
  }
  for (const std::string& n : report.notes) o << "  note: " << n << "\n";
}

bool has_regular_control(const RunConfig& c) {
  const PresetConfig& b = c.model.b_u;
  const bool drift = !(b.kind == "constant" && b.params.size() == 1 && b.params[0] == 0.0);
  return drift || c.model.f0_u != 0.0 || c.model.f0_u2 != 0.0;
}

std::vector<Bump> make_bumps(const RunConfig& c) {
  std::vector<Bump> out;
  for (double s : c.checks.bump_starts) {
    for (double eta : {1.0, -1.0}) out.push_back({s * c.grid.T, c.checks.bump_width * c.grid.T, eta});
  }
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "adjoint", "check-mp", "harvest",
                                                 "duality-test"};
  return names;
}

SingularControl resolve_policy(const RunConfig& c, const BrownianEnsemble& noise) {
  const HarvestScenario s = make_scenario(c);
  std::string policy = c.checks.policy;
  if (policy == "auto") {
    if (s.mode == PriceMode::density_independent) {
      policy = "reflected";
    } else if (c.solver.candidate == "coupled") {
      policy = "coupled";
    } else {
      policy = "zero";
    }
  }
  if (policy == "zero") return SingularControl::zero(noise.grid());
  const HarvestOptions opts = make_harvest_options(c);
  if (policy == "reflected") return solve_reflected_adjoint(s, noise, opts.reflection).xi;
  if (policy == "coupled") return coupled_fixed_point(s, noise, opts.coupled).xi;
  throw std::invalid_argument("unknown policy '" + policy + "'");
}

RunResult run_simulate(const RunConfig& c) {
  const BrownianEnsemble noise = make_noise(c);
  const TimeGrid& g = noise.grid();
  const ControlProblem problem = make_problem(c);
  const RegularControl u = make_control(c, g);
  const SingularControl xi = resolve_policy(c, noise);
  const ProcessPath x = simulate(problem.state, u, xi, noise);

  CsvWriter w(kForwardHeader);
  for (std::size_t i = 0; i <= g.steps(); ++i) {
    double sd = 0.0;
    const Estimate m = column_stats(x, i, &sd);
    w.cell(g.node(i)).cell(m.value).cell(sd).cell(mean_cumulative(xi, noise.paths(), i));
    w.end_row();
  }
  RunResult r{"simulate", {{"forward.csv", w.text()}}, {}, true};
  std::ostringstream o;
  double sd = 0.0;
  const Estimate xt = column_stats(x, g.steps(), &sd);
  o << "simulate: M=" << noise.paths() << " N=" << g.steps() << " T=" << g.horizon() << "\n"
    << "  E[X(T)] = " << fmt(xt.value) << " (se " << fmt(xt.se) << ")\n";
  try {
    const JEstimate j = evaluate_J(problem.reward, x, u, xi, &noise);
    o << "  J = " << fmt(j.value.value) << " (se " << fmt(j.value.se) << ")\n";
  } catch (const DomainError& e) {
    o << "  J not defined: " << e.what() << "\n";
  }
  r.summary = o.str();
  return r;
}

RunResult run_adjoint(const RunConfig& c) {
  const BrownianEnsemble noise = make_noise(c);
  const TimeGrid& g = noise.grid();
  const ControlProblem problem = make_problem(c);
  const RegularControl u = make_control(c, g);
  const SingularControl xi = resolve_policy(c, noise);
  const ProcessPath x = simulate(problem.state, u, xi, noise);
  const BsvieSpec spec = adjoint_spec(problem, xi);
  const AdjointOptions opts = make_adjoint_options(c);

  std::vector<AdjointSolution> sols;
  if (c.solver.method != "closed_form") sols.push_back(solve_regression(spec, &x, noise, opts));
  if (c.solver.method != "regression") {
    const ResolventTable psi = neumann_psi(spec.b0, g, c.solver.psi_tol, c.solver.max_order);
    sols.push_back(solve_closed_form(spec, psi, &x, noise, opts));
  }

  RunResult r{"adjoint", {}, {}, true};
  std::ostringstream o;
  o << "adjoint: M=" << noise.paths() << " N=" << g.steps() << " method=" << c.solver.method << "\n";
  for (const AdjointSolution& s : sols) {
    const QDiagonal q = estimate_q_diagonal(s, &x, &xi, noise, opts);
    const std::vector<double> qm = q.node_means();
    CsvWriter w(kAdjointHeader);
    for (std::size_t i = 0; i <= g.steps(); ++i) {
      double sd = 0.0;
      const Estimate m = column_stats(s.p, i, &sd);
      w.cell(g.node(i)).cell(m.value).cell(sd);
      if (i < g.steps()) {
        w.cell(qm[i]);
      } else {
        w.empty();
      }
      w.end_row();
    }
    const std::string name = sols.size() == 1 || s.method == "regression" ? "adjoint.csv"
                                                                          : "adjoint_closed_form.csv";
    r.files.emplace_back(name, w.text());
    o << "  " << s.method << ": E_Q[p(0)] = " << fmt(s.node_estimate[0].value) << " (se "
      << fmt(s.node_estimate[0].se) << ")";
    if (s.method == "closed_form") o << ", Neumann order " << s.truncation_order;
    o << "\n";
    for (const std::string& wmsg : s.warnings) o << "  warning: " << wmsg << "\n";
  }
  if (sols.size() == 2) {
    const SolverComparison cmp =
        compare_solutions(sols[0], sols[1], spec.sigma0, noise, c.checks.k_se, c.checks.abs_tol);
    r.checks_passed = cmp.agrees;
    CsvWriter w("t,difference,combined_se,mean_abs_difference");
    for (std::size_t i = 0; i <= g.steps(); ++i) {
      w.cell(g.node(i)).cell(cmp.difference[i]).cell(cmp.combined_se[i]).cell(cmp.mean_abs_difference[i]);
      w.end_row();
    }
    r.files.emplace_back("adjoint_compare.csv", w.text());
    o << "  " << (cmp.agrees ? "PASS" : "FAIL") << "  closed form vs regression, worst |diff|/SE = "
      << fmt(cmp.worst_ratio) << "\n";
  }
  r.summary = o.str();
  return r;
}

RunResult run_check_mp(const RunConfig& c) {
  const BrownianEnsemble noise = make_noise(c);
  const TimeGrid& g = noise.grid();
  const ControlProblem problem = make_problem(c);
  const RegularControl u = make_control(c, g);
  const SingularControl xi = resolve_policy(c, noise);
  const ProcessPath x = simulate(problem.state, u, xi, noise);
  const AdjointOptions opts = make_adjoint_options(c);
  const CheckTolerances tol = make_tolerances(c);

  const AdjointSolution p = solve_regression(adjoint_spec(problem, xi), &x, noise, opts);
  MpReport report = check_singular_conditions(problem, x, xi, p, noise, tol, opts);
  if (has_regular_control(c)) {
    StationarityOptions so;
    so.form = c.checks.gradient == "continuous" ? GradientForm::continuous : GradientForm::scheme;
    so.lambda = c.checks.lambda;
    so.tol = tol;
    so.hamiltonian.adjoint = opts;
    so.hamiltonian.experimental_malliavin = c.solver.experimental_malliavin;
    const StationarityReport st = check_stationarity_u(problem, u, xi, noise, make_bumps(c), so);
    for (const CheckRow& row : st.report.rows) report.rows.push_back(row);
  }
  if (make_scenario(c).mode == PriceMode::density_independent && !xi.is_deterministic()) {
    report.notes.push_back(
        "p solves the unreflected adjoint equation; the harvest command checks the reflected pair");
  }
  RunResult r{"check-mp", {{"check_mp.csv", check_csv(report)}, {"gaps.csv", gap_csv(report)}}, {},
              report.passed()};
  std::ostringstream o;
  o << "check-mp: M=" << noise.paths() << " N=" << g.steps() << " policy=" << c.checks.policy << "\n";
  describe_checks(o, report);
  o << (report.passed() ? "all checks passed\n" : "some checks failed\n");
  r.summary = o.str();
  return r;
}

RunResult run_harvest_command(const RunConfig& c) {
  const BrownianEnsemble noise = make_noise(c);
  const TimeGrid& g = noise.grid();
  const std::size_t n = g.steps();
  const std::size_t paths = noise.paths();
  const HarvestScenario scenario = make_scenario(c);
  scenario.validate(g);
  const HarvestReport rep = run_harvest(scenario, noise, make_harvest_options(c));

  CsvWriter w(kHarvestHeader);
  std::vector<double> bcol(paths);
  for (std::size_t i = 0; i <= n; ++i) {
    double sdx = 0.0, sdp = 0.0;
    const Estimate mx = column_stats(rep.x, i, &sdx);
    const Estimate mp = column_stats(rep.p.p, i, &sdp);
    for (std::size_t m = 0; m < paths; ++m) bcol[m] = rep.barrier(m, i);
    w.cell(g.node(i)).cell(mx.value).cell(sdx).cell(mp.value).cell(sdp).cell(mean(bcol));
    if (i < n) {
      w.cell(mean_increment(rep.xi, paths, i)).cell(rep.check.gaps[i].gap.value).cell(rep.check.gaps[i].gap.se);
    } else {
      w.cell(0.0).empty().empty();
    }
    w.end_row();
  }

  MpReport checks = rep.check;
  bool passed = checks.passed();
  if (rep.mode == PriceMode::density_independent) {
    const double feas_tol = 1e-12;
    checks.rows.push_back({"barrier_feasibility", rep.skorokhod.min_gap, 0.0, feas_tol,
                           rep.skorokhod.min_gap >= -feas_tol, "min over t < T of p - L"});
    const Estimate& sc = rep.skorokhod.complementarity;
    checks.rows.push_back({"skorokhod_complementarity", sc.value, sc.se,
                           c.checks.k_se * sc.se + c.checks.abs_tol,
                           std::abs(sc.value) <= c.checks.k_se * sc.se + c.checks.abs_tol,
                           std::to_string(rep.skorokhod.off_barrier_pushes) + " push(es) off the barrier"});
    std::size_t lost = 0;
    for (const PolicyRow& row : rep.tournament) lost += row.pass ? 0 : 1;
    checks.rows.push_back({"optimality_tournament", static_cast<double>(lost), 0.0, 0.0, lost == 0,
                           std::to_string(rep.tournament.size() - 1) + " alternative(s)"});
    passed = checks.passed();
  }
  std::vector<PolicyRow> policies = rep.tournament;
  for (const PolicyRow& row : rep.scaling) policies.push_back(row);

  RunResult r{"harvest",
              {{"harvest.csv", w.text()},
               {"check_mp.csv", check_csv(checks)},
               {"tournament.csv", policy_csv(policies)}},
              {},
              passed};
  std::ostringstream o;
  o << "harvest: mode=" << to_string(rep.mode) << " M=" << paths << " N=" << n << " T=" << g.horizon()
    << "\n  E[xi(T)] = " << fmt(rep.skorokhod.mean_mass) << "\n";
  describe_checks(o, checks);
  o << "  policies (J, advantage of the candidate):\n";
  for (const PolicyRow& row : policies) {
    o << "    " << (row.pass ? "ok  " : "LOSS") << "  " << std::left << std::setw(32) << row.name
      << std::right << " J " << fmt(row.j.value) << " (se " << fmt(row.j.se) << ")  adv "
      << fmt(row.advantage.value) << " (se " << fmt(row.advantage.se) << ")\n";
  }
  for (const std::string& note : rep.notes) o << "  note: " << note << "\n";
  o << (passed ? "all checks passed\n" : "some checks failed\n");
  r.summary = o.str();
  return r;
}

RunResult run_duality_test(const RunConfig& c) {
  const BrownianEnsemble noise = make_noise(c);
  const TimeGrid& g = noise.grid();
  MalliavinOptions mo;
  mo.epsilon = c.solver.epsilon;
  mo.degree = c.solver.malliavin_degree;

  const TimeFunction phi = TimeFunction::exponential(1.0, -0.5);
  const std::vector<PathFunctional> functionals = {PathFunctional::terminal_value(),
                                                   PathFunctional::terminal_square(),
                                                   PathFunctional::wiener_integral(phi, g)};
  const std::vector<AdaptedIntegrand> integrands = {
      AdaptedIntegrand::deterministic(TimeFunction::exponential(1.0, 1.0), g),
      AdaptedIntegrand::path_value()};

  CsvWriter w(kDualityHeader);
  bool passed = true;
  std::ostringstream o;
  o << "duality-test: M=" << noise.paths() << " N=" << g.steps() << "\n";
  for (const PathFunctional& f : functionals) {
    for (const AdaptedIntegrand& a : integrands) {
      const DualityResult d = duality_check(f, a, noise, mo);
      const bool ok = d.agrees(c.checks.k_se, c.checks.abs_tol);
      passed = passed && ok;
      const std::string name = "duality[" + d.functional + "," + d.integrand + "]";
      w.cell(name).cell(d.lhs.value).cell(d.lhs.se).cell(d.rhs.value).cell(d.rhs.se).cell(d.combined_se()).flag(ok);
      w.end_row();
      o << "  " << (ok ? "PASS" : "FAIL") << "  " << std::left << std::setw(44) << name << std::right
        << " lhs " << fmt(d.lhs.value) << "  rhs " << fmt(d.rhs.value) << "  se " << fmt(d.combined_se())
        << "\n";
    }
  }

  const ControlProblem problem = make_problem(c);
  const RegularControl u = make_control(c, g);
  const SingularControl xi = resolve_policy(c, noise);
  const ProcessPath x = simulate(problem.state, u, xi, noise);
  TwoTimeKernel kernel = make_kernel(c.model.b0, c.grid.T);
  if (kernel.is_zero()) kernel = TwoTimeKernel::exp_decay(1.0, 1.0);
  const FubiniReport fr = fubini_checks(x, kernel, xi);
  const double fub_tol = 1e-12;
  for (const auto& [name, v] : {std::pair<std::string, double>{"fubini_1", fr.identity1},
                                std::pair<std::string, double>{"fubini_2", fr.identity2}}) {
    const bool ok = v <= fub_tol;
    passed = passed && ok;
    w.cell(name).cell(v).cell(0.0).cell(0.0).cell(0.0).cell(0.0).flag(ok);
    w.end_row();
    o << "  " << (ok ? "PASS" : "FAIL") << "  " << std::left << std::setw(44) << name << std::right
      << " max residual " << fmt(v) << "\n";
  }
  o << "  note: moving dxi outside the left side of identity 2 leaves a gap of "
    << fmt(fr.identity2_outer_dxi_gap) << " (not an identity)\n";

  const ProcessFunctional pf = [](std::size_t i, std::span<const double> b) { return b[i] * b[i]; };
  const StochasticFubiniResult sf = fubini_stochastic(pf, kernel, noise, mo);
  const bool ok3 = sf.agrees(c.checks.k_se, c.checks.abs_tol);
  passed = passed && ok3;
  const double se3 = std::sqrt(sf.lhs.se * sf.lhs.se + sf.rhs.se * sf.rhs.se);
  w.cell("fubini_3").cell(sf.lhs.value).cell(sf.lhs.se).cell(sf.rhs.value).cell(sf.rhs.se).cell(se3).flag(ok3);
  w.end_row();
  o << "  " << (ok3 ? "PASS" : "FAIL") << "  " << std::left << std::setw(44) << "fubini_3" << std::right
    << " lhs " << fmt(sf.lhs.value) << "  rhs " << fmt(sf.rhs.value) << "  se " << fmt(se3) << "\n";
  o << (passed ? "all checks passed\n" : "some checks failed\n");
  return {"duality-test", {{"duality.csv", w.text()}}, o.str(), passed};
}

RunResult run_command(const std::string& command, const RunConfig& config) {
  if (command == "simulate") return run_simulate(config);
  if (command == "adjoint") return run_adjoint(config);
  if (command == "check-mp") return run_check_mp(config);
  if (command == "harvest") return run_harvest_command(config);
  if (command == "duality-test") return run_duality_test(config);
  throw std::invalid_argument("unknown command '" + command + "'");
}

std::string manifest_json(const RunConfig& c, const RunResult& result) {
  using nlohmann::ordered_json;
  const auto preset = [](const PresetConfig& p) { return ordered_json{{"kind", p.kind}, {"params", p.params}}; };
  const auto bound = [](double v) -> ordered_json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  ordered_json j;
  j["tool"] = "volterra";
  j["version"] = kVersion;
  j["command"] = result.command;
  j["seed"] = c.grid.seed;
  j["config"] = {
      {"out", c.out},
      {"grid", {{"T", c.grid.T}, {"N", c.grid.N}, {"M", c.grid.M}, {"seed", c.grid.seed}}},
      {"model",
       {{"x0", c.model.x0},
        {"b0", preset(c.model.b0)},
        {"sigma0", preset(c.model.sigma0)},
        {"h", preset(c.model.h)},
        {"b_u", preset(c.model.b_u)},
        {"sigma_shift", preset(c.model.sigma_shift)},
        {"f0_x", c.model.f0_x},
        {"f0_u", c.model.f0_u},
        {"f0_u2", c.model.f0_u2},
        {"u", c.model.u},
        {"u_lo", bound(c.model.u_lo)},
        {"u_hi", bound(c.model.u_hi)},
        {"filtration", c.model.filtration}}},
      {"price", {{"mode", c.price.mode}, {"rho", preset(c.price.rho)}, {"theta", c.price.theta}}},
      {"solver",
       {{"method", c.solver.method},
        {"degree", c.solver.degree},
        {"psi_tol", c.solver.psi_tol},
        {"max_order", c.solver.max_order},
        {"epsilon", c.solver.epsilon},
        {"malliavin_degree", c.solver.malliavin_degree},
        {"max_iter", c.solver.max_iter},
        {"reflection_tol", c.solver.reflection_tol},
        {"candidate", c.solver.candidate},
        {"damping", c.solver.damping},
        {"experimental_malliavin", c.solver.experimental_malliavin}}},
      {"checks",
       {{"k_se", c.checks.k_se},
        {"abs_tol", c.checks.abs_tol},
        {"atom_times", c.checks.atom_times},
        {"atom_sizes", c.checks.atom_sizes},
        {"atom_scale", c.checks.atom_scale},
        {"scaling_probe", c.checks.scaling_probe},
        {"policy", c.checks.policy},
        {"lambda", c.checks.lambda},
        {"bump_starts", c.checks.bump_starts},
        {"bump_width", c.checks.bump_width},
        {"gradient", c.checks.gradient}}}};
  j["resolved_config_toml"] = emit_config(c);
  ordered_json outputs = ordered_json::array();
  for (const auto& [name, content] : result.files) outputs.push_back(name);
  j["outputs"] = outputs;
  j["checks_passed"] = result.checks_passed;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> commit(const RunResult& result, const RunConfig& config,
                                          const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : result.files) {
    write_atomic(dir / name, content);
    written.push_back(dir / name);
  }
  write_atomic(dir / "manifest.json", manifest_json(config, result));
  written.push_back(dir / "manifest.json");
  return written;
}

}  // namespace volterra
