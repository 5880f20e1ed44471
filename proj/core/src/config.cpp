#include "volterra/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "volterra/errors.hpp"

namespace volterra {

namespace {

using LineMap = std::map<std::string, std::size_t>;

std::size_t line_of(const toml::node& node) { return node.source().begin.line; }

class Section {
public:
  Section(const toml::table* table, std::string prefix, LineMap& lines)
      : table_(table), prefix_(std::move(prefix)), lines_(lines) {}

  const toml::node* find(const std::string& key) {
    seen_.insert(key);
    if (!table_) return nullptr;
    const toml::node* node = table_->get(key);
    if (node) lines_[path(key)] = line_of(*node);
    return node;
  }

  void read(const std::string& key, double& out) {
    if (const toml::node* n = find(key)) out = number(*n, key);
  }

  void read(const std::string& key, std::size_t& out) {
    if (const toml::node* n = find(key)) {
      const std::int64_t v = integer(*n, key);
      if (v < 0) fail(key, *n, "must be nonnegative");
      out = static_cast<std::size_t>(v);
    }
  }

  void read(const std::string& key, int& out) {
    if (const toml::node* n = find(key)) out = static_cast<int>(integer(*n, key));
  }

  void read_u64(const std::string& key, std::uint64_t& out) {
    if (const toml::node* n = find(key)) {
      const std::int64_t v = integer(*n, key);
      if (v < 0) fail(key, *n, "must be nonnegative");
      out = static_cast<std::uint64_t>(v);
    }
  }

  void read(const std::string& key, bool& out) {
    if (const toml::node* n = find(key)) {
      const auto v = n->value<bool>();
      if (!v || !n->is_boolean()) fail(key, *n, "expected a boolean");
      out = *v;
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const toml::node* n = find(key)) {
      if (!n->is_string()) fail(key, *n, "expected a string");
      out = *n->value<std::string>();
    }
  }

  void read(const std::string& key, std::vector<double>& out) {
    if (const toml::node* n = find(key)) out = numbers(*n, key);
  }

  void read(const std::string& key, PresetConfig& out) {
    const toml::node* n = find(key);
    if (!n) return;
    if (n->is_number()) {
      out = PresetConfig{"constant", {number(*n, key)}};
      return;
    }
    const toml::table* t = n->as_table();
    if (!t) fail(key, *n, "expected a number or a table {kind = ..., params = [...]}");
    PresetConfig p;
    p.params.clear();
    for (const auto& [k, v] : *t) {
      const std::string name(k.str());
      if (name == "kind") {
        if (!v.is_string()) fail(key + ".kind", v, "expected a string");
        p.kind = *v.value<std::string>();
      } else if (name == "params") {
        p.params = numbers(v, key + ".params");
      } else {
        fail(key + "." + name, v, "unknown key");
      }
    }
    out = std::move(p);
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      const std::string name(k.str());
      if (!seen_.count(name)) fail(name, v, "unknown key");
    }
  }

private:
  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const toml::node& n, const std::string& what) const {
    throw ConfigError(path(key), line_of(n), path(key) + ": " + what);
  }

  double number(const toml::node& n, const std::string& key) const {
    if (n.is_floating_point()) return *n.value<double>();
    if (n.is_integer()) return static_cast<double>(*n.value<std::int64_t>());
    fail(key, n, "expected a number");
  }

  std::int64_t integer(const toml::node& n, const std::string& key) const {
    if (!n.is_integer()) fail(key, n, "expected an integer");
    return *n.value<std::int64_t>();
  }

  std::vector<double> numbers(const toml::node& n, const std::string& key) const {
    const toml::array* a = n.as_array();
    if (!a) fail(key, n, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *a) out.push_back(number(e, key));
    return out;
  }

  const toml::table* table_;
  std::string prefix_;
  LineMap& lines_;
  std::set<std::string> seen_;
};

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError(key, 0, key + ": " + what);
}

void check_preset(const PresetConfig& p, const std::string& key, bool two_time) {
  const std::size_t n = p.params.size();
  for (double v : p.params) {
    if (!std::isfinite(v)) bad(key + ".params", "parameters must be finite");
  }
  if (p.kind == "constant") {
    if (n != 1) bad(key + ".params", "constant takes one parameter [c]");
  } else if (two_time && p.kind == "exp_decay") {
    if (n != 2) bad(key + ".params", "exp_decay takes [c, lambda]");
  } else if (two_time && p.kind == "poly") {
    if (n == 0) bad(key + ".params", "poly needs at least one coefficient");
  } else if (!two_time && p.kind == "exponential") {
    if (n != 2) bad(key + ".params", "exponential takes [a, b]");
  } else {
    bad(key + ".kind", "unknown preset '" + p.kind + "'" +
                           (two_time ? " (constant, exp_decay, poly)" : " (constant, exponential)"));
  }
}

void check_finite(double v, const std::string& key) {
  if (!std::isfinite(v)) bad(key, "must be finite");
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string array(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
  return out + "]";
}

std::string preset(const PresetConfig& p) {
  return "{ kind = " + quote(p.kind) + ", params = " + array(p.params) + " }";
}

}  // namespace

void validate_config(const RunConfig& c) {
  if (!(c.grid.T > 0.0) || !std::isfinite(c.grid.T)) bad("grid.T", "must be positive and finite");
  if (c.grid.N < 1 || c.grid.N > 100000) bad("grid.N", "must lie in [1, 100000]");
  if (c.grid.M < 1 || c.grid.M > 10000000) bad("grid.M", "must lie in [1, 10000000]");
  if (c.grid.seed > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    bad("grid.seed", "must fit in a signed 64-bit integer");
  }

  if (!(c.model.x0 > 0.0) || !std::isfinite(c.model.x0)) bad("model.x0", "must be positive and finite");
  check_preset(c.model.b0, "model.b0", true);
  check_preset(c.model.sigma0, "model.sigma0", false);
  check_preset(c.model.h, "model.h", true);
  check_preset(c.model.b_u, "model.b_u", true);
  check_preset(c.model.sigma_shift, "model.sigma_shift", true);
  check_finite(c.model.f0_x, "model.f0_x");
  check_finite(c.model.f0_u, "model.f0_u");
  check_finite(c.model.f0_u2, "model.f0_u2");
  check_finite(c.model.u, "model.u");
  if (std::isnan(c.model.u_lo) || std::isnan(c.model.u_hi) || c.model.u_lo > c.model.u_hi) {
    bad("model.u_lo", "need u_lo <= u_hi");
  }
  if (c.model.u < c.model.u_lo || c.model.u > c.model.u_hi) bad("model.u", "must lie in [u_lo, u_hi]");
  if (c.model.filtration != "full") {
    bad("model.filtration", "only the full Brownian filtration (\"full\") is supported");
  }

  try {
    price_mode_from_string(c.price.mode);
  } catch (const std::invalid_argument&) {
    bad("price.mode", "unknown mode '" + c.price.mode + "' (density_dependent, log, density_independent)");
  }
  check_preset(c.price.rho, "price.rho", false);
  if (c.price.theta.empty() || c.price.theta.size() > 3) bad("price.theta", "takes 1 to 3 coefficients");
  for (double v : c.price.theta) check_finite(v, "price.theta");

  if (c.solver.method != "closed_form" && c.solver.method != "regression" && c.solver.method != "both") {
    bad("solver.method", "must be closed_form, regression or both");
  }
  if (c.solver.degree < 0 || c.solver.degree > 6) bad("solver.degree", "must lie in [0, 6]");
  if (!(c.solver.psi_tol > 0.0)) bad("solver.psi_tol", "must be positive");
  if (c.solver.max_order < 1 || c.solver.max_order > 10000) bad("solver.max_order", "must lie in [1, 10000]");
  if (!(c.solver.epsilon > 0.0) || c.solver.epsilon > 1.0) bad("solver.epsilon", "must lie in (0, 1]");
  if (c.solver.malliavin_degree < 0 || c.solver.malliavin_degree > 6) {
    bad("solver.malliavin_degree", "must lie in [0, 6]");
  }
  if (c.solver.max_iter < 1) bad("solver.max_iter", "must be at least 1");
  if (!(c.solver.reflection_tol >= 0.0)) bad("solver.reflection_tol", "must be nonnegative");
  if (c.solver.candidate != "zero" && c.solver.candidate != "coupled") {
    bad("solver.candidate", "must be zero or coupled");
  }
  if (!(c.solver.damping >= 0.0 && c.solver.damping < 1.0)) bad("solver.damping", "must lie in [0, 1)");

  if (!(c.checks.k_se > 0.0) || !std::isfinite(c.checks.k_se)) bad("checks.k_se", "must be positive");
  if (!(c.checks.abs_tol >= 0.0)) bad("checks.abs_tol", "must be nonnegative");
  if (c.checks.atom_times.size() != c.checks.atom_sizes.size()) {
    bad("checks.atom_sizes", "must have as many entries as checks.atom_times");
  }
  for (double v : c.checks.atom_times) {
    if (!(v >= 0.0 && v < 1.0)) bad("checks.atom_times", "entries are fractions of T in [0, 1)");
  }
  for (double v : c.checks.atom_sizes) {
    if (!(v >= 0.0) || !std::isfinite(v)) bad("checks.atom_sizes", "entries must be nonnegative");
  }
  if (!(c.checks.atom_scale >= 0.0)) bad("checks.atom_scale", "must be nonnegative");
  if (c.checks.policy != "auto" && c.checks.policy != "zero" && c.checks.policy != "reflected" &&
      c.checks.policy != "coupled") {
    bad("checks.policy", "must be auto, zero, reflected or coupled");
  }
  if (!(c.checks.lambda > 0.0)) bad("checks.lambda", "must be positive");
  for (double v : c.checks.bump_starts) {
    if (!(v >= 0.0 && v < 1.0)) bad("checks.bump_starts", "entries are fractions of T in [0, 1)");
  }
  if (c.checks.gradient != "scheme" && c.checks.gradient != "continuous") {
    bad("checks.gradient", "must be scheme or continuous");
  }
  if (!(c.checks.bump_width > 0.0 && c.checks.bump_width <= 1.0)) {
    bad("checks.bump_width", "must lie in (0, 1] as a fraction of T");
  }
  if (c.out.empty()) bad("out", "must not be empty");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError("", e.source().begin.line, std::string("syntax error: ") + std::string(e.description()));
  }

  RunConfig c;
  LineMap lines;
  const auto section = [&](const char* name) -> const toml::table* {
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    lines[name] = line_of(*n);
    if (!n->is_table()) throw ConfigError(name, line_of(*n), std::string(name) + ": expected a table");
    return n->as_table();
  };

  Section top(&root, "", lines);
  for (const char* s : {"grid", "model", "price", "solver", "checks"}) top.find(s);
  top.read("out", c.out);
  top.finish();

  Section grid(section("grid"), "grid", lines);
  grid.read("T", c.grid.T);
  grid.read("N", c.grid.N);
  grid.read("M", c.grid.M);
  grid.read_u64("seed", c.grid.seed);
  grid.finish();

  Section model(section("model"), "model", lines);
  model.read("x0", c.model.x0);
  model.read("b0", c.model.b0);
  model.read("sigma0", c.model.sigma0);
  model.read("h", c.model.h);
  model.read("b_u", c.model.b_u);
  model.read("sigma_shift", c.model.sigma_shift);
  model.read("f0_x", c.model.f0_x);
  model.read("f0_u", c.model.f0_u);
  model.read("f0_u2", c.model.f0_u2);
  model.read("u", c.model.u);
  model.read("u_lo", c.model.u_lo);
  model.read("u_hi", c.model.u_hi);
  model.read("filtration", c.model.filtration);
  model.finish();

  Section price(section("price"), "price", lines);
  price.read("mode", c.price.mode);
  price.read("rho", c.price.rho);
  price.read("theta", c.price.theta);
  price.finish();

  Section solver(section("solver"), "solver", lines);
  solver.read("method", c.solver.method);
  solver.read("degree", c.solver.degree);
  solver.read("psi_tol", c.solver.psi_tol);
  solver.read("max_order", c.solver.max_order);
  solver.read("epsilon", c.solver.epsilon);
  solver.read("malliavin_degree", c.solver.malliavin_degree);
  solver.read("max_iter", c.solver.max_iter);
  solver.read("reflection_tol", c.solver.reflection_tol);
  solver.read("candidate", c.solver.candidate);
  solver.read("damping", c.solver.damping);
  solver.read("experimental_malliavin", c.solver.experimental_malliavin);
  solver.finish();

  Section checks(section("checks"), "checks", lines);
  checks.read("k_se", c.checks.k_se);
  checks.read("abs_tol", c.checks.abs_tol);
  checks.read("atom_times", c.checks.atom_times);
  checks.read("atom_sizes", c.checks.atom_sizes);
  checks.read("atom_scale", c.checks.atom_scale);
  checks.read("scaling_probe", c.checks.scaling_probe);
  checks.read("policy", c.checks.policy);
  checks.read("lambda", c.checks.lambda);
  checks.read("bump_starts", c.checks.bump_starts);
  checks.read("bump_width", c.checks.bump_width);
  checks.read("gradient", c.checks.gradient);
  checks.finish();

  while (c.price.theta.size() < 3 && !c.price.theta.empty()) c.price.theta.push_back(0.0);

  try {
    validate_config(c);
  } catch (const ConfigError& e) {
    std::string key = e.key();
    std::size_t line = 0;
    // Prefer the most specific key that appeared in the text.
    while (!key.empty()) {
      if (auto it = lines.find(key); it != lines.end()) {
        line = it->second;
        break;
      }
      const auto dot = key.rfind('.');
      key = dot == std::string::npos ? "" : key.substr(0, dot);
    }
    throw ConfigError(e.key(), line, e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream o;
  o << "out = " << quote(c.out) << "\n\n";
  o << "[grid]\n"
    << "T = " << format_double(c.grid.T) << "\n"
    << "N = " << c.grid.N << "\n"
    << "M = " << c.grid.M << "\n"
    << "seed = " << c.grid.seed << "\n\n";
  o << "[model]\n"
    << "x0 = " << format_double(c.model.x0) << "\n"
    << "b0 = " << preset(c.model.b0) << "\n"
    << "sigma0 = " << preset(c.model.sigma0) << "\n"
    << "h = " << preset(c.model.h) << "\n"
    << "b_u = " << preset(c.model.b_u) << "\n"
    << "sigma_shift = " << preset(c.model.sigma_shift) << "\n"
    << "f0_x = " << format_double(c.model.f0_x) << "\n"
    << "f0_u = " << format_double(c.model.f0_u) << "\n"
    << "f0_u2 = " << format_double(c.model.f0_u2) << "\n"
    << "u = " << format_double(c.model.u) << "\n"
    << "u_lo = " << format_double(c.model.u_lo) << "\n"
    << "u_hi = " << format_double(c.model.u_hi) << "\n"
    << "filtration = " << quote(c.model.filtration) << "\n\n";
  o << "[price]\n"
    << "mode = " << quote(c.price.mode) << "\n"
    << "rho = " << preset(c.price.rho) << "\n"
    << "theta = " << array(c.price.theta) << "\n\n";
  o << "[solver]\n"
    << "method = " << quote(c.solver.method) << "\n"
    << "degree = " << c.solver.degree << "\n"
    << "psi_tol = " << format_double(c.solver.psi_tol) << "\n"
    << "max_order = " << c.solver.max_order << "\n"
    << "epsilon = " << format_double(c.solver.epsilon) << "\n"
    << "malliavin_degree = " << c.solver.malliavin_degree << "\n"
    << "max_iter = " << c.solver.max_iter << "\n"
    << "reflection_tol = " << format_double(c.solver.reflection_tol) << "\n"
    << "candidate = " << quote(c.solver.candidate) << "\n"
    << "damping = " << format_double(c.solver.damping) << "\n"
    << "experimental_malliavin = " << (c.solver.experimental_malliavin ? "true" : "false") << "\n\n";
  o << "[checks]\n"
    << "k_se = " << format_double(c.checks.k_se) << "\n"
    << "abs_tol = " << format_double(c.checks.abs_tol) << "\n"
    << "atom_times = " << array(c.checks.atom_times) << "\n"
    << "atom_sizes = " << array(c.checks.atom_sizes) << "\n"
    << "atom_scale = " << format_double(c.checks.atom_scale) << "\n"
    << "scaling_probe = " << (c.checks.scaling_probe ? "true" : "false") << "\n"
    << "policy = " << quote(c.checks.policy) << "\n"
    << "lambda = " << format_double(c.checks.lambda) << "\n"
    << "bump_starts = " << array(c.checks.bump_starts) << "\n"
    << "bump_width = " << format_double(c.checks.bump_width) << "\n"
    << "gradient = " << quote(c.checks.gradient) << "\n";
  return o.str();
}

TwoTimeKernel make_kernel(const PresetConfig& p, double) {
  if (p.kind == "constant") return TwoTimeKernel::constant(p.params.at(0));
  if (p.kind == "exp_decay") return TwoTimeKernel::exp_decay(p.params.at(0), p.params.at(1));
  if (p.kind == "poly") return TwoTimeKernel::poly(p.params);
  throw std::invalid_argument("unknown kernel preset '" + p.kind + "'");
}

TimeFunction make_function(const PresetConfig& p) {
  if (p.kind == "constant") return TimeFunction::constant(p.params.at(0));
  if (p.kind == "exponential") return TimeFunction::exponential(p.params.at(0), p.params.at(1));
  throw std::invalid_argument("unknown function preset '" + p.kind + "'");
}

TimeGrid make_grid(const RunConfig& c) { return TimeGrid(c.grid.T, c.grid.N); }

HarvestScenario make_scenario(const RunConfig& c) {
  HarvestScenario s;
  s.x0 = c.model.x0;
  s.b0 = make_kernel(c.model.b0, c.grid.T);
  s.sigma0 = make_function(c.model.sigma0);
  s.h = make_kernel(c.model.h, c.grid.T);
  s.theta = TerminalWeight{c.price.theta.at(0), c.price.theta.at(1), c.price.theta.at(2)};
  s.mode = price_mode_from_string(c.price.mode);
  s.rho = make_function(c.price.rho);
  return s;
}

ControlProblem make_problem(const RunConfig& c) {
  const TimeGrid grid = make_grid(c);
  ControlProblem p = make_scenario(c).problem(grid);
  p.state.drift.control = make_kernel(c.model.b_u, c.grid.T);
  p.state.diffusion.shift = make_kernel(c.model.sigma_shift, c.grid.T);
  p.reward.f0_x = c.model.f0_x;
  p.reward.f0_u = c.model.f0_u;
  p.reward.f0_u2 = c.model.f0_u2;
  p.set = ControlSet{c.model.u_lo, c.model.u_hi};
  return p;
}

RegularControl make_control(const RunConfig& c, const TimeGrid& grid) {
  return RegularControl::constant(grid, ControlSet{c.model.u_lo, c.model.u_hi}, c.model.u);
}

CheckTolerances make_tolerances(const RunConfig& c) { return {c.checks.k_se, c.checks.abs_tol}; }

AdjointOptions make_adjoint_options(const RunConfig& c) {
  AdjointOptions o;
  o.regression.degree = c.solver.degree;
  return o;
}

HarvestOptions make_harvest_options(const RunConfig& c) {
  HarvestOptions o;
  o.reflection.adjoint = make_adjoint_options(c);
  o.reflection.max_iter = c.solver.max_iter;
  o.reflection.tol = c.solver.reflection_tol;
  o.tol = make_tolerances(c);
  o.alternatives.atom_times = c.checks.atom_times;
  o.alternatives.atom_sizes = c.checks.atom_sizes;
  o.alternatives.scale = c.checks.atom_scale;
  o.scaling_probe = c.checks.scaling_probe;
  o.candidate = c.solver.candidate;
  o.coupled.adjoint = o.reflection.adjoint;
  o.coupled.max_iter = c.solver.max_iter;
  o.coupled.damping = c.solver.damping;
  return o;
}

}  // namespace volterra
