#pragma once

// Run configuration: flat "key = value" files, command-line overrides and a
// manifest writer whose output parses back to the same configuration.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulerfem/io.hpp"
#include "eulerfem/mesh.hpp"
#include "eulerfem/saddle.hpp"
#include "eulerfem/scenarios.hpp"
#include "eulerfem/stepper.hpp"

namespace eulerfem {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// mu_h = 0, h, or h^alpha with alpha in (0, 2).
struct MuMode {
  enum class Kind { Zero, H, Alpha };
  Kind kind = Kind::H;
  double alpha = 1.0;

  double value(double h) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::H: return h;
      default: return std::pow(h, alpha);
    }
  }
  bool operator==(const MuMode&) const = default;
};

inline std::string to_string(const MuMode& m) {
  switch (m.kind) {
    case MuMode::Kind::Zero: return "zero";
    case MuMode::Kind::H: return "h";
    default: return "alpha:" + format_double(m.alpha);
  }
}

inline MuMode parse_mu_mode(const std::string& s) {
  if (s == "zero") return {MuMode::Kind::Zero, 1.0};
  if (s == "h") return {MuMode::Kind::H, 1.0};
  if (s.rfind("alpha:", 0) == 0) {
    double a = 0.0;
    try {
      a = parse_double(s.substr(6));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad mu mode '" + s + "'");
    }
    if (!(a > 0.0 && a < 2.0)) throw ConfigError("mu mode alpha must lie in (0,2), got " + s.substr(6));
    return {MuMode::Kind::Alpha, a};
  }
  throw ConfigError("unknown mu mode '" + s + "' (expected zero, h or alpha:<v>)");
}

enum class Command { Convergence, Simulate, Verify };

struct RunConfig {
  std::string scenario = "taylor_green";
  std::vector<int> n{12, 24, 48, 96};
  std::optional<Rectangle> domain;          // scenario default when unset
  std::optional<BoundaryKind> boundary;     // scenario default when unset
  double dt = 1.0 / 160.0;
  double T = 1.0;
  std::vector<MuMode> mu{{MuMode::Kind::Zero, 1.0}, {MuMode::Kind::H, 1.0}};
  std::vector<double> snapshots;
  std::string out = "out";
  double tol = 1e-10;
  int max_iterations = 2000;
  SolverKind solver = SolverKind::Auto;
  bool upwind = true;
  ScenarioParams params;

  bool operator==(const RunConfig& o) const {
    return scenario == o.scenario && n == o.n && domain == o.domain && boundary == o.boundary && dt == o.dt &&
           T == o.T && mu == o.mu && snapshots == o.snapshots && out == o.out && tol == o.tol &&
           max_iterations == o.max_iterations && solver == o.solver && upwind == o.upwind &&
           params.lambda == o.params.lambda && params.delta == o.params.delta && params.rho == o.params.rho;
  }

  Scenario make_scenario() const {
    Scenario s = eulerfem::make_scenario(scenario, params);
    if (domain) s.domain = *domain;
    if (boundary) s.boundary_kind = *boundary;
    return s;
  }

  StepperConfig stepper(double h, const MuMode& mode) const {
    StepperConfig c;
    c.dt = dt;
    c.mu = mode.value(h);
    c.tolerance = tol;
    c.max_iterations = max_iterations;
    c.upwind = upwind;
    c.solver = solver;
    return c;
  }
};

inline RunConfig default_config(Command cmd) {
  RunConfig c;
  switch (cmd) {
    case Command::Convergence: break;
    case Command::Simulate:
      c.scenario = "shear_layer";
      c.n = {48};
      c.T = 8.0;
      c.snapshots = {2.0, 4.0, 6.0, 8.0};
      break;
    case Command::Verify:
      c.n = {8};
      c.T = 0.125;
      c.mu = {{MuMode::Kind::H, 1.0}};
      break;
  }
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_number(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const std::invalid_argument&) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
}

inline int to_int(const std::string& key, const std::string& v) {
  const double d = to_number(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(d);
}

}  // namespace detail

/// Applies one key/value pair. Unknown keys and malformed values throw ConfigError.
inline void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const std::string v = trim(value);
  if (key == "scenario") {
    if (v != "taylor_green" && v != "shear_layer") throw ConfigError("unknown scenario '" + v + "'");
    c.scenario = v;
  } else if (key == "n") {
    c.n.clear();
    for (const auto& s : split_list(v)) c.n.push_back(to_int(key, s));
  } else if (key == "domain") {
    const auto parts = split_list(v);
    if (parts.size() != 4) throw ConfigError("domain expects x0,y0,x1,y1");
    c.domain = Rectangle{to_number(key, parts[0]), to_number(key, parts[1]), to_number(key, parts[2]),
                         to_number(key, parts[3])};
  } else if (key == "boundary") {
    try {
      c.boundary = boundary_kind_from_string(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "dt") {
    c.dt = to_number(key, v);
  } else if (key == "T") {
    c.T = to_number(key, v);
  } else if (key == "mu") {
    c.mu.clear();
    for (const auto& s : split_list(v)) c.mu.push_back(parse_mu_mode(s));
  } else if (key == "snapshots") {
    c.snapshots.clear();
    for (const auto& s : split_list(v)) c.snapshots.push_back(to_number(key, s));
  } else if (key == "out") {
    c.out = v;
  } else if (key == "tol") {
    c.tol = to_number(key, v);
  } else if (key == "max_iterations") {
    c.max_iterations = to_int(key, v);
  } else if (key == "solver") {
    try {
      c.solver = solver_kind_from_string(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "upwind") {
    if (v == "true" || v == "1") c.upwind = true;
    else if (v == "false" || v == "0") c.upwind = false;
    else throw ConfigError("upwind expects true or false");
  } else if (key == "lambda") {
    c.params.lambda = to_number(key, v);
  } else if (key == "delta") {
    c.params.delta = to_number(key, v);
  } else if (key == "rho") {
    c.params.rho = to_number(key, v);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

inline void apply_config_text(RunConfig& c, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_key(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  apply_config_text(c, in);
}

inline RunConfig parse_config(const std::string& text, RunConfig base = RunConfig{}) {
  std::istringstream in(text);
  apply_config_text(base, in);
  return base;
}

/// Fills scenario-dependent defaults (domain, boundary).
inline RunConfig resolved(RunConfig c) {
  const Scenario s = eulerfem::make_scenario(c.scenario, c.params);
  if (!c.domain) c.domain = s.domain;
  if (!c.boundary) c.boundary = s.boundary_kind;
  return c;
}

inline void validate(const RunConfig& c) {
  if (c.n.empty()) throw ConfigError("no mesh size given");
  for (int n : c.n)
    if (n < 1) throw ConfigError("mesh size n must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt must be positive");
  if (!(c.T >= 0.0) || !std::isfinite(c.T)) throw ConfigError("T must be non-negative");
  if (c.mu.empty()) throw ConfigError("no mu mode given");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.max_iterations < 1) throw ConfigError("max_iterations must be positive");
  for (double s : c.snapshots)
    if (!(s >= 0.0 && s <= c.T)) throw ConfigError("snapshot time " + format_double(s) + " outside [0, T]");
  if (c.domain && !(c.domain->width() > 0.0 && c.domain->height() > 0.0)) throw ConfigError("degenerate domain");
  if (!(c.params.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(c.params.delta >= 0.0 && c.params.delta < 1.0)) throw ConfigError("delta must lie in [0,1)");
  if (!(c.params.rho > 0.0)) throw ConfigError("rho must be positive");
}

/// Every field, in a form parse_config reads back exactly.
inline void write_manifest(std::ostream& os, const RunConfig& c) {
  auto join = [](const auto& v, auto f) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
    return s;
  };
  os << "scenario = " << c.scenario << '\n';
  os << "n = " << join(c.n, [](int v) { return std::to_string(v); }) << '\n';
  if (c.domain)
    os << "domain = " << format_double(c.domain->x0) << ',' << format_double(c.domain->y0) << ','
       << format_double(c.domain->x1) << ',' << format_double(c.domain->y1) << '\n';
  if (c.boundary) os << "boundary = " << to_string(*c.boundary) << '\n';
  os << "dt = " << format_double(c.dt) << '\n';
  os << "T = " << format_double(c.T) << '\n';
  os << "mu = " << join(c.mu, [](const MuMode& m) { return to_string(m); }) << '\n';
  os << "snapshots = " << join(c.snapshots, [](double v) { return format_double(v); }) << '\n';
  os << "out = " << c.out << '\n';
  os << "tol = " << format_double(c.tol) << '\n';
  os << "max_iterations = " << c.max_iterations << '\n';
  os << "solver = " << to_string(c.solver) << '\n';
  os << "upwind = " << (c.upwind ? "true" : "false") << '\n';
  os << "lambda = " << format_double(c.params.lambda) << '\n';
  os << "delta = " << format_double(c.params.delta) << '\n';
  os << "rho = " << format_double(c.params.rho) << '\n';
}

}  // namespace eulerfem
