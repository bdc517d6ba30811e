// eulerfem command-line driver: convergence | simulate | verify

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eulerfem/eulerfem.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> n, dt, T, mu, scenario, out, tol, solver, snapshots;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--n", o.n, "mesh subdivisions per side (comma list for convergence)");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--T", o.T, "final time");
  cmd->add_option("--mu", o.mu, "artificial diffusion: zero | h | alpha:<v> (comma list allowed)");
  cmd->add_option("--scenario", o.scenario, "taylor_green | shear_layer");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--tol", o.tol, "linear solve relative tolerance");
  cmd->add_option("--solver", o.solver, "auto | nullspace | direct | iterative");
  cmd->add_option("--snapshots", o.snapshots, "snapshot times (comma list)");
}

eulerfem::RunConfig build_config(eulerfem::Command command, const Overrides& o) {
  eulerfem::RunConfig cfg = eulerfem::default_config(command);
  if (!o.config.empty()) eulerfem::apply_config_file(cfg, o.config);
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) eulerfem::set_key(cfg, key, *v);
  };
  set("scenario", o.scenario);
  set("n", o.n);
  set("dt", o.dt);
  set("T", o.T);
  set("mu", o.mu);
  set("out", o.out);
  set("tol", o.tol);
  set("solver", o.solver);
  set("snapshots", o.snapshots);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RT0/P0 finite elements for the 2D incompressible Euler equations"};
  app.require_subcommand(1);
  Overrides conv, sim, ver;
  auto* c = app.add_subcommand("convergence", "error and order table against the exact solution");
  auto* s = app.add_subcommand("simulate", "time-dependent run with VTK snapshots and an energy ledger");
  auto* v = app.add_subcommand("verify", "property battery on small meshes");
  add_flags(c, conv);
  add_flags(s, sim);
  add_flags(v, ver);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : eulerfem::kExitBadConfig;
  }

  try {
    if (c->parsed()) return eulerfem::cmd_convergence(build_config(eulerfem::Command::Convergence, conv), std::cout);
    if (s->parsed()) return eulerfem::cmd_simulate(build_config(eulerfem::Command::Simulate, sim), std::cout);
    return eulerfem::cmd_verify(build_config(eulerfem::Command::Verify, ver), std::cout);
  } catch (const eulerfem::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return eulerfem::kExitBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return eulerfem::kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return eulerfem::kExitFailure;
  }
}
