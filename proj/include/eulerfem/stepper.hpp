#pragma once

// Time integration: backward Euler with the transport field frozen at the
// previous step,
//
//   M (u^{n+1} - u^n)/dt + C(u^n) u^{n+1} + mu A u^{n+1} - B^T p^{n+1} = F(t^{n+1})
//   B u^{n+1} = 0,
//
// one saddle-point solve per step. Testing with u^{n+1} gives the discrete
// energy balance recorded in the ledger.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eulerfem/assembly.hpp"
#include "eulerfem/fespace.hpp"
#include "eulerfem/mesh.hpp"
#include "eulerfem/saddle.hpp"
#include "eulerfem/scenarios.hpp"

namespace eulerfem {

struct State {
  double t = 0.0;
  VelocityField u;
  PressureField p;
};

using Trajectory = std::vector<State>;

struct StepperConfig {
  double dt = 6.25e-3;
  double mu = 0.0;
  double tolerance = 1e-10;
  int max_iterations = 2000;
  bool upwind = true;
  SolverKind solver = SolverKind::Auto;
};

inline void validate(const StepperConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(cfg.mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("linear tolerance must be positive");
  if (cfg.max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
}

/// One row per step. Dissipation and work entries are the increments over
/// the step; time_dissip = |u^{n+1} - u^n|_M^2 / 2 is the backward-Euler
/// numerical dissipation, and
///   balance = kinetic - kinetic_prev + time_dissip + diff_dissip + jump_dissip - work.
struct EnergyLedgerRow {
  int step = 0;
  double t = 0.0;
  double kinetic = 0.0;
  double diff_dissip = 0.0;
  double jump_dissip = 0.0;
  double work = 0.0;
  double time_dissip = 0.0;
  double balance_residual = 0.0;
};

using EnergyLedger = std::vector<EnergyLedgerRow>;

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double max_div) : std::runtime_error(what), max_div_(max_div) {}
  double max_divergence() const { return max_div_; }

 private:
  double max_div_;
};

class StepError : public std::runtime_error {
 public:
  StepError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// u = Pi_V u0, p = 0. Throws DivergenceError if the interpolant is not
/// discretely solenoidal to 1e-10.
template <VectorFunction F>
State initial_state(const Mesh& mesh, const F& u0) {
  State s{0.0, interpolate(mesh, u0), PressureField(mesh)};
  if (mesh.boundary_kind() == BoundaryKind::NoFlux)
    for (Index f = 0; f < mesh.num_faces(); ++f)
      if (mesh.face(f).is_boundary()) s.u.dofs[f] = 0.0;
  const double div = max_abs_divergence(s.u);
  if (!(div <= 1e-10))
    throw DivergenceError("initial velocity is not discretely divergence-free (max |div| = " +
                              std::to_string(div) + ")",
                          div);
  return s;
}

struct StepResult {
  State state;
  EnergyLedgerRow row;
  double relative_residual = 0.0;
  double max_divergence = 0.0;
};

class Stepper {
 public:
  Stepper(const Mesh& mesh, StepperConfig cfg)
      : mesh_(mesh),
        cfg_(cfg),
        layout_(make_layout(mesh)),
        solver_(mesh, layout_, cfg.solver, cfg.tolerance, cfg.max_iterations),
        mass_(assemble_mass(mesh)),
        diffusion_(assemble_diffusion(mesh)) {
    validate(cfg_);
    mass_triplets(mesh, 1.0, mass_t_);
    diffusion_triplets(mesh, 1.0, diffusion_t_);
  }

  const StepperConfig& config() const { return cfg_; }
  const SparseOperator& mass() const { return mass_; }

  double kinetic_energy(const VelocityField& u) const { return 0.5 * mass_.quadratic(u.dofs); }

  /// Advances by dt (defaults to the configured step). forcing may be empty.
  StepResult advance(const State& s, const TimeVectorFn& forcing, std::optional<double> dt_override = {}) {
    const double dt = dt_override.value_or(cfg_.dt);
    const double t1 = s.t + dt;
    Triplets k;
    k.reserve(mass_t_.size() * 2 + 36 * static_cast<std::size_t>(mesh_.num_faces()));
    for (const auto& e : mass_t_) k.emplace_back(e.row(), e.col(), e.value() / dt);
    for (const auto& e : diffusion_t_) k.emplace_back(e.row(), e.col(), cfg_.mu * e.value());
    convection_triplets(mesh_, s.u, ConvectionParts{true, true, cfg_.upwind}, 1.0, true, k);

    Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh_.num_faces());
    if (forcing) load = assemble_load(mesh_, forcing, t1);
    const Eigen::VectorXd rhs_u = mass_.apply(s.u.dofs) / dt + load;
    const SaddleSystem sys =
        build_saddle_system(mesh_, layout_, k, rhs_u, Eigen::VectorXd::Zero(mesh_.num_cells()));
    const SolveReport rep = solver_.solve(sys);

    StepResult out;
    out.relative_residual = rep.relative_residual;
    State& next = out.state;
    next.t = t1;
    next.u = VelocityField(mesh_);
    for (Index i = 0; i < layout_.num_velocity(); ++i) next.u.dofs[layout_.unknown_to_face[i]] = rep.x[i];
    next.p = p0_mean_zero(PressureField(mesh_, rep.x.segment(layout_.pressure_offset(), mesh_.num_cells())));
    if (!next.u.dofs.allFinite() || !next.p.dofs.allFinite()) throw SolverError("NaN in solution", NAN);
    out.max_divergence = max_abs_divergence(next.u);

    EnergyLedgerRow& row = out.row;
    row.t = t1;
    row.kinetic = kinetic_energy(next.u);
    const Eigen::VectorXd du = next.u.dofs - s.u.dofs;
    row.time_dissip = 0.5 * mass_.quadratic(du);
    row.diff_dissip = dt * cfg_.mu * diffusion_.quadratic(next.u.dofs);
    row.jump_dissip = cfg_.upwind ? dt * face_forms(s.u, next.u).upwind : 0.0;
    row.work = dt * load.dot(next.u.dofs);
    row.balance_residual =
        row.kinetic - kinetic_energy(s.u) + row.time_dissip + row.diff_dissip + row.jump_dissip - row.work;
    return out;
  }

 private:
  const Mesh& mesh_;
  StepperConfig cfg_;
  DofLayout layout_;
  SaddleSolver solver_;
  SparseOperator mass_, diffusion_;
  Triplets mass_t_, diffusion_t_;
};

/// Single step with a throwaway stepper.
inline State step(const State& state, const StepperConfig& cfg, const TimeVectorFn& forcing) {
  Stepper stepper(*state.u.mesh, cfg);
  return stepper.advance(state, forcing).state;
}

struct RunResult {
  Trajectory snapshots;
  EnergyLedger ledger;
  double max_divergence = 0.0;
  double max_relative_residual = 0.0;
};

/// Called after every step (and once for the initial state with row == nullptr).
using StepObserver = std::function<void(const State&, const EnergyLedgerRow*)>;

/// Number of steps to reach T with step dt, last step clipped.
inline int step_count(double T, double dt) {
  const double ratio = T / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(ratio));
}

/// Steps from t = 0 to T. Snapshots are taken at the first step time that
/// reaches each requested time (t = 0 gives the initial state).
inline RunResult run(const Mesh& mesh, const StepperConfig& cfg, const Scenario& scenario, double T,
                     std::vector<double> snapshot_times, const StepObserver& observer = {}) {
  validate(cfg);
  if (!(T >= 0.0)) throw std::invalid_argument("final time must be non-negative");
  std::sort(snapshot_times.begin(), snapshot_times.end());
  for (double s : snapshot_times)
    if (s < 0.0 || s > T * (1.0 + 1e-12) + 1e-12) throw std::invalid_argument("snapshot time outside [0, T]");

  RunResult result;
  State state = initial_state(mesh, scenario.initial_velocity);
  result.max_divergence = max_abs_divergence(state.u);
  const int steps = step_count(T, cfg.dt);
  std::size_t next_snap = 0;
  auto take_snapshots = [&](const State& s, bool last) {
    const double tol = 1e-9 * cfg.dt;
    while (next_snap < snapshot_times.size() && (s.t >= snapshot_times[next_snap] - tol || last)) {
      result.snapshots.push_back(s);
      ++next_snap;
    }
  };
  if (observer) observer(state, nullptr);
  take_snapshots(state, steps == 0);

  Stepper stepper(mesh, cfg);
  for (int k = 1; k <= steps; ++k) {
    const double t1 = k == steps ? T : k * cfg.dt;
    StepResult r;
    try {
      r = stepper.advance(state, scenario.forcing, t1 - state.t);
    } catch (const std::exception& e) {
      throw StepError(k, e.what());
    }
    r.state.t = t1;
    r.row.step = k;
    r.row.t = t1;
    result.max_divergence = std::max(result.max_divergence, r.max_divergence);
    result.max_relative_residual = std::max(result.max_relative_residual, r.relative_residual);
    result.ledger.push_back(r.row);
    state = std::move(r.state);
    if (observer) observer(state, &result.ledger.back());
    take_snapshots(state, k == steps);
  }
  return result;
}

}  // namespace eulerfem
