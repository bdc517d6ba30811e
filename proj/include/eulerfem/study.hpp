#pragma once

// Experiment drivers shared by the command-line tool and the acceptance
// suite: the convergence study against an exact solution and the
// unforced long-time simulation.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "eulerfem/analysis.hpp"
#include "eulerfem/config.hpp"
#include "eulerfem/mesh.hpp"
#include "eulerfem/stepper.hpp"

namespace eulerfem {

struct LevelResult {
  MuMode mode;
  ConvergenceRecord record;
  double linf_err_u = 0.0;        // max over steps of the L2 velocity error
  double e_m = 0.0;               // momentum consistency residual at T, phi = exact velocity
  double max_divergence = 0.0;
  double max_weak_div = 0.0;      // max over steps and polynomial psi of |(u_h, grad psi)|
  double max_balance = 0.0;       // max |balance residual| over steps
  double initial_kinetic = 0.0;
  double max_relative_residual = 0.0;
  int steps = 0;
  double seconds = 0.0;
};

/// Worker threads for independent runs: hardware concurrency, capped by
/// EULERFEM_THREADS when set to a positive integer.
inline unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EULERFEM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs jobs [0, count) on up to `threads` workers. Results are written by
/// index, so the outcome does not depend on scheduling. The first failing
/// job's exception (by index) is rethrown.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Gradients of psi = 1, x1, x1 x2, x1^2 x2.
inline const std::vector<std::function<Vec2(const Vec2&)>>& polynomial_potential_gradients() {
  static const std::vector<std::function<Vec2(const Vec2&)>> g = {
      [](const Vec2&) { return Vec2(0, 0); },
      [](const Vec2&) { return Vec2(1, 0); },
      [](const Vec2& x) { return Vec2(x.y(), x.x()); },
      [](const Vec2& x) { return Vec2(2 * x.x() * x.y(), x.x() * x.x()); }};
  return g;
}

/// One mesh level of a convergence study. cfg must be resolved.
inline LevelResult run_convergence_level(const RunConfig& cfg, int n, const MuMode& mode) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario sc = cfg.make_scenario();
  if (!sc.has_exact_solution()) throw ConfigError("scenario '" + sc.name + "' has no exact solution");
  const Mesh mesh = build_structured_mesh(n, sc.domain, sc.boundary_kind);
  const StepperConfig scfg = cfg.stepper(mesh.h(), mode);

  LevelResult out;
  out.mode = mode;
  std::vector<double> times, jumps;
  MomentumConsistency em({sc.exact_velocity, sc.exact_velocity_dt, sc.exact_velocity_gradient}, sc.forcing);
  const RunResult rr = run(mesh, scfg, sc, cfg.T, {cfg.T}, [&](const State& s, const EnergyLedgerRow* row) {
    if (!row) out.initial_kinetic = 0.5 * assemble_mass(mesh).quadratic(s.u.dofs);
    out.linf_err_u = std::max(out.linf_err_u, l2_error_velocity(s, sc.exact_velocity, s.t));
    times.push_back(s.t);
    jumps.push_back(jump_form(s.u, s.u, sc.exact_velocity, s.t));
    em.add(s);
    for (const auto& g : polynomial_potential_gradients())
      out.max_weak_div = std::max(out.max_weak_div, std::abs(consistency_residual_div(s, g)));
    if (row) out.max_balance = std::max(out.max_balance, std::abs(row->balance_residual));
  });
  const State& last = rr.snapshots.back();
  ConvergenceRecord& r = out.record;
  r.n = n;
  r.h = mesh.h();
  r.err_u_L2 = l2_error_velocity(last, sc.exact_velocity, last.t);
  r.err_p_L2 = l2_error_pressure(last, sc.exact_pressure, last.t);
  r.jump_seminorm = std::sqrt(trapezoid(times, jumps));
  r.sup_relative_energy = 0.5 * out.linf_err_u * out.linf_err_u;
  out.e_m = em.value();
  out.max_divergence = rr.max_divergence;
  out.max_relative_residual = rr.max_relative_residual;
  out.steps = static_cast<int>(rr.ledger.size());
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// All (mu mode, n) levels, grouped by mode in config order, with orders filled in.
inline std::vector<LevelResult> run_convergence_study(const RunConfig& cfg_in, unsigned threads = worker_threads()) {
  const RunConfig cfg = resolved(cfg_in);
  validate(cfg);
  if (cfg.n.size() < 2) throw ConfigError("convergence study needs >= 2 mesh levels");
  std::vector<int> sorted = cfg.n;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("convergence study has repeated mesh levels");

  std::vector<LevelResult> results(cfg.mu.size() * sorted.size());
  // largest meshes first so the longest jobs start early
  std::vector<std::size_t> order(results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sorted[a % sorted.size()] > sorted[b % sorted.size()];
  });
  parallel_for(order.size(), threads, [&](std::size_t k) {
    const std::size_t i = order[k];
    results[i] = run_convergence_level(cfg, sorted[i % sorted.size()], cfg.mu[i / sorted.size()]);
  });
  for (std::size_t m = 0; m < cfg.mu.size(); ++m) {
    std::vector<ConvergenceRecord> recs;
    for (std::size_t j = 0; j < sorted.size(); ++j) recs.push_back(results[m * sorted.size() + j].record);
    fill_orders(recs);
    for (std::size_t j = 0; j < sorted.size(); ++j) results[m * sorted.size() + j].record = recs[j];
  }
  return results;
}

inline std::vector<ConvergenceRow> convergence_rows(const std::vector<LevelResult>& levels) {
  std::vector<ConvergenceRow> rows;
  for (const auto& l : levels) rows.push_back({0, to_string(l.mode), l.record});
  return rows;
}

struct SimulationSummary {
  MuMode mode;
  int n = 0;
  double h = 0.0;
  double initial_kinetic = 0.0;
  double final_kinetic = 0.0;
  double max_kinetic_increase = -INFINITY;
  double max_divergence = 0.0;
  double max_balance = 0.0;
  int steps = 0;
};

/// Snapshot callback: (state, index into the snapshot list).
using SnapshotSink = std::function<void(const State&, std::size_t)>;

/// One mesh / mu mode of a time-dependent run. Ledger rows are passed to
/// on_row as they are produced so callers can stream them.
inline SimulationSummary run_simulation(const RunConfig& cfg_in, int n, const MuMode& mode,
                                        const SnapshotSink& on_snapshot = {},
                                        const std::function<void(const EnergyLedgerRow&)>& on_row = {}) {
  const RunConfig cfg = resolved(cfg_in);
  validate(cfg);
  const Scenario sc = cfg.make_scenario();
  const Mesh mesh = build_structured_mesh(n, sc.domain, sc.boundary_kind);
  SimulationSummary sum;
  sum.mode = mode;
  sum.n = n;
  sum.h = mesh.h();
  std::vector<double> snaps = cfg.snapshots;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next = 0;
  double prev = 0.0;
  const RunResult rr = run(mesh, cfg.stepper(mesh.h(), mode), sc, cfg.T, {}, [&](const State& s, const EnergyLedgerRow* row) {
    const double k = row ? row->kinetic : 0.5 * assemble_mass(mesh).quadratic(s.u.dofs);
    if (!row) {
      sum.initial_kinetic = k;
    } else {
      sum.max_kinetic_increase = std::max(sum.max_kinetic_increase, k - prev);
      sum.max_balance = std::max(sum.max_balance, std::abs(row->balance_residual));
      if (on_row) on_row(*row);
    }
    prev = k;
    sum.final_kinetic = k;
    // same selection rule as run(): first step time reaching each request
    const bool last = s.t == cfg.T;
    while (next < snaps.size() && (s.t >= snaps[next] - 1e-9 * cfg.dt || last)) {
      if (on_snapshot) on_snapshot(s, next);
      ++next;
    }
  });
  sum.max_divergence = rr.max_divergence;
  sum.steps = static_cast<int>(rr.ledger.size());
  return sum;
}

}  // namespace eulerfem
