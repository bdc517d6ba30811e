#pragma once

// The three command-line commands. Each returns a process exit code:
// 0 success, 1 property or solver failure, 2 bad configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eulerfem/analysis.hpp"
#include "eulerfem/assembly.hpp"
#include "eulerfem/config.hpp"
#include "eulerfem/fespace.hpp"
#include "eulerfem/io.hpp"
#include "eulerfem/mesh.hpp"
#include "eulerfem/saddle.hpp"
#include "eulerfem/scenarios.hpp"
#include "eulerfem/stepper.hpp"
#include "eulerfem/study.hpp"

namespace eulerfem {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitBadConfig = 2 };

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

inline void prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

inline std::string mode_tag(const MuMode& m) {
  std::string s = to_string(m);
  for (char& c : s)
    if (c == ':') c = '-';
  return s;
}

}  // namespace detail

/// Runs every (mu mode, n) level and writes convergence.csv, convergence.md
/// and manifest.txt into cfg.out.
inline int cmd_convergence(const RunConfig& cfg_in, std::ostream& log) {
  const RunConfig cfg = resolved(cfg_in);
  validate(cfg);
  if (cfg.n.size() < 2) throw ConfigError("need >= 2 levels for a convergence study");
  detail::prepare_out_dir(cfg.out);
  {
    auto os = detail::open_output(std::filesystem::path(cfg.out) / "manifest.txt");
    write_manifest(os, cfg);
  }
  const auto levels = run_convergence_study(cfg);
  for (const auto& l : levels) {
    char line[256];
    std::snprintf(line, sizeof line, "mu=%-10s n=%-4d h=%.4f err_u=%.4e err_p=%.4e max_div=%.1e  %.1fs\n",
                  to_string(l.mode).c_str(), l.record.n, l.record.h, l.record.err_u_L2, l.record.err_p_L2,
                  l.max_divergence, l.seconds);
    log << line;
  }
  const auto rows = convergence_rows(levels);
  {
    auto os = detail::open_output(std::filesystem::path(cfg.out) / "convergence.csv");
    write_convergence_csv(os, rows);
  }
  {
    auto os = detail::open_output(std::filesystem::path(cfg.out) / "convergence.md");
    os << "# Convergence study: " << cfg.scenario << ", dt = " << format_double(cfg.dt)
       << ", T = " << format_double(cfg.T) << "\n";
    write_convergence_markdown(os, rows);
  }
  return kExitOk;
}

/// Writes, per mu mode, ledger_<mode>.csv and one VTK plus one field CSV
/// per snapshot, streaming as the run proceeds.
inline int cmd_simulate(const RunConfig& cfg_in, std::ostream& log) {
  const RunConfig cfg = resolved(cfg_in);
  validate(cfg);
  if (cfg.n.size() != 1) throw ConfigError("simulate takes exactly one mesh size");
  detail::prepare_out_dir(cfg.out);
  {
    auto os = detail::open_output(std::filesystem::path(cfg.out) / "manifest.txt");
    write_manifest(os, cfg);
  }
  std::vector<double> snaps = cfg.snapshots;
  std::sort(snaps.begin(), snaps.end());
  if (snaps.empty()) snaps.push_back(cfg.T);
  RunConfig run_cfg = cfg;
  run_cfg.snapshots = snaps;
  for (const MuMode& mode : cfg.mu) {
    const std::string tag = detail::mode_tag(mode);
    const std::filesystem::path dir(cfg.out);
    auto ledger = detail::open_output(dir / ("ledger_mu-" + tag + ".csv"));
    ledger << "step,t,kinetic,diff_dissip,jump_dissip,work,balance_residual\n";
    const auto sum = run_simulation(
        run_cfg, cfg.n.front(), mode,
        [&](const State& s, std::size_t i) {
          const std::string stem = cfg.scenario + "_mu-" + tag + "_t" + format_double(snaps[i]);
          auto vtk = detail::open_output(dir / (stem + ".vtk"));
          write_vtk(vtk, s, cfg.scenario + " mu=" + to_string(mode));
          auto csv = detail::open_output(dir / (stem + ".csv"));
          write_field_csv(csv, s);
        },
        [&](const EnergyLedgerRow& r) {
          write_ledger_csv_row(ledger, r);
          ledger.flush();
        });
    char line[256];
    std::snprintf(line, sizeof line, "mu=%-10s n=%d steps=%d kinetic %.10e -> %.10e  max_div=%.1e\n",
                  to_string(mode).c_str(), sum.n, sum.steps, sum.initial_kinetic, sum.final_kinetic,
                  sum.max_divergence);
    log << line;
  }
  return kExitOk;
}

struct PropertyResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace verify {

using Dense = Eigen::MatrixXd;

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Discretely divergence-free field with random stream-function values.
inline VelocityField random_solenoidal(const Mesh& mesh, std::mt19937_64& rng) {
  const DofLayout layout = make_layout(mesh);
  const DivergenceFreeBasis basis = make_divergence_free_basis(mesh, layout);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd psi(basis.curl.cols()), c(basis.harmonic.cols());
  for (auto& v : psi) v = U(rng);
  for (auto& v : c) v = U(rng);
  const Eigen::VectorXd x = basis.curl * psi + basis.harmonic * c;
  VelocityField w(mesh);
  for (Index i = 0; i < layout.num_velocity(); ++i) w.dofs[layout.unknown_to_face[i]] = x[i];
  return w;
}

inline PropertyResult mass_spd() {
  double worst = INFINITY;
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic}) {
    const Mesh mesh = build_structured_mesh(4, {0, 0, 1, 1}, kind);
    const Dense M = assemble_mass(mesh).matrix.toDense();
    const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Dense> es(M);
    worst = std::min(worst, asym > 1e-14 ? -1.0 : es.eigenvalues().minCoeff());
  }
  return {"mass_spd", worst > 0.0, "min eigenvalue " + sci(worst)};
}

inline PropertyResult diffusion_psd() {
  double worst = INFINITY;
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic}) {
    const Mesh mesh = build_structured_mesh(4, {0, 0, 1, 1}, kind);
    const Dense A = assemble_diffusion(mesh).matrix.toDense();
    Eigen::SelfAdjointEigenSolver<Dense> es(0.5 * (A + A.transpose()));
    worst = std::min(worst, es.eigenvalues().minCoeff() / std::max(1.0, es.eigenvalues().maxCoeff()));
  }
  return {"diffusion_psd", worst >= -1e-12, "min scaled eigenvalue " + sci(worst)};
}

/// U^T C(w) U against the upwind face sum for random (U, solenoidal w), and
/// its sign.
inline std::vector<PropertyResult> convection() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst_gap = 0.0, worst_sign = INFINITY;
  for (int trial = 0; trial < 20; ++trial) {
    const auto kind = trial % 2 ? BoundaryKind::Periodic : BoundaryKind::NoFlux;
    const Mesh mesh = build_structured_mesh(2 + trial % 3, {0, 0, 1, 1}, kind);
    const VelocityField w = random_solenoidal(mesh, rng);
    VelocityField u(mesh);
    for (auto& v : u.dofs) v = U(rng);
    if (kind == BoundaryKind::NoFlux)
      for (Index f = 0; f < mesh.num_faces(); ++f)
        if (mesh.face(f).is_boundary()) u.dofs[f] = 0.0;
    const double q = assemble_convection(mesh, w).quadratic(u.dofs);
    const double j = face_forms(w, u).upwind;
    worst_gap = std::max(worst_gap, std::abs(q - j));
    worst_sign = std::min(worst_sign, q);
  }
  return {{"convection_upwind_identity", worst_gap <= 1e-11, "max |U^T C U - J| = " + sci(worst_gap)},
          {"convection_dissipative", worst_sign >= -1e-12, "min U^T C U = " + sci(worst_sign)}};
}

inline PropertyResult interpolation_idempotent() {
  const Mesh mesh = build_structured_mesh(4, {0, 0, 1, 1}, BoundaryKind::NoFlux);
  const VelocityField u = interpolate(mesh, [](const Vec2& x) {
    return Vec2(std::sin(3 * x.x()) * x.y(), std::exp(x.x() * x.y()));
  });
  // re-interpolate the discrete field face by face from the owner cell
  VelocityField v(mesh);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const CellAffine uk = cell_affine(u, face.owner);
    for (const auto& q : segment_quadrature(face.a, face.b, 2)) v.dofs[f] += q.weight * uk(q.point).dot(face.normal);
  }
  const double gap = (u.dofs - v.dofs).cwiseAbs().maxCoeff();
  return {"interpolation_idempotent", gap <= 1e-14, "max flux change " + sci(gap)};
}

inline PropertyResult commuting_diagram() {
  const Mesh mesh = build_structured_mesh(4, {0, 0, 1, 1}, BoundaryKind::NoFlux);
  auto v = [](const Vec2& x) {
    return Vec2(x.x() * x.x() * x.x() * x.y() + x.x(), x.x() * x.x() * x.y() * x.y() - x.y());
  };
  auto div_v = [](const Vec2& x) { return 3 * x.x() * x.x() * x.y() + 1 + 2 * x.x() * x.x() * x.y() - 1; };
  const PressureField d = divergence(interpolate(mesh, v));
  const PressureField p = project_p0(mesh, div_v);
  const double gap = (d.dofs - p.dofs).cwiseAbs().maxCoeff();
  return {"commuting_diagram", gap <= 1e-12, "max |div Pi v - P0 div v| = " + sci(gap)};
}

inline PropertyResult interpolation_eoc(const Scenario& tg) {
  std::vector<double> err, hs;
  for (int n : {8, 16, 32}) {
    const Mesh mesh = build_structured_mesh(n, tg.domain, BoundaryKind::NoFlux);
    const State s = initial_state(mesh, tg.initial_velocity);
    err.push_back(l2_error_velocity(s, tg.exact_velocity, 0.0));
    hs.push_back(mesh.h());
  }
  const auto eoc = compute_eoc(err, hs);
  const double m = std::min(eoc[0], eoc[1]);
  return {"interpolation_eoc", m >= 0.9, "orders " + sci(eoc[0]) + ", " + sci(eoc[1])};
}

inline PropertyResult manufactured_residual(const Scenario& tg) {
  const auto r = sample_residuals(tg, 1000, 1.0);
  const double worst = std::max(r.max_momentum, r.max_divergence);
  return {"manufactured_residual", worst <= 1e-10, "max residual " + sci(worst)};
}

}  // namespace verify

/// Property battery on small meshes. The stepping properties use the
/// configuration's dt, T, tolerance, solver, upwind switch, first mu mode
/// and first mesh size.
inline std::vector<PropertyResult> run_properties(const RunConfig& cfg_in) {
  const RunConfig cfg = resolved(cfg_in);
  validate(cfg);
  std::vector<PropertyResult> out;
  auto guarded = [&](const std::string& name, const std::function<std::vector<PropertyResult>()>& f) {
    try {
      for (auto& r : f()) out.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  const Scenario tg = taylor_green(cfg.params.lambda);
  guarded("manufactured_residual", [&] { return std::vector{verify::manufactured_residual(tg)}; });
  guarded("mass_spd", [] { return std::vector{verify::mass_spd()}; });
  guarded("diffusion_psd", [] { return std::vector{verify::diffusion_psd()}; });
  guarded("convection", [] { return verify::convection(); });
  guarded("interpolation_idempotent", [] { return std::vector{verify::interpolation_idempotent()}; });
  guarded("commuting_diagram", [] { return std::vector{verify::commuting_diagram()}; });
  guarded("interpolation_eoc", [&] { return std::vector{verify::interpolation_eoc(tg)}; });

  const int n = cfg.n.front();
  const MuMode mode = cfg.mu.front();
  guarded("energy_identity", [&] {
    const Mesh mesh = build_structured_mesh(n, tg.domain, tg.boundary_kind);
    const StepperConfig scfg = cfg.stepper(mesh.h(), mode);
    const RunResult rr = run(mesh, scfg, tg, cfg.T, {cfg.T});
    const State s0 = initial_state(mesh, tg.initial_velocity);
    const double e0 = 0.5 * assemble_mass(mesh).quadratic(s0.u.dofs);
    const LedgerSummary ls = summarize(rr.ledger, e0);
    const State& last = rr.snapshots.back();
    double er = 0.0;
    for (const auto& g : polynomial_potential_gradients())
      er = std::max(er, std::abs(consistency_residual_div(last, g)));
    return std::vector<PropertyResult>{
        {"energy_identity", ls.max_abs_balance <= 1e-9 * e0,
         "max |balance| / E0 = " + verify::sci(ls.max_abs_balance / e0)},
        {"divergence_residual", rr.max_divergence <= 1e-10, "max |div u| = " + verify::sci(rr.max_divergence)},
        {"weak_divergence_zero", er <= 1e-10, "max |e_r| = " + verify::sci(er)}};
  });
  guarded("energy_monotone", [&] {
    RunConfig sl = cfg;
    sl.scenario = "shear_layer";
    sl.domain.reset();
    sl.boundary.reset();
    sl.snapshots.clear();
    const auto sum = run_simulation(sl, n, mode);
    return std::vector<PropertyResult>{{"energy_monotone", sum.max_kinetic_increase <= 1e-10 * sum.initial_kinetic,
                                        "max kinetic increase / E0 = " +
                                            verify::sci(sum.max_kinetic_increase / sum.initial_kinetic)}};
  });
  return out;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& log) {
  const auto results = run_properties(cfg);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    log << (r.pass ? "PASS " : "FAIL ") << r.name << "  (" << r.detail << ")\n";
    if (!r.pass) failed.push_back(r.name);
  }
  if (failed.empty()) {
    log << "all " << results.size() << " properties passed\n";
    return kExitOk;
  }
  log << failed.size() << " properties failed:";
  for (const auto& f : failed) log << ' ' << f;
  log << '\n';
  return kExitFailure;
}

}  // namespace eulerfem
