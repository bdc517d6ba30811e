#pragma once

// Error norms, relative energy, jump seminorm, consistency residuals,
// convergence orders and vorticity.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "eulerfem/assembly.hpp"
#include "eulerfem/fespace.hpp"
#include "eulerfem/quadrature.hpp"
#include "eulerfem/scenarios.hpp"
#include "eulerfem/stepper.hpp"

namespace eulerfem {

struct ConvergenceRecord {
  int n = 0;
  double h = 0.0;
  double err_u_L2 = 0.0;
  double err_p_L2 = 0.0;
  double jump_seminorm = 0.0;
  double sup_relative_energy = 0.0;
  std::optional<double> eoc_u;
  std::optional<double> eoc_p;
};

/// sqrt(sum_K int_K |u_h - u(t)|^2), degree-8 quadrature.
template <class F>
  requires std::invocable<const F&, double, const Vec2&>
double l2_error_velocity(const State& state, const F& exact, double t) {
  const Mesh& mesh = *state.u.mesh;
  const CellQuadrature& rule = cell_quadrature_degree8();
  double sum = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const CellAffine uk = cell_affine(state.u, c);
    for (const auto& q : rule.map(mesh.cell_points(c), mesh.geometry(c).area))
      sum += q.weight * (uk(q.point) - Vec2(exact(t, q.point))).squaredNorm();
  }
  return std::sqrt(sum);
}

/// L2 pressure error after removing the area-weighted mean of both fields.
template <class F>
  requires std::invocable<const F&, double, const Vec2&>
double l2_error_pressure(const State& state, const F& exact_p, double t) {
  const Mesh& mesh = *state.p.mesh;
  const CellQuadrature& rule = cell_quadrature_degree8();
  const double ph_mean = p0_mean(state.p);
  double exact_total = 0.0, area = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    area += mesh.geometry(c).area;
    for (const auto& q : rule.map(mesh.cell_points(c), mesh.geometry(c).area))
      exact_total += q.weight * exact_p(t, q.point);
  }
  const double exact_mean = exact_total / area;
  double sum = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const double ph = state.p.dofs[c] - ph_mean;
    for (const auto& q : rule.map(mesh.cell_points(c), mesh.geometry(c).area)) {
      const double d = ph - (exact_p(t, q.point) - exact_mean);
      sum += q.weight * d * d;
    }
  }
  return std::sqrt(sum);
}

/// R_E(u_h | u) = int |u_h - u|^2 / 2.
template <class F>
  requires std::invocable<const F&, double, const Vec2&>
double relative_energy(const State& state, const F& exact, double t) {
  const double e = l2_error_velocity(state, exact, t);
  return 0.5 * e * e;
}

/// Trapezoidal time integral of samples (t_k, v_k).
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (v[k] + v[k - 1]);
  return s;
}

/// sum_{interior f} int_f |w.n| |[u - exact]|^2 at one time. exact may be
/// empty; a continuous exact field has no jump, so it only enters through
/// rounding.
inline double jump_form(const VelocityField& w, const VelocityField& u, const TimeVectorFn& exact = {},
                        double t = 0.0) {
  const Mesh& mesh = *u.mesh;
  double s = 0.0;
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.is_boundary()) continue;
    const double wn = std::abs(w.dofs[f]) / face.length;
    if (wn == 0.0) continue;
    const CellAffine uo = cell_affine(u, face.owner), un = cell_affine(u, face.neighbor);
    for (const auto& q : face_quadrature_points(face, 3)) {
      const Vec2 xo = q.point, xn = q.point + face.shift;
      Vec2 jump = uo(xo) - un(xn);
      if (exact) jump -= exact(t, xo) - exact(t, mesh.wrap(xn));
      s += q.weight * wn * jump.squaredNorm();
    }
  }
  return s;
}

/// ( int_0^T sum_f int_f |u_h.n| |[u_h - u]|^2 dt )^{1/2}, trapezoid in time.
inline double jump_seminorm(const Trajectory& trajectory, const TimeVectorFn& exact = {}) {
  std::vector<double> t, v;
  for (const State& s : trajectory) {
    t.push_back(s.t);
    v.push_back(jump_form(s.u, s.u, exact, s.t));
  }
  return std::sqrt(trapezoid(t, v));
}

/// Smooth divergence-free test function with its time derivative and
/// gradient ((i,j) = d_j phi_i).
struct MomentumTestFunction {
  TimeVectorFn value;
  TimeVectorFn dt;
  TimeGradientFn gradient;
};

/// Incremental e_m(tau, h, phi):
///   [<u_h, phi>]_0^tau - int_0^tau (<u_h, d_t phi> + <u_h (x) u_h, grad phi> + <f, phi>) dt
/// with degree-8 quadrature in space and the trapezoid rule in time. The
/// forcing term is dropped when forcing is empty.
class MomentumConsistency {
 public:
  MomentumConsistency(MomentumTestFunction phi, TimeVectorFn forcing = {})
      : phi_(std::move(phi)), forcing_(std::move(forcing)) {}

  void add(const State& s) {
    const Mesh& mesh = *s.u.mesh;
    if (first_) check_solenoidal(mesh, s.t);
    const CellQuadrature& rule = cell_quadrature_degree8();
    double pair = 0.0, flux = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      const CellAffine uk = cell_affine(s.u, c);
      for (const auto& q : rule.map(mesh.cell_points(c), mesh.geometry(c).area)) {
        const Vec2 u = uk(q.point);
        pair += q.weight * u.dot(phi_.value(s.t, q.point));
        double integrand = u.dot(phi_.dt(s.t, q.point)) + u.dot(phi_.gradient(s.t, q.point) * u);
        if (forcing_) integrand += forcing_(s.t, q.point).dot(phi_.value(s.t, q.point));
        flux += q.weight * integrand;
      }
    }
    if (first_) {
      pair0_ = pair;
      first_ = false;
    } else {
      integral_ += 0.5 * (s.t - t_prev_) * (flux + flux_prev_);
    }
    t_prev_ = s.t;
    flux_prev_ = flux;
    value_ = pair - pair0_ - integral_;
    sup_ = std::max(sup_, std::abs(value_));
  }

  double value() const { return value_; }
  double sup_abs() const { return sup_; }

 private:
  void check_solenoidal(const Mesh& mesh, double t) const {
    const CellQuadrature& rule = cell_quadrature_degree8();
    for (Index c = 0; c < mesh.num_cells(); ++c)
      for (const auto& q : rule.map(mesh.cell_points(c), mesh.geometry(c).area))
        if (std::abs(phi_.gradient(t, q.point).trace()) > 1e-8)
          throw std::invalid_argument("momentum test function is not divergence-free");
  }

  MomentumTestFunction phi_;
  TimeVectorFn forcing_;
  bool first_ = true;
  double pair0_ = 0.0, integral_ = 0.0, t_prev_ = 0.0, flux_prev_ = 0.0, value_ = 0.0, sup_ = 0.0;
};

/// e_m at tau from a trajectory that starts at t = 0 (states after tau are ignored).
inline double consistency_residual_momentum(const Trajectory& trajectory, const MomentumTestFunction& phi,
                                            double tau, const TimeVectorFn& forcing = {}) {
  MomentumConsistency acc(phi, forcing);
  for (const State& s : trajectory) {
    if (s.t > tau + 1e-12) break;
    acc.add(s);
  }
  return acc.value();
}

/// e_r(h, psi) = (u_h, grad psi).
template <VectorFunction G>
double consistency_residual_div(const State& state, const G& grad_psi) {
  return weak_div_pairing(state.u, grad_psi);
}

/// order_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i), one entry per consecutive pair.
inline std::vector<double> compute_eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw std::invalid_argument("compute_eoc: need two equal-length lists of at least 2 entries");
  for (double e : errors)
    if (!(e > 0.0)) throw std::invalid_argument("compute_eoc: errors must be positive");
  for (double h : hs)
    if (!(h > 0.0)) throw std::invalid_argument("compute_eoc: mesh sizes must be positive");
  std::vector<double> orders;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (hs[i] == hs[i - 1]) throw std::invalid_argument("compute_eoc: repeated mesh size");
    orders.push_back(std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]));
  }
  return orders;
}

/// Fills eoc_u / eoc_p along a study ordered by decreasing h.
inline void fill_orders(std::vector<ConvergenceRecord>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].h < rows[i - 1].h)) throw std::invalid_argument("convergence study must refine h");
    rows[i].eoc_u = compute_eoc({rows[i - 1].err_u_L2, rows[i].err_u_L2}, {rows[i - 1].h, rows[i].h})[0];
    rows[i].eoc_p = compute_eoc({rows[i - 1].err_p_L2, rows[i].err_p_L2}, {rows[i - 1].h, rows[i].h})[0];
  }
}

/// Cellwise vorticity as the circulation of the face-averaged tangential
/// trace, omega_K = (1/|K|) sum_f int_f {u}.t_K ds. The broken curl of an
/// RT0 field vanishes identically (grad u|_K = b_K I), so all vorticity
/// lives in the tangential jumps.
inline PressureField vorticity(const State& state) {
  const VelocityField& u = state.u;
  const Mesh& mesh = *u.mesh;
  PressureField w(mesh);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& p = mesh.cell_points(c);
    double circ = 0.0;
    for (int l = 0; l < 3; ++l) {
      const Vec2 a = p[(l + 1) % 3], b = p[(l + 2) % 3];
      const Vec2 tangent = (b - a).normalized();
      const Face& face = mesh.face(mesh.cell_faces(c)[l]);
      const bool own = face.owner == c;
      const CellAffine here = cell_affine(u, c);
      std::optional<CellAffine> there;
      Vec2 offset = Vec2::Zero();  // this cell's frame -> other cell's frame
      if (!face.is_boundary()) {
        const Index other = own ? face.neighbor : face.owner;
        there = cell_affine(u, other);
        offset = own ? face.shift : Vec2(-face.shift);
      }
      for (const auto& q : segment_quadrature(a, b, 3)) {
        Vec2 avg = here(q.point);
        if (there) avg = 0.5 * (avg + (*there)(q.point + offset));
        circ += q.weight * avg.dot(tangent);
      }
    }
    w.dofs[c] = circ / mesh.geometry(c).area;
  }
  return w;
}

struct LedgerSummary {
  double max_abs_balance = 0.0;
  double max_kinetic_increase = -INFINITY;  // max over steps of K_{n+1} - K_n
  double min_dissipation = INFINITY;
};

inline LedgerSummary summarize(const EnergyLedger& ledger, double initial_kinetic) {
  LedgerSummary s;
  double prev = initial_kinetic;
  for (const auto& r : ledger) {
    s.max_abs_balance = std::max(s.max_abs_balance, std::abs(r.balance_residual));
    s.max_kinetic_increase = std::max(s.max_kinetic_increase, r.kinetic - prev);
    s.min_dissipation = std::min({s.min_dissipation, r.diff_dissip, r.jump_dissip, r.time_dissip});
    prev = r.kinetic;
  }
  return s;
}

}  // namespace eulerfem
