#pragma once

// Lowest-order Raviart-Thomas velocities and piecewise-constant pressures.
//
// A velocity degree of freedom is the flux u_f = int_f u.n_f ds through a
// face, measured along the face's owner->neighbor normal. On a cell K with
// corners p_0, p_1, p_2 the basis function for local face i (opposite p_i)
// is  s_i (x - p_i) / (2|K|),  where s_i = +1 if the face normal is outward
// from K. Every field therefore has the local form  u|_K = a_K + b_K x.

#include <cassert>
#include <concepts>
#include <numeric>

#include <Eigen/Core>

#include "eulerfem/mesh.hpp"
#include "eulerfem/quadrature.hpp"

namespace eulerfem {

template <class F>
concept VectorFunction = std::invocable<const F&, const Vec2&> &&
                         std::convertible_to<std::invoke_result_t<const F&, const Vec2&>, Vec2>;

template <class F>
concept ScalarFunction = std::invocable<const F&, const Vec2&> &&
                         std::convertible_to<std::invoke_result_t<const F&, const Vec2&>, double>;

/// RT0 coefficient vector, one flux per face. Holds a non-owning reference
/// to its mesh, which must outlive the field.
struct VelocityField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd dofs;

  VelocityField() = default;
  explicit VelocityField(const Mesh& m) : mesh(&m), dofs(Eigen::VectorXd::Zero(m.num_faces())) {}
  VelocityField(const Mesh& m, Eigen::VectorXd values) : mesh(&m), dofs(std::move(values)) {
    assert(dofs.size() == m.num_faces());
  }
};

/// P0 coefficient vector, one value per cell.
struct PressureField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd dofs;

  PressureField() = default;
  explicit PressureField(const Mesh& m) : mesh(&m), dofs(Eigen::VectorXd::Zero(m.num_cells())) {}
  PressureField(const Mesh& m, Eigen::VectorXd values) : mesh(&m), dofs(std::move(values)) {
    assert(dofs.size() == m.num_cells());
  }
};

/// u|_K = a + b x
struct CellAffine {
  Vec2 a = Vec2::Zero();
  double b = 0.0;

  Vec2 operator()(const Vec2& x) const { return a + b * x; }
};

/// Value at x of the oriented basis function attached to local face l of cell c.
inline Vec2 rt0_basis(const Mesh& mesh, Index c, int l, const Vec2& x) {
  const double scale = mesh.orientation(c, l) / (2.0 * mesh.geometry(c).area);
  return scale * (x - mesh.cell_points(c)[l]);
}

inline std::array<double, 3> barycentric(const Mesh& mesh, Index c, const Vec2& x) {
  const auto& p = mesh.cell_points(c);
  const double det2 = 2.0 * mesh.geometry(c).area;
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  const double l1 = cross(x - p[0], p[2] - p[0]) / det2;
  const double l2 = cross(p[1] - p[0], x - p[0]) / det2;
  return {1.0 - l1 - l2, l1, l2};
}

inline CellAffine cell_affine(const VelocityField& u, Index c) {
  const Mesh& mesh = *u.mesh;
  const auto& faces = mesh.cell_faces(c);
  const auto& p = mesh.cell_points(c);
  const double inv = 1.0 / (2.0 * mesh.geometry(c).area);
  CellAffine r;
  for (int l = 0; l < 3; ++l) {
    const double coeff = mesh.orientation(c, l) * u.dofs[faces[l]] * inv;
    r.b += coeff;
    r.a -= coeff * p[l];
  }
  return r;
}

/// Value of the RT0 field inside cell c (x in the cell's frame).
inline Vec2 eval(const VelocityField& u, Index c, const Vec2& x) {
#ifndef NDEBUG
  for (double l : barycentric(*u.mesh, c, x)) assert(l >= -1e-12 && "point outside cell");
#endif
  return cell_affine(u, c)(x);
}

/// Broken gradient; constant per cell and equal to b_K times the identity.
inline Mat2 eval_broken_grad(const VelocityField& u, Index c) {
  return cell_affine(u, c).b * Mat2::Identity();
}

/// Canonical interpolant: u_f = int_f v.n_f ds. Fluxes use 5-point Gauss on
/// both halves of each face (exact through degree 9), so the flux sums of
/// smooth solenoidal fields cancel to rounding.
template <VectorFunction F>
VelocityField interpolate(const Mesh& mesh, const F& v) {
  VelocityField u(mesh);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const Vec2 mid = face.midpoint();
    double flux = 0.0;
    for (const auto& [a, b] : {std::pair{face.a, mid}, std::pair{mid, face.b}})
      for (const auto& q : segment_quadrature(a, b, 5)) flux += q.weight * Vec2(v(q.point)).dot(face.normal);
    u.dofs[f] = flux;
  }
  return u;
}

/// Cellwise divergence  (sum of outward fluxes) / |K|.
inline PressureField divergence(const VelocityField& u) {
  const Mesh& mesh = *u.mesh;
  PressureField d(mesh);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    double s = 0.0;
    for (int l = 0; l < 3; ++l) s += mesh.orientation(c, l) * u.dofs[mesh.cell_faces(c)[l]];
    d.dofs[c] = s / mesh.geometry(c).area;
  }
  return d;
}

inline double max_abs_divergence(const VelocityField& u) {
  const PressureField d = divergence(u);
  return d.dofs.size() ? d.dofs.cwiseAbs().maxCoeff() : 0.0;
}

/// Area-weighted mean over the domain.
inline double p0_mean(const PressureField& p) {
  const Mesh& mesh = *p.mesh;
  double total = 0.0, area = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    total += p.dofs[c] * mesh.geometry(c).area;
    area += mesh.geometry(c).area;
  }
  return total / area;
}

inline PressureField p0_mean_zero(const PressureField& p) {
  PressureField r = p;
  r.dofs.array() -= p0_mean(p);
  return r;
}

/// Cell average of a scalar function (P0 projection).
template <ScalarFunction F>
PressureField project_p0(const Mesh& mesh, const F& g) {
  PressureField p(mesh);
  const CellQuadrature& rule = cell_quadrature_degree8();
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.geometry(c).area;
    double s = 0.0;
    for (const auto& q : rule.map(mesh.cell_points(c), area)) s += q.weight * g(q.point);
    p.dofs[c] = s / area;
  }
  return p;
}

}  // namespace eulerfem
