#pragma once

// Sparse operators for the semi-discrete scheme
//
//   <d_t u, phi> + <u.grad u, phi> - <p, div phi> + mu <grad u, grad phi>
//     - sum_{interior f} <(u.n)[u], {phi}>_f + sum_{interior f} <|u.n| [u], [phi]>_f = <f, phi>
//   <psi, div u> = 0
//
// with the jump [v] = v_owner - v_neighbor and average {v} taken across each
// interior face along its owner->neighbor normal. The convection form is
// assembled for a frozen transport field w, so C(w) is linear in u.

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eulerfem/fespace.hpp"
#include "eulerfem/mesh.hpp"
#include "eulerfem/quadrature.hpp"

namespace eulerfem {

enum class OperatorShape { VelocityVelocity, PressureVelocity };

using Triplet = Eigen::Triplet<double>;
using Triplets = std::vector<Triplet>;

struct SparseOperator {
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  Matrix matrix;
  OperatorShape shape = OperatorShape::VelocityVelocity;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix * x; }
  double quadratic(const Eigen::VectorXd& x) const { return x.dot(matrix * x); }
};

/// Sums duplicates, drops entries with |value| <= 1e-300. Entry order is
/// the compressed row order, so it is fixed for a fixed triplet sequence.
inline SparseOperator make_operator(Index rows, Index cols, const Triplets& triplets,
                                    OperatorShape shape) {
  SparseOperator op;
  op.shape = shape;
  op.matrix.resize(rows, cols);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.prune([](Index, Index, double v) { return std::abs(v) > 1e-300; });
  op.matrix.makeCompressed();
  return op;
}

struct ConvectionParts {
  bool cell = true;     // <w.grad u, phi>
  bool central = true;  // -<(w.n)[u], {phi}>
  bool upwind = true;   // <|w.n| [u], [phi]>
};

namespace detail {

// Local basis values at the points of a cell rule.
struct CellBasisTable {
  std::vector<QuadPoint> points;
  std::vector<std::array<Vec2, 3>> phi;
};

inline CellBasisTable tabulate(const Mesh& mesh, Index c, const CellQuadrature& rule) {
  CellBasisTable t;
  t.points = rule.map(mesh.cell_points(c), mesh.geometry(c).area);
  t.phi.resize(t.points.size());
  for (std::size_t q = 0; q < t.points.size(); ++q)
    for (int l = 0; l < 3; ++l) t.phi[q][l] = rt0_basis(mesh, c, l, t.points[q].point);
  return t;
}

inline void check_same_mesh(const Mesh& mesh, const VelocityField& w) {
  if (w.mesh != &mesh) throw std::invalid_argument("transport field lives on a different mesh");
}

}  // namespace detail

inline void mass_triplets(const Mesh& mesh, double scale, Triplets& out) {
  const CellQuadrature& rule = cell_quadrature_degree4();
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto t = detail::tabulate(mesh, c, rule);
    const auto& dofs = mesh.cell_faces(c);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < t.points.size(); ++q) s += t.points[q].weight * t.phi[q][i].dot(t.phi[q][j]);
        out.emplace_back(dofs[i], dofs[j], scale * s);
      }
  }
}

/// Broken H1 form: grad u|_K = b_K I, so int_K grad u : grad v = 2 |K| b_u b_v.
inline void diffusion_triplets(const Mesh& mesh, double scale, Triplets& out) {
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.geometry(c).area;
    const auto& dofs = mesh.cell_faces(c);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double sij = mesh.orientation(c, i) * mesh.orientation(c, j);
        out.emplace_back(dofs[i], dofs[j], scale * sij / (2.0 * area));
      }
  }
}

/// Rows are cells, columns faces: (B u)_K = int_K div u = signed flux sum.
inline void divergence_triplets(const Mesh& mesh, Index row_offset, Triplets& out) {
  for (Index c = 0; c < mesh.num_cells(); ++c)
    for (int l = 0; l < 3; ++l) out.emplace_back(row_offset + c, mesh.cell_faces(c)[l], mesh.orientation(c, l));
}

/// Convection matrix C(w), row = test dof, column = trial dof. With
/// keep_zeros the sparsity pattern depends only on the mesh.
inline void convection_triplets(const Mesh& mesh, const VelocityField& w, const ConvectionParts& parts,
                                double scale, bool keep_zeros, Triplets& out) {
  detail::check_same_mesh(mesh, w);
  if (parts.cell) {
    const CellQuadrature& rule = cell_quadrature_degree4();
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      const auto t = detail::tabulate(mesh, c, rule);
      const CellAffine wk = cell_affine(w, c);
      const double inv = 1.0 / (2.0 * mesh.geometry(c).area);
      const auto& dofs = mesh.cell_faces(c);
      // (w.grad) phi_j = b_j w with b_j = s_j / (2|K|)
      for (int i = 0; i < 3; ++i) {
        double wphi = 0.0;
        for (std::size_t q = 0; q < t.points.size(); ++q)
          wphi += t.points[q].weight * wk(t.points[q].point).dot(t.phi[q][i]);
        for (int j = 0; j < 3; ++j) {
          const double v = scale * mesh.orientation(c, j) * inv * wphi;
          if (keep_zeros || v != 0.0) out.emplace_back(dofs[i], dofs[j], v);
        }
      }
    }
  }
  if (!parts.central && !parts.upwind) return;
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.is_boundary()) continue;
    const double wn = w.dofs[f] / face.length;
    const double central = parts.central ? wn : 0.0;
    const double upwind = parts.upwind ? std::abs(wn) : 0.0;
    if (!keep_zeros && central == 0.0 && upwind == 0.0) continue;
    const std::array<Index, 2> cells{face.owner, face.neighbor};
    std::array<Index, 6> dofs{};
    for (int side = 0; side < 2; ++side)
      for (int l = 0; l < 3; ++l) dofs[3 * side + l] = mesh.cell_faces(cells[side])[l];
    std::array<std::array<double, 6>, 6> local{};
    for (const auto& q : face_quadrature_points(face, 3)) {
      std::array<Vec2, 6> phi;
      const std::array<Vec2, 2> x{q.point, q.point + face.shift};
      for (int side = 0; side < 2; ++side)
        for (int l = 0; l < 3; ++l) phi[3 * side + l] = rt0_basis(mesh, cells[side], l, x[side]);
      for (int i = 0; i < 6; ++i) {
        const double jump_i = i < 3 ? 1.0 : -1.0;
        for (int j = 0; j < 6; ++j) {
          const double jump_j = j < 3 ? 1.0 : -1.0;
          const double pp = phi[i].dot(phi[j]);
          local[i][j] += q.weight * (-central * jump_j * 0.5 + upwind * jump_j * jump_i) * pp;
        }
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        const double v = scale * local[i][j];
        if (keep_zeros || v != 0.0) out.emplace_back(dofs[i], dofs[j], v);
      }
  }
}

inline SparseOperator assemble_mass(const Mesh& mesh) {
  Triplets t;
  mass_triplets(mesh, 1.0, t);
  return make_operator(mesh.num_faces(), mesh.num_faces(), t, OperatorShape::VelocityVelocity);
}

inline SparseOperator assemble_diffusion(const Mesh& mesh) {
  Triplets t;
  diffusion_triplets(mesh, 1.0, t);
  return make_operator(mesh.num_faces(), mesh.num_faces(), t, OperatorShape::VelocityVelocity);
}

inline SparseOperator assemble_divergence(const Mesh& mesh) {
  Triplets t;
  divergence_triplets(mesh, 0, t);
  return make_operator(mesh.num_cells(), mesh.num_faces(), t, OperatorShape::PressureVelocity);
}

inline SparseOperator assemble_convection(const Mesh& mesh, const VelocityField& w,
                                          const ConvectionParts& parts = {}) {
  Triplets t;
  convection_triplets(mesh, w, parts, 1.0, false, t);
  return make_operator(mesh.num_faces(), mesh.num_faces(), t, OperatorShape::VelocityVelocity);
}

/// F_i = int f(t, x) . phi_i dx, degree-4 cell quadrature.
template <class F>
  requires std::invocable<const F&, double, const Vec2&>
Eigen::VectorXd assemble_load(const Mesh& mesh, const F& f, double t) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.num_faces());
  const CellQuadrature& rule = cell_quadrature_degree4();
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto tab = detail::tabulate(mesh, c, rule);
    const auto& dofs = mesh.cell_faces(c);
    for (std::size_t q = 0; q < tab.points.size(); ++q) {
      const Vec2 fq = f(t, tab.points[q].point);
      for (int i = 0; i < 3; ++i) load[dofs[i]] += tab.points[q].weight * fq.dot(tab.phi[q][i]);
    }
  }
  return load;
}

/// int_Omega u . grad(psi) dx with the degree-8 rule; grad_psi returns the
/// gradient of psi at a point of the fundamental domain's frame.
template <VectorFunction G>
double weak_div_pairing(const VelocityField& u, const G& grad_psi) {
  const Mesh& mesh = *u.mesh;
  const CellQuadrature& rule = cell_quadrature_degree8();
  double total = 0.0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const CellAffine uk = cell_affine(u, c);
    double s = 0.0;
    for (const auto& q : rule.map(mesh.cell_points(c), mesh.geometry(c).area))
      s += q.weight * uk(q.point).dot(grad_psi(q.point));
    total += s;
  }
  return total;
}

/// Face forms evaluated directly from traces, independent of the matrices:
///   upwind:  sum_f int_f |w.n| |[u]|^2
///   central: sum_f int_f (w.n) [u].{u}
struct FaceForms {
  double upwind = 0.0;
  double central = 0.0;
};

inline FaceForms face_forms(const VelocityField& w, const VelocityField& u) {
  const Mesh& mesh = *u.mesh;
  detail::check_same_mesh(mesh, w);
  FaceForms r;
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.is_boundary()) continue;
    const double wn = w.dofs[f] / face.length;
    const CellAffine uo = cell_affine(u, face.owner), un = cell_affine(u, face.neighbor);
    for (const auto& q : face_quadrature_points(face, 3)) {
      const Vec2 vo = uo(q.point), vn = un(q.point + face.shift);
      const Vec2 jump = vo - vn;
      r.upwind += q.weight * std::abs(wn) * jump.squaredNorm();
      r.central += q.weight * wn * jump.dot(0.5 * (vo + vn));
    }
  }
  return r;
}

}  // namespace eulerfem
