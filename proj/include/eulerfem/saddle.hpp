#pragma once

// Block system for one implicit step,
//
//   [ K    -B^T   0 ] [ u      ]   [ rhs_u ]
//   [ -B    0     m ] [ p      ] = [ rhs_p ]
//   [ 0     m^T   0 ] [ lambda ]   [ 0     ]
//
// where m_K = |K| fixes the pressure mean. On no-flux meshes the boundary
// fluxes are essential (zero) and are removed from the unknowns.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "eulerfem/assembly.hpp"
#include "eulerfem/mesh.hpp"

namespace eulerfem {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct DofLayout {
  std::vector<Index> face_to_unknown;  // -1 for constrained faces
  std::vector<Index> unknown_to_face;
  Index num_cells = 0;

  Index num_velocity() const { return static_cast<Index>(unknown_to_face.size()); }
  Index pressure_offset() const { return num_velocity(); }
  Index multiplier() const { return num_velocity() + num_cells; }
  Index size() const { return multiplier() + 1; }
};

inline DofLayout make_layout(const Mesh& mesh) {
  DofLayout layout;
  layout.num_cells = mesh.num_cells();
  layout.face_to_unknown.assign(mesh.num_faces(), -1);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.face(f).is_boundary()) continue;
    layout.face_to_unknown[f] = static_cast<Index>(layout.unknown_to_face.size());
    layout.unknown_to_face.push_back(f);
  }
  return layout;
}

struct SaddleSystem {
  DofLayout layout;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

/// velocity: face-indexed triplets of K. rhs_u: face-indexed. rhs_p: cells.
inline SaddleSystem build_saddle_system(const Mesh& mesh, const DofLayout& layout, const Triplets& velocity,
                                        const Eigen::VectorXd& rhs_u, const Eigen::VectorXd& rhs_p) {
  SaddleSystem sys;
  sys.layout = layout;
  Triplets t;
  t.reserve(velocity.size() + 6 * mesh.num_cells() + 2 * mesh.num_cells());
  for (const auto& e : velocity) {
    const Index r = layout.face_to_unknown[e.row()], c = layout.face_to_unknown[e.col()];
    if (r >= 0 && c >= 0) t.emplace_back(r, c, e.value());
  }
  const Index po = layout.pressure_offset(), lm = layout.multiplier();
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    for (int l = 0; l < 3; ++l) {
      const Index u = layout.face_to_unknown[mesh.cell_faces(c)[l]];
      if (u < 0) continue;
      const double s = mesh.orientation(c, l);
      t.emplace_back(u, po + c, -s);
      t.emplace_back(po + c, u, -s);
    }
    const double area = mesh.geometry(c).area;
    t.emplace_back(po + c, lm, area);
    t.emplace_back(lm, po + c, area);
  }
  sys.matrix.resize(layout.size(), layout.size());
  sys.matrix.setFromTriplets(t.begin(), t.end());
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Zero(layout.size());
  for (Index u = 0; u < layout.num_velocity(); ++u) sys.rhs[u] = rhs_u[layout.unknown_to_face[u]];
  sys.rhs.segment(po, mesh.num_cells()) = rhs_p;
  return sys;
}

enum class SolverKind { Auto, NullSpace, Direct, Iterative };

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::NullSpace: return "nullspace";
    case SolverKind::Direct: return "direct";
    case SolverKind::Iterative: return "iterative";
    default: return "auto";
  }
}

inline SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "auto") return SolverKind::Auto;
  if (s == "nullspace") return SolverKind::NullSpace;
  if (s == "direct") return SolverKind::Direct;
  if (s == "iterative") return SolverKind::Iterative;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

/// Auto picks the null-space factorization for tight tolerances and GMRES
/// once the requested tolerance is loose.
inline SolverKind resolve_solver(SolverKind k, double tolerance) {
  if (k != SolverKind::Auto) return k;
  return tolerance < 1e-6 ? SolverKind::NullSpace : SolverKind::Iterative;
}

struct SolveReport {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
  int iterations = 0;
};

/// Basis of the discretely divergence-free velocities in the unknown
/// numbering of a DofLayout.
struct DivergenceFreeBasis {
  Eigen::SparseMatrix<double> curl;  // velocity unknowns x stream-function unknowns
  Eigen::MatrixXd harmonic;          // velocity unknowns x 0 (no-flux) or 2 (periodic)
};

inline DivergenceFreeBasis make_divergence_free_basis(const Mesh& mesh, const DofLayout& layout) {
  // Stream function is zero on the no-flux boundary and pinned at vertex 0
  // on the torus.
  std::vector<Index> vertex_unknown(mesh.num_vertices(), -1);
  Index count = 0;
  if (mesh.boundary_kind() == BoundaryKind::NoFlux) {
    std::vector<char> on_boundary(mesh.num_vertices(), 0);
    for (const Face& f : mesh.faces())
      if (f.is_boundary()) on_boundary[f.vertices[0]] = on_boundary[f.vertices[1]] = 1;
    for (Index v = 0; v < mesh.num_vertices(); ++v)
      if (!on_boundary[v]) vertex_unknown[v] = count++;
  } else {
    for (Index v = 1; v < mesh.num_vertices(); ++v) vertex_unknown[v] = count++;
  }
  // flux of curl(psi) through a face from a to b is psi(b) - psi(a)
  Triplets t;
  for (Index u = 0; u < layout.num_velocity(); ++u) {
    const Face& f = mesh.face(layout.unknown_to_face[u]);
    if (const Index a = vertex_unknown[f.vertices[0]]; a >= 0) t.emplace_back(u, a, -1.0);
    if (const Index b = vertex_unknown[f.vertices[1]]; b >= 0) t.emplace_back(u, b, 1.0);
  }
  DivergenceFreeBasis basis;
  basis.curl.resize(layout.num_velocity(), count);
  basis.curl.setFromTriplets(t.begin(), t.end());
  basis.curl.makeCompressed();
  if (mesh.boundary_kind() == BoundaryKind::Periodic) {
    basis.harmonic = Eigen::MatrixXd::Zero(layout.num_velocity(), 2);
    for (Index u = 0; u < layout.num_velocity(); ++u) {
      const Face& f = mesh.face(layout.unknown_to_face[u]);
      basis.harmonic(u, 0) = f.normal.x() * f.length;
      basis.harmonic(u, 1) = f.normal.y() * f.length;
    }
  } else {
    basis.harmonic.resize(layout.num_velocity(), 0);
  }
  return basis;
}

class SaddleSolver {
 public:
  SaddleSolver(const Mesh& mesh, const DofLayout& layout, SolverKind kind, double tolerance, int max_iterations)
      : mesh_(mesh), layout_(layout), kind_(kind), tol_(tolerance), max_iter_(max_iterations) {
    if (kind_ == SolverKind::Auto) kind_ = resolve_solver(kind_, tol_);
    if (kind_ == SolverKind::NullSpace) setup_null_space();
  }

  SolveReport solve(const SaddleSystem& sys) {
    SolveReport rep;
    const double bnorm = sys.rhs.norm();
    if (bnorm == 0.0) {
      rep.x = Eigen::VectorXd::Zero(sys.rhs.size());
      return rep;
    }
    switch (kind_) {
      case SolverKind::NullSpace: rep = solve_null_space(sys); break;
      case SolverKind::Direct: rep = solve_direct(sys); break;
      default: rep = solve_iterative(sys); break;
    }
    rep.relative_residual = (sys.rhs - sys.matrix * rep.x).norm() / bnorm;
    if (!std::isfinite(rep.relative_residual) || !rep.x.allFinite())
      throw SolverError("linear solve produced non-finite values", rep.relative_residual);
    // GMRES monitors the preconditioned residual; allow the usual slack.
    const double allowed = kind_ == SolverKind::Iterative ? 10.0 * tol_ : tol_;
    if (rep.relative_residual > allowed)
      throw SolverError("linear solve did not reach tolerance (relative residual " +
                            std::to_string(rep.relative_residual) + ")",
                        rep.relative_residual);
    return rep;
  }

  SolverKind kind() const { return kind_; }

 private:
  void setup_null_space() {
    basis_ = make_divergence_free_basis(mesh_, layout_);
    // B restricted to the velocity unknowns, and the cell Laplacian B B^T
    // with cell 0 pinned.
    Triplets t;
    for (Index c = 0; c < mesh_.num_cells(); ++c)
      for (int l = 0; l < 3; ++l)
        if (const Index u = layout_.face_to_unknown[mesh_.cell_faces(c)[l]]; u >= 0)
          t.emplace_back(c, u, mesh_.orientation(c, l));
    div_.resize(mesh_.num_cells(), layout_.num_velocity());
    div_.setFromTriplets(t.begin(), t.end());
    Eigen::SparseMatrix<double> lap = div_ * div_.transpose();
    for (Index k = 0; k < lap.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(lap, k); it; ++it)
        if (it.row() == 0 || it.col() == 0) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    lap.prune(0.0);
    laplacian_.compute(lap);
    if (laplacian_.info() != Eigen::Success) throw SolverError("pressure Laplacian factorization failed", NAN);
  }

  SolveReport solve_null_space(const SaddleSystem& sys) {
    const Index nu = layout_.num_velocity();
    const Eigen::SparseMatrix<double> K = sys.matrix.topLeftCorner(nu, nu);
    const Eigen::VectorXd rhs_u = sys.rhs.head(nu);
    const Eigen::SparseMatrix<double> KR = K * basis_.curl;
    const Eigen::SparseMatrix<double> A11 = Eigen::SparseMatrix<double>(basis_.curl.transpose()) * KR;
    lu_.compute(A11);
    if (lu_.info() != Eigen::Success) throw SolverError("reduced system factorization failed: " + lu_.lastErrorMessage(), NAN);
    Eigen::VectorXd psi = lu_.solve(basis_.curl.transpose() * rhs_u);
    Eigen::VectorXd u = basis_.curl * psi;
    if (const Index nh = basis_.harmonic.cols(); nh > 0) {
      // Bordered solve for the harmonic coefficients via the Schur complement.
      const Eigen::MatrixXd KH = K * basis_.harmonic;
      const Eigen::MatrixXd A12 = basis_.curl.transpose() * KH;
      const Eigen::MatrixXd A21 = basis_.harmonic.transpose() * KR;
      const Eigen::MatrixXd A22 = basis_.harmonic.transpose() * KH;
      Eigen::MatrixXd Y(A12.rows(), nh);
      for (Index j = 0; j < nh; ++j) Y.col(j) = lu_.solve(A12.col(j));
      const Eigen::MatrixXd S = A22 - A21 * Y;
      const Eigen::VectorXd g = basis_.harmonic.transpose() * rhs_u - A21 * psi;
      const Eigen::VectorXd c = S.fullPivLu().solve(g);
      psi -= Y * c;
      u = basis_.curl * psi + basis_.harmonic * c;
    }
    // B^T p = K u - rhs_u
    Eigen::VectorXd g = div_ * (K * u - rhs_u);
    g[0] = 0.0;
    Eigen::VectorXd p = laplacian_.solve(g);
    double mean = 0.0, area = 0.0;
    for (Index c = 0; c < mesh_.num_cells(); ++c) {
      mean += p[c] * mesh_.geometry(c).area;
      area += mesh_.geometry(c).area;
    }
    p.array() -= mean / area;
    SolveReport rep;
    rep.x = Eigen::VectorXd::Zero(layout_.size());
    rep.x.head(nu) = u;
    rep.x.segment(layout_.pressure_offset(), mesh_.num_cells()) = p;
    return rep;
  }

  SolveReport solve_direct(const SaddleSystem& sys) {
    SolveReport rep;
    direct_.compute(sys.matrix);
    if (direct_.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + direct_.lastErrorMessage(), NAN);
    rep.x = direct_.solve(sys.rhs);
    // iterative refinement
    const double bnorm = sys.rhs.norm();
    Eigen::VectorXd r = sys.rhs - sys.matrix * rep.x;
    double res = r.norm() / bnorm;
    for (int k = 0; k < 3 && res > 1e-15; ++k) {
      const Eigen::VectorXd x = rep.x + direct_.solve(r);
      const Eigen::VectorXd rn = sys.rhs - sys.matrix * x;
      if (rn.norm() / bnorm >= res) break;
      rep.x = x;
      r = rn;
      res = rn.norm() / bnorm;
      ++rep.iterations;
    }
    return rep;
  }

  SolveReport solve_iterative(const SaddleSystem& sys) {
    SolveReport rep;
    Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gmres;
    gmres.setTolerance(tol_);
    gmres.setMaxIterations(max_iter_);
    gmres.set_restart(100);
    gmres.preconditioner().setDroptol(1e-4);
    gmres.preconditioner().setFillfactor(20);
    gmres.compute(sys.matrix);
    rep.x = gmres.solve(sys.rhs);
    rep.iterations = static_cast<int>(gmres.iterations());
    return rep;
  }

  const Mesh& mesh_;
  DofLayout layout_;
  SolverKind kind_;
  double tol_;
  int max_iter_;
  DivergenceFreeBasis basis_;
  Eigen::SparseMatrix<double> div_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> laplacian_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> direct_;
};

}  // namespace eulerfem
