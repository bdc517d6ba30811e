#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "eulerfem/saddle.hpp"
#include "oracles.hpp"

using namespace eulerfem;

namespace {

const Rectangle kUnit{0, 0, 1, 1};

// K = M/dt + mu A + C(w) and a random right-hand side.
struct Problem {
  Triplets k;
  Eigen::VectorXd rhs_u;
};

Problem make_problem(const Mesh& m, std::mt19937_64& rng, double dt = 0.1, double mu = 0.05) {
  Problem p;
  mass_triplets(m, 1.0 / dt, p.k);
  diffusion_triplets(m, mu, p.k);
  convection_triplets(m, oracle::stream_function_field(m, rng), {}, 1.0, false, p.k);
  std::uniform_real_distribution<double> U(-1, 1);
  p.rhs_u = Eigen::VectorXd::NullaryExpr(m.num_faces(), [&] { return U(rng); });
  return p;
}

Eigen::VectorXd solve(const Mesh& m, const Problem& pb, SolverKind kind, double tol = 1e-12) {
  const DofLayout layout = make_layout(m);
  SaddleSolver solver(m, layout, kind, tol, 2000);
  return solver.solve(build_saddle_system(m, layout, pb.k, pb.rhs_u, Eigen::VectorXd::Zero(m.num_cells()))).x;
}

}  // namespace

TEST(Layout, NoFluxDropsBoundaryFaces) {
  const Mesh m = build_structured_mesh(3, kUnit, BoundaryKind::NoFlux);
  const DofLayout l = make_layout(m);
  EXPECT_EQ(l.num_velocity(), m.num_faces() - 12);
  EXPECT_EQ(l.size(), l.num_velocity() + m.num_cells() + 1);
  for (Index f = 0; f < m.num_faces(); ++f) {
    if (m.face(f).is_boundary()) EXPECT_EQ(l.face_to_unknown[f], -1);
    else EXPECT_EQ(l.unknown_to_face[l.face_to_unknown[f]], f);
  }
}

TEST(Layout, PeriodicKeepsAllFaces) {
  const Mesh m = build_structured_mesh(3, kUnit, BoundaryKind::Periodic);
  EXPECT_EQ(make_layout(m).num_velocity(), m.num_faces());
}

TEST(SaddleSystem, BlockStructure) {
  const Mesh m = build_structured_mesh(2, kUnit, BoundaryKind::Periodic);
  const DofLayout l = make_layout(m);
  Triplets k;
  mass_triplets(m, 1.0, k);
  const SaddleSystem sys = build_saddle_system(m, l, k, Eigen::VectorXd::Zero(m.num_faces()),
                                               Eigen::VectorXd::Zero(m.num_cells()));
  const Eigen::MatrixXd S(sys.matrix);
  const Eigen::MatrixXd B = Eigen::MatrixXd(assemble_divergence(m).matrix);
  const Index nu = l.num_velocity(), nc = m.num_cells();
  EXPECT_LT((S.topLeftCorner(nu, nu) - Eigen::MatrixXd(assemble_mass(m).matrix)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((S.block(0, nu, nu, nc) + B.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((S.block(nu, 0, nc, nu) + B).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(S.block(nu, nu, nc, nc).cwiseAbs().maxCoeff(), 0.0);
  for (Index c = 0; c < nc; ++c) {
    EXPECT_DOUBLE_EQ(S(nu + c, nu + nc), m.geometry(c).area);
    EXPECT_DOUBLE_EQ(S(nu + nc, nu + c), m.geometry(c).area);
  }
}

TEST(SaddleSolver, SolversAgree) {
  std::mt19937_64 rng(61);
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic}) {
    const Mesh m = build_structured_mesh(4, {0, 0, 2, 1}, kind);
    const Problem pb = make_problem(m, rng);
    const Eigen::VectorXd direct = solve(m, pb, SolverKind::Direct);
    const Eigen::VectorXd null = solve(m, pb, SolverKind::NullSpace);
    const Eigen::VectorXd iter = solve(m, pb, SolverKind::Iterative, 1e-11);
    EXPECT_LT((direct - null).cwiseAbs().maxCoeff(), 1e-10 * direct.cwiseAbs().maxCoeff());
    EXPECT_LT((direct - iter).cwiseAbs().maxCoeff(), 1e-7 * direct.cwiseAbs().maxCoeff());
  }
}

TEST(SaddleSolver, SolutionIsDivergenceFreeWithMeanZeroPressure) {
  std::mt19937_64 rng(67);
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic})
    for (auto solver : {SolverKind::Direct, SolverKind::NullSpace}) {
      const Mesh m = build_structured_mesh(5, kUnit, kind);
      const Problem pb = make_problem(m, rng);
      const DofLayout l = make_layout(m);
      const Eigen::VectorXd x = solve(m, pb, solver);
      VelocityField u(m);
      for (Index i = 0; i < l.num_velocity(); ++i) u.dofs[l.unknown_to_face[i]] = x[i];
      for (double s : oracle::flux_sums(m, u)) EXPECT_LT(std::abs(s), 1e-12);
      double mean = 0;
      for (Index c = 0; c < m.num_cells(); ++c) mean += x[l.pressure_offset() + c] * m.geometry(c).area;
      EXPECT_LT(std::abs(mean), 1e-12);
      EXPECT_LT(std::abs(x[l.multiplier()]), 1e-10);
    }
}

TEST(SaddleSolver, ZeroRightHandSide) {
  const Mesh m = build_structured_mesh(3, kUnit, BoundaryKind::NoFlux);
  std::mt19937_64 rng(71);
  Problem pb = make_problem(m, rng);
  pb.rhs_u.setZero();
  for (auto s : {SolverKind::Direct, SolverKind::NullSpace, SolverKind::Iterative})
    EXPECT_EQ(solve(m, pb, s).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SaddleSolver, ReportsUnreachedTolerance) {
  const Mesh m = build_structured_mesh(6, kUnit, BoundaryKind::Periodic);
  std::mt19937_64 rng(73);
  const Problem pb = make_problem(m, rng);
  const DofLayout l = make_layout(m);
  SaddleSolver solver(m, l, SolverKind::Iterative, 1e-14, 1);
  try {
    solver.solve(build_saddle_system(m, l, pb.k, pb.rhs_u, Eigen::VectorXd::Zero(m.num_cells())));
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 1e-13);
  }
}

TEST(SaddleSolver, SolverSelection) {
  EXPECT_EQ(resolve_solver(SolverKind::Auto, 1e-10), SolverKind::NullSpace);
  EXPECT_EQ(resolve_solver(SolverKind::Auto, 1e-4), SolverKind::Iterative);
  EXPECT_EQ(resolve_solver(SolverKind::Direct, 1e-10), SolverKind::Direct);
  for (auto k : {SolverKind::Auto, SolverKind::NullSpace, SolverKind::Direct, SolverKind::Iterative})
    EXPECT_EQ(solver_kind_from_string(to_string(k)), k);
  EXPECT_THROW(solver_kind_from_string("cholesky"), std::invalid_argument);
}

TEST(DivergenceFreeBasis, SpansTheKernel) {
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic}) {
    const Mesh m = build_structured_mesh(4, {0, 0, 1, 2}, kind);
    const DofLayout l = make_layout(m);
    const DivergenceFreeBasis basis = make_divergence_free_basis(m, l);
    Eigen::MatrixXd Z(l.num_velocity(), basis.curl.cols() + basis.harmonic.cols());
    Z << Eigen::MatrixXd(basis.curl), basis.harmonic;
    // B restricted to the unknowns
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m.num_cells(), l.num_velocity());
    const Eigen::MatrixXd Bfull(assemble_divergence(m).matrix);
    for (Index i = 0; i < l.num_velocity(); ++i) B.col(i) = Bfull.col(l.unknown_to_face[i]);
    EXPECT_LT((B * Z).cwiseAbs().maxCoeff(), 1e-13);
    // full column rank and dimension of the kernel of B
    Eigen::FullPivLU<Eigen::MatrixXd> luZ(Z), luB(B);
    EXPECT_EQ(luZ.rank(), Z.cols());
    EXPECT_EQ(Z.cols(), l.num_velocity() - luB.rank());
    EXPECT_EQ(basis.harmonic.cols(), kind == BoundaryKind::Periodic ? 2 : 0);
  }
}
