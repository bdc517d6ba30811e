#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "eulerfem/io.hpp"
#include "eulerfem/mesh.hpp"
#include "oracles.hpp"

using namespace eulerfem;

namespace {

const Rectangle kUnit{0, 0, 1, 1};
const Rectangle kBox{0, 0, 2 * std::numbers::pi, 2 * std::numbers::pi};

}  // namespace

TEST(Mesh, SingleSquareCounts) {
  const Mesh m = build_structured_mesh(1, kUnit, BoundaryKind::NoFlux);
  EXPECT_EQ(m.num_cells(), 2);
  EXPECT_EQ(m.num_faces(), 5);
  EXPECT_EQ(m.num_vertices(), 4);
  int boundary = 0;
  for (const Face& f : m.faces()) boundary += f.is_boundary();
  EXPECT_EQ(boundary, 4);
}

TEST(Mesh, TwoByTwoTorusCounts) {
  const Mesh m = build_structured_mesh(2, kUnit, BoundaryKind::Periodic);
  EXPECT_EQ(m.num_cells(), 8);
  EXPECT_EQ(m.num_faces(), 12);
  EXPECT_EQ(m.num_vertices(), 4);
  for (const Face& f : m.faces()) EXPECT_FALSE(f.is_boundary());
  EXPECT_EQ(m.num_vertices() - m.num_faces() + m.num_cells(), 0);
}

TEST(Mesh, EulerCharacteristic) {
  for (int n : {1, 3, 7}) {
    const Mesh a = build_structured_mesh(n, kUnit, BoundaryKind::NoFlux);
    EXPECT_EQ(a.num_vertices() - a.num_faces() + a.num_cells(), 1) << n;
    const Mesh b = build_structured_mesh(n + 1, kUnit, BoundaryKind::Periodic);
    EXPECT_EQ(b.num_vertices() - b.num_faces() + b.num_cells(), 0) << n;
  }
}

TEST(Mesh, CoarsestMeshSize) {
  const Mesh m = build_structured_mesh(12, kBox, BoundaryKind::NoFlux);
  EXPECT_NEAR(m.h(), std::sqrt(2.0) * 2 * std::numbers::pi / 12, 1e-14);
  EXPECT_NEAR(m.h(), 0.7405, 5e-5);
  const double expected[] = {0.7405, 0.3702, 0.1851, 0.0926};
  int k = 0;
  for (int n : {12, 24, 48, 96}) EXPECT_NEAR(build_structured_mesh(n, kBox, BoundaryKind::NoFlux).h(), expected[k++], 5e-5);
}

TEST(Mesh, RefinementHalvesH) {
  for (int n : {3, 5, 8}) {
    const double h1 = build_structured_mesh(n, {0, 0, 2, 3}, BoundaryKind::NoFlux).h();
    const double h2 = build_structured_mesh(2 * n, {0, 0, 2, 3}, BoundaryKind::NoFlux).h();
    EXPECT_NEAR(h2, h1 / 2, 1e-14 * h1);
  }
}

TEST(Mesh, AreasPositiveAndSumToDomain) {
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic}) {
    const Mesh m = build_structured_mesh(6, {-1, 0.5, 2, 2}, kind);
    double total = 0;
    for (Index c = 0; c < m.num_cells(); ++c) {
      const auto& p = m.cell_points(c);
      const double signed_area = 0.5 * oracle::cross(p[1] - p[0], p[2] - p[0]);
      EXPECT_GT(signed_area, 0.0);  // counterclockwise
      EXPECT_NEAR(m.geometry(c).area, signed_area, 1e-15);
      total += m.geometry(c).area;
    }
    EXPECT_NEAR(total, 4.5, 1e-12 * 4.5);
  }
}

TEST(Mesh, FaceOrientationOwnerToNeighbor) {
  for (auto kind : {BoundaryKind::NoFlux, BoundaryKind::Periodic}) {
    const Mesh m = build_structured_mesh(5, kUnit, kind);
    for (Index f = 0; f < m.num_faces(); ++f) {
      const Face& face = m.face(f);
      EXPECT_NEAR(face.normal.norm(), 1.0, 1e-15);
      EXPECT_NEAR((face.b - face.a).norm(), face.length, 1e-15);
      EXPECT_NEAR((face.b - face.a).dot(face.normal), 0.0, 1e-15);
      const Vec2 mid = face.midpoint();
      EXPECT_GT((mid - m.geometry(face.owner).centroid).dot(face.normal), 0.0);
      if (!face.is_boundary()) {
        EXPECT_LT(face.owner, face.neighbor);
        const Vec2 mid_nb = oracle::neighbor_point(m, f, 0.5);
        EXPECT_LT((mid_nb - m.geometry(face.neighbor).centroid).dot(face.normal), 0.0);
      }
    }
  }
}

TEST(Mesh, InteriorFacesHaveTwoCellsBoundaryOne) {
  const Mesh m = build_structured_mesh(4, kUnit, BoundaryKind::NoFlux);
  std::vector<int> incidence(m.num_faces(), 0);
  std::vector<double> signed_sum(m.num_faces(), 0.0);
  for (Index c = 0; c < m.num_cells(); ++c)
    for (int l = 0; l < 3; ++l) {
      ++incidence[m.cell_faces(c)[l]];
      signed_sum[m.cell_faces(c)[l]] += m.orientation(c, l);
    }
  for (Index f = 0; f < m.num_faces(); ++f) {
    EXPECT_EQ(incidence[f], m.face(f).is_boundary() ? 1 : 2);
    EXPECT_EQ(signed_sum[f], m.face(f).is_boundary() ? 1.0 : 0.0);
  }
}

TEST(Mesh, LocalFaceOppositeVertex) {
  const Mesh m = build_structured_mesh(3, kUnit, BoundaryKind::Periodic);
  for (Index c = 0; c < m.num_cells(); ++c) {
    const oracle::CellEdges e = oracle::cell_edges(m, c);
    for (int l = 0; l < 3; ++l) EXPECT_EQ(e.face[l], m.cell_faces(c)[l]);
  }
}

TEST(Mesh, PeriodicPairsAreFixedPointFreeInvolution) {
  const Mesh m = build_structured_mesh(4, kUnit, BoundaryKind::Periodic);
  const auto& logical = m.logical_boundary_faces();
  const auto& pair = m.periodic_pairs();
  ASSERT_EQ(logical.size(), 16u);
  ASSERT_EQ(pair.size(), logical.size());
  for (std::size_t i = 0; i < pair.size(); ++i) {
    ASSERT_GE(pair[i], 0);
    EXPECT_NE(static_cast<std::size_t>(pair[i]), i);
    EXPECT_EQ(static_cast<std::size_t>(pair[pair[i]]), i);
    EXPECT_EQ(logical[i], logical[pair[i]]);  // identified sides share one face
  }
  EXPECT_TRUE(build_structured_mesh(4, kUnit, BoundaryKind::NoFlux).periodic_pairs().empty());
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(build_structured_mesh(0, kUnit, BoundaryKind::NoFlux), std::invalid_argument);
  EXPECT_THROW(build_structured_mesh(-3, kUnit, BoundaryKind::NoFlux), std::invalid_argument);
  EXPECT_THROW(build_structured_mesh(2, {0, 0, 0, 1}, BoundaryKind::NoFlux), std::invalid_argument);
  EXPECT_THROW(build_structured_mesh(2, {0, 1, 1, 0}, BoundaryKind::Periodic), std::invalid_argument);
}

TEST(Mesh, DeterministicConstruction) {
  const Mesh a = build_structured_mesh(6, kBox, BoundaryKind::Periodic);
  const Mesh b = build_structured_mesh(6, kBox, BoundaryKind::Periodic);
  std::ostringstream sa, sb;
  write_mesh_csv(sa, a);
  write_mesh_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Mesh, CsvDumpSections) {
  const Mesh m = build_structured_mesh(2, kUnit, BoundaryKind::NoFlux);
  std::ostringstream os;
  write_mesh_csv(os, m);
  std::istringstream in(os.str());
  std::string line;
  std::vector<std::string> headers;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind('#', 0) == 0) headers.push_back(line);
    else ++rows;
  }
  ASSERT_EQ(headers.size(), 3u);
  EXPECT_EQ(headers[0], "#vertices x,y");
  EXPECT_EQ(headers[1], "#cells v0,v1,v2");
  EXPECT_EQ(headers[2], "#faces v0,v1,owner,neighbor,nx,ny,len");
  EXPECT_EQ(rows, m.num_vertices() + m.num_cells() + m.num_faces());
}

TEST(Mesh, BoundaryKindStrings) {
  EXPECT_EQ(boundary_kind_from_string("noflux"), BoundaryKind::NoFlux);
  EXPECT_EQ(boundary_kind_from_string("periodic"), BoundaryKind::Periodic);
  EXPECT_EQ(to_string(BoundaryKind::Periodic), "periodic");
  EXPECT_THROW(boundary_kind_from_string("slip"), std::invalid_argument);
}
