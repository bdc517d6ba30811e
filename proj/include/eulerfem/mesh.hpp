#pragma once

// Structured triangulations of axis-aligned rectangles with no-flux or
// periodic boundaries, carrying the oriented-face combinatorics that
// lowest-order Raviart-Thomas degrees of freedom need.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eulerfem {

using Index = std::int64_t;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr Index kBoundary = -1;

enum class BoundaryKind { NoFlux, Periodic };

inline std::string to_string(BoundaryKind kind) {
  return kind == BoundaryKind::NoFlux ? "noflux" : "periodic";
}

inline BoundaryKind boundary_kind_from_string(const std::string& s) {
  if (s == "noflux") return BoundaryKind::NoFlux;
  if (s == "periodic") return BoundaryKind::Periodic;
  throw std::invalid_argument("unknown boundary kind '" + s + "'");
}

struct Rectangle {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool operator==(const Rectangle&) const = default;
};

struct Face {
  std::array<Index, 2> vertices{};  // identified vertex ids
  Index owner = 0;
  Index neighbor = kBoundary;
  std::array<int, 2> local{};  // local face index in owner / neighbor
  Vec2 a = Vec2::Zero();       // endpoints in the owner's frame
  Vec2 b = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // unit, owner -> neighbor (outward on boundary)
  double length = 0.0;
  // Neighbor-frame coordinates of a point on the face are owner-frame
  // coordinates plus this offset (nonzero only across a periodic seam).
  Vec2 shift = Vec2::Zero();

  bool is_boundary() const { return neighbor == kBoundary; }
  Vec2 midpoint() const { return 0.5 * (a + b); }
};

struct CellGeometry {
  double area = 0.0;
  double diameter = 0.0;
  Vec2 centroid = Vec2::Zero();
};

/// Immutable triangulation. Local face i of a cell is the edge opposite
/// local vertex i. Cells store their corner coordinates unwrapped, so every
/// cell is a plain Euclidean triangle even on a periodic mesh.
class Mesh {
 public:
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<Index, 3>>& cells() const { return cells_; }
  const std::array<Vec2, 3>& cell_points(Index c) const { return cell_points_[c]; }
  const std::array<Index, 3>& cell_faces(Index c) const { return cell_faces_[c]; }
  const std::vector<Face>& faces() const { return faces_; }
  const Face& face(Index f) const { return faces_[f]; }
  const CellGeometry& geometry(Index c) const { return geometry_[c]; }

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_cells() const { return static_cast<Index>(cells_.size()); }
  Index num_faces() const { return static_cast<Index>(faces_.size()); }

  BoundaryKind boundary_kind() const { return kind_; }
  const Rectangle& domain() const { return domain_; }
  int subdivisions() const { return n_; }
  double h() const { return h_; }

  /// +1 if the face normal points out of the cell, -1 if into it.
  double orientation(Index cell, int local_face) const {
    return faces_[cell_faces_[cell][local_face]].owner == cell ? 1.0 : -1.0;
  }

  /// Logical boundary segments of the rectangle (bottom, right, top, left,
  /// n each). For periodic meshes partner() is the identification map and
  /// both partners resolve to the same physical face.
  const std::vector<Index>& logical_boundary_faces() const { return logical_faces_; }
  const std::vector<Index>& periodic_pairs() const { return periodic_partner_; }

  /// Maps a point in a cell's frame back into the fundamental domain.
  Vec2 wrap(const Vec2& x) const {
    if (kind_ == BoundaryKind::NoFlux) return x;
    Vec2 y = x;
    const double w = domain_.width(), hgt = domain_.height();
    y.x() -= w * std::floor((y.x() - domain_.x0) / w);
    y.y() -= hgt * std::floor((y.y() - domain_.y0) / hgt);
    return y;
  }

 private:
  friend Mesh build_structured_mesh(int, const Rectangle&, BoundaryKind);

  std::vector<Vec2> vertices_;
  std::vector<std::array<Index, 3>> cells_;
  std::vector<std::array<Vec2, 3>> cell_points_;
  std::vector<std::array<Index, 3>> cell_faces_;
  std::vector<Face> faces_;
  std::vector<CellGeometry> geometry_;
  std::vector<Index> logical_faces_;
  std::vector<Index> periodic_partner_;
  BoundaryKind kind_ = BoundaryKind::NoFlux;
  Rectangle domain_;
  int n_ = 0;
  double h_ = 0.0;
};

/// n x n grid of rectangles, each split along the lower-left to upper-right
/// diagonal into two counterclockwise triangles.
inline Mesh build_structured_mesh(int n, const Rectangle& domain, BoundaryKind kind) {
  if (n < 1) throw std::invalid_argument("build_structured_mesh: n must be >= 1");
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
    throw std::invalid_argument("build_structured_mesh: degenerate rectangle");

  Mesh m;
  m.kind_ = kind;
  m.domain_ = domain;
  m.n_ = n;
  const bool periodic = kind == BoundaryKind::Periodic;
  const double dx = domain.width() / n, dy = domain.height() / n;
  auto coord = [&](int i, int j) { return Vec2(domain.x0 + i * dx, domain.y0 + j * dy); };

  const int nv = periodic ? n : n + 1;
  auto vid = [&](int i, int j) -> Index {
    if (periodic) { i %= n; j %= n; }
    return static_cast<Index>(j) * nv + i;
  };
  m.vertices_.resize(static_cast<std::size_t>(nv) * nv);
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i) m.vertices_[vid(i, j)] = coord(i, j);

  // Structural edge keys: horizontal H(i,j), vertical V(i,j), diagonal D(i,j).
  const Index nh = static_cast<Index>(n) * (n + 1);
  auto hkey = [&](int i, int j) -> Index { return static_cast<Index>(periodic ? j % n : j) * n + i; };
  auto vkey = [&](int i, int j) -> Index { return nh + static_cast<Index>(j) * (n + 1) + (periodic ? i % n : i); };
  auto dkey = [&](int i, int j) -> Index { return 2 * nh + static_cast<Index>(j) * n + i; };

  const Index ncells = 2 * static_cast<Index>(n) * n;
  m.cells_.resize(ncells);
  m.cell_points_.resize(ncells);
  m.cell_faces_.resize(ncells);
  std::vector<std::array<Index, 3>> cell_keys(ncells);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Index lower = 2 * (static_cast<Index>(j) * n + i), upper = lower + 1;
      m.cells_[lower] = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)};
      m.cell_points_[lower] = {coord(i, j), coord(i + 1, j), coord(i + 1, j + 1)};
      cell_keys[lower] = {vkey(i + 1, j), dkey(i, j), hkey(i, j)};
      m.cells_[upper] = {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)};
      m.cell_points_[upper] = {coord(i, j), coord(i + 1, j + 1), coord(i, j + 1)};
      cell_keys[upper] = {hkey(i, j + 1), vkey(i, j), dkey(i, j)};
    }
  }

  std::vector<Index> key_to_face(static_cast<std::size_t>(3 * nh), -1);
  for (Index c = 0; c < ncells; ++c) {
    for (int l = 0; l < 3; ++l) {
      Index& f = key_to_face[cell_keys[c][l]];
      const auto& pts = m.cell_points_[c];
      const Vec2& pa = pts[(l + 1) % 3];
      const Vec2& pb = pts[(l + 2) % 3];
      if (f < 0) {
        f = m.num_faces();
        Face face;
        face.vertices = {m.cells_[c][(l + 1) % 3], m.cells_[c][(l + 2) % 3]};
        face.owner = c;
        face.local[0] = l;
        face.a = pa;
        face.b = pb;
        const Vec2 t = pb - pa;
        face.length = t.norm();
        face.normal = Vec2(t.y(), -t.x()) / face.length;  // outward for CCW
        m.faces_.push_back(face);
      } else {
        Face& face = m.faces_[f];
        face.neighbor = c;
        face.local[1] = l;
        face.shift = 0.5 * (pa + pb) - face.midpoint();
      }
      m.cell_faces_[c][l] = f;
    }
  }

  m.geometry_.resize(ncells);
  for (Index c = 0; c < ncells; ++c) {
    const auto& p = m.cell_points_[c];
    const Vec2 e1 = p[1] - p[0], e2 = p[2] - p[0];
    CellGeometry& g = m.geometry_[c];
    g.area = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    g.diameter = std::max({e1.norm(), e2.norm(), (p[2] - p[1]).norm()});
    g.centroid = (p[0] + p[1] + p[2]) / 3.0;
    m.h_ = std::max(m.h_, g.diameter);
  }

  // bottom, right, top, left
  m.logical_faces_.reserve(4 * static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) m.logical_faces_.push_back(key_to_face[hkey(k, 0)]);
  for (int k = 0; k < n; ++k) m.logical_faces_.push_back(key_to_face[vkey(n, k)]);
  for (int k = 0; k < n; ++k) m.logical_faces_.push_back(key_to_face[hkey(k, n)]);
  for (int k = 0; k < n; ++k) m.logical_faces_.push_back(key_to_face[vkey(0, k)]);
  if (periodic) {
    m.periodic_partner_.resize(4 * static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
      m.periodic_partner_[k] = 2 * n + k;
      m.periodic_partner_[2 * n + k] = k;
      m.periodic_partner_[n + k] = 3 * n + k;
      m.periodic_partner_[3 * n + k] = n + k;
    }
  }
  return m;
}

}  // namespace eulerfem
