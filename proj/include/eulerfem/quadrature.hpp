#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "eulerfem/mesh.hpp"

namespace eulerfem {

struct QuadPoint {
  Vec2 point;
  double weight;
};

/// Gauss-Legendre nodes and weights on [0,1] (weights sum to 1).
inline std::vector<std::pair<double, double>> gauss_legendre_unit(int order) {
  std::vector<std::pair<double, double>> ref;  // on [-1,1]
  switch (order) {
    case 1:
      ref = {{0.0, 2.0}};
      break;
    case 2: {
      const double x = 1.0 / std::sqrt(3.0);
      ref = {{-x, 1.0}, {x, 1.0}};
      break;
    }
    case 3: {
      const double x = std::sqrt(3.0 / 5.0);
      ref = {{-x, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {x, 5.0 / 9.0}};
      break;
    }
    case 4: {
      const double r = 2.0 / 7.0 * std::sqrt(6.0 / 5.0);
      const double x1 = std::sqrt(3.0 / 7.0 - r), x2 = std::sqrt(3.0 / 7.0 + r);
      const double w1 = (18.0 + std::sqrt(30.0)) / 36.0, w2 = (18.0 - std::sqrt(30.0)) / 36.0;
      ref = {{-x2, w2}, {-x1, w1}, {x1, w1}, {x2, w2}};
      break;
    }
    case 5: {
      const double r = 2.0 * std::sqrt(10.0 / 7.0);
      const double x1 = std::sqrt(5.0 - r) / 3.0, x2 = std::sqrt(5.0 + r) / 3.0;
      const double w1 = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double w2 = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      ref = {{-x2, w2}, {-x1, w1}, {0.0, 128.0 / 225.0}, {x1, w1}, {x2, w2}};
      break;
    }
    default:
      throw std::invalid_argument("gauss_legendre_unit: unsupported order " + std::to_string(order));
  }
  for (auto& [x, w] : ref) {
    x = 0.5 * (x + 1.0);
    w *= 0.5;
  }
  return ref;
}

/// Gauss points on the segment [a,b]; weights sum to |b - a|.
inline std::vector<QuadPoint> segment_quadrature(const Vec2& a, const Vec2& b, int order) {
  const double len = (b - a).norm();
  std::vector<QuadPoint> out;
  for (const auto& [s, w] : gauss_legendre_unit(order)) out.push_back({a + s * (b - a), w * len});
  return out;
}

/// Quadrature on a face, points given in the owner cell's frame.
inline std::vector<QuadPoint> face_quadrature_points(const Face& face, int order) {
  return segment_quadrature(face.a, face.b, order);
}

/// Symmetric rule on the reference triangle {(0,0),(1,0),(0,1)}; points are
/// barycentric triples, weights sum to the reference area 1/2.
struct CellQuadrature {
  int degree = 0;
  std::vector<std::array<double, 3>> barycentric;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }

  /// Points and weights mapped onto a physical triangle of the given area.
  std::vector<QuadPoint> map(const std::array<Vec2, 3>& p, double area) const {
    std::vector<QuadPoint> out;
    out.reserve(size());
    for (std::size_t q = 0; q < size(); ++q) {
      const auto& l = barycentric[q];
      out.push_back({l[0] * p[0] + l[1] * p[1] + l[2] * p[2], 2.0 * area * weights[q]});
    }
    return out;
  }
};

namespace detail {

inline void add_orbit(CellQuadrature& q, double w) {
  q.barycentric.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  q.weights.push_back(0.5 * w);
}

inline void add_orbit(CellQuadrature& q, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  for (const auto& l : {std::array{a, a, b}, std::array{a, b, a}, std::array{b, a, a}}) {
    q.barycentric.push_back(l);
    q.weights.push_back(0.5 * w);
  }
}

inline void add_orbit(CellQuadrature& q, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (const auto& l : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                        std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}}) {
    q.barycentric.push_back(l);
    q.weights.push_back(0.5 * w);
  }
}

}  // namespace detail

/// Dunavant 6-point rule, exact through degree 4.
inline const CellQuadrature& cell_quadrature_degree4() {
  static const CellQuadrature rule = [] {
    CellQuadrature q;
    q.degree = 4;
    const double s10 = std::sqrt(10.0);
    const double r = std::sqrt(38.0 - 44.0 * std::sqrt(0.4));
    const double rw = std::sqrt(213125.0 - 53320.0 * s10);
    detail::add_orbit(q, (8.0 - s10 + r) / 18.0, (620.0 + rw) / 3720.0);
    detail::add_orbit(q, (8.0 - s10 - r) / 18.0, (620.0 - rw) / 3720.0);
    return q;
  }();
  return rule;
}

/// Dunavant 16-point rule, exact through degree 8.
inline const CellQuadrature& cell_quadrature_degree8() {
  static const CellQuadrature rule = [] {
    CellQuadrature q;
    q.degree = 8;
    detail::add_orbit(q, 0.144315607677787);
    detail::add_orbit(q, 0.459292588292723, 0.095091634267285);
    detail::add_orbit(q, 0.170569307751760, 0.103217370534718);
    detail::add_orbit(q, 0.050547228317031, 0.032458497623198);
    detail::add_orbit(q, 0.008394777409958, 0.263112829634638, 0.027230314174435);
    return q;
  }();
  return rule;
}

}  // namespace eulerfem
