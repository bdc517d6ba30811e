#pragma once

// Closed-form benchmark data.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "eulerfem/mesh.hpp"

namespace eulerfem {

using TimeVectorFn = std::function<Vec2(double, const Vec2&)>;
using TimeScalarFn = std::function<double(double, const Vec2&)>;
using TimeGradientFn = std::function<Mat2(double, const Vec2&)>;  // (i,j) = d_j u_i

struct Scenario {
  std::string name;
  std::function<Vec2(const Vec2&)> initial_velocity;
  TimeVectorFn exact_velocity;           // empty when no exact solution is known
  TimeGradientFn exact_velocity_gradient;
  TimeVectorFn exact_velocity_dt;
  TimeScalarFn exact_pressure;
  TimeVectorFn forcing;                  // empty means f = 0
  BoundaryKind boundary_kind = BoundaryKind::NoFlux;
  Rectangle domain;

  bool has_exact_solution() const { return static_cast<bool>(exact_velocity) && static_cast<bool>(exact_pressure); }
  bool has_forcing() const { return static_cast<bool>(forcing); }
};

struct ScenarioParams {
  double lambda = 100.0;
  double delta = 0.05;
  double rho = std::numbers::pi / 15.0;
};

inline Rectangle periodic_box() { return {0.0, 0.0, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi}; }

/// Forced Taylor-Green vortex on [0, 2pi]^2 with no-flux walls:
///   u = (sin x cos y, -cos x sin y) e^{-2t/lambda},
///   p = (cos 2x + cos 2y) e^{-4t/lambda} / 4,
///   f = -(2/lambda) e^{-2t/lambda} u(0).
inline Scenario taylor_green(double lambda = 100.0) {
  if (!(lambda > 0.0)) throw std::invalid_argument("taylor_green: lambda must be positive");
  Scenario s;
  s.name = "taylor_green";
  s.boundary_kind = BoundaryKind::NoFlux;
  s.domain = periodic_box();
  auto base = [](const Vec2& x) {
    return Vec2(std::sin(x.x()) * std::cos(x.y()), -std::cos(x.x()) * std::sin(x.y()));
  };
  s.initial_velocity = base;
  s.exact_velocity = [=](double t, const Vec2& x) { return Vec2(base(x) * std::exp(-2.0 * t / lambda)); };
  s.exact_velocity_dt = [=](double t, const Vec2& x) {
    return Vec2(-2.0 / lambda * std::exp(-2.0 * t / lambda) * base(x));
  };
  s.exact_velocity_gradient = [=](double t, const Vec2& x) {
    const double e = std::exp(-2.0 * t / lambda);
    const double sx = std::sin(x.x()), cx = std::cos(x.x()), sy = std::sin(x.y()), cy = std::cos(x.y());
    Mat2 g;
    g << cx * cy, -sx * sy, sx * sy, -cx * cy;
    return Mat2(e * g);
  };
  s.exact_pressure = [=](double t, const Vec2& x) {
    return 0.25 * (std::cos(2.0 * x.x()) + std::cos(2.0 * x.y())) * std::exp(-4.0 * t / lambda);
  };
  s.forcing = [=](double t, const Vec2& x) {
    return Vec2(-2.0 / lambda * std::exp(-2.0 * t / lambda) * base(x));
  };
  return s;
}

/// Doubly periodic shear layer on [0, 2pi]^2, no exact solution, no forcing.
inline Scenario shear_layer(double delta = 0.05, double rho = std::numbers::pi / 15.0) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("shear_layer: delta must lie in [0,1)");
  if (!(rho > 0.0)) throw std::invalid_argument("shear_layer: rho must be positive");
  Scenario s;
  s.name = "shear_layer";
  s.boundary_kind = BoundaryKind::Periodic;
  s.domain = periodic_box();
  constexpr double pi = std::numbers::pi;
  s.initial_velocity = [=](const Vec2& x) {
    const double u1 = x.y() <= pi ? std::tanh((x.y() - pi / 2.0) / rho) : std::tanh((1.5 * pi - x.y()) / rho);
    return Vec2(u1, delta * std::sin(x.x()));
  };
  return s;
}

inline Scenario make_scenario(const std::string& name, const ScenarioParams& params = {}) {
  if (name == "taylor_green") return taylor_green(params.lambda);
  if (name == "shear_layer") return shear_layer(params.delta, params.rho);
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

namespace fd {

// Fourth-order central difference of a scalar function of one variable.
template <class F>
double derivative(const F& g, double x, double step = 1e-3) {
  return (-g(x + 2 * step) + 8 * g(x + step) - 8 * g(x - step) + g(x - 2 * step)) / (12 * step);
}

}  // namespace fd

/// d_t u + (u.grad) u + grad p - f at (t, x), all derivatives taken by
/// finite differences of the exact fields (independent of the analytic
/// gradients stored in the scenario).
inline Vec2 momentum_residual(const Scenario& s, double t, const Vec2& x) {
  if (!s.has_exact_solution()) throw std::invalid_argument("scenario has no exact solution");
  const auto& u = s.exact_velocity;
  const auto& p = s.exact_pressure;
  Vec2 r = Vec2::Zero();
  const Vec2 ux = u(t, x);
  for (int i = 0; i < 2; ++i) {
    r[i] += fd::derivative([&](double tt) { return u(tt, x)[i]; }, t);
    for (int j = 0; j < 2; ++j) {
      const double dj = fd::derivative([&](double xj) { Vec2 y = x; y[j] = xj; return u(t, y)[i]; }, x[j]);
      r[i] += ux[j] * dj;
    }
    r[i] += fd::derivative([&](double xi) { Vec2 y = x; y[i] = xi; return p(t, y); }, x[i]);
    if (s.has_forcing()) r[i] -= s.forcing(t, x)[i];
  }
  return r;
}

/// Divergence of the initial velocity by finite differences.
inline double initial_divergence(const Scenario& s, const Vec2& x) {
  double d = 0.0;
  for (int j = 0; j < 2; ++j)
    d += fd::derivative([&](double xj) { Vec2 y = x; y[j] = xj; return s.initial_velocity(y)[j]; }, x[j]);
  return d;
}

struct ResidualSample {
  double max_momentum = 0.0;
  double max_divergence = 0.0;
};

/// Samples the manufactured-solution residuals at random space-time points
/// (t uniform in [0, t_max], x uniform in the domain).
inline ResidualSample sample_residuals(const Scenario& s, int count, double t_max, unsigned seed = 12345) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, t_max), ux(s.domain.x0, s.domain.x1), uy(s.domain.y0, s.domain.y1);
  ResidualSample out;
  for (int k = 0; k < count; ++k) {
    const double t = ut(rng);
    const Vec2 x(ux(rng), uy(rng));
    if (s.has_exact_solution())
      out.max_momentum = std::max(out.max_momentum, momentum_residual(s, t, x).cwiseAbs().maxCoeff());
    out.max_divergence = std::max(out.max_divergence, std::abs(initial_divergence(s, x)));
  }
  return out;
}

}  // namespace eulerfem
