#pragma once

// Built-in systems: the Chaplygin-Caratheodory sleigh and a free particle in
// R^3 under the contact constraint dz - y dx = 0, with their reduced
// equations integrated independently for cross-checks.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nhproj/dynamics.hpp"
#include "nhproj/manifold.hpp"
#include "nhproj/projectors.hpp"
#include "nhproj/rk4.hpp"

namespace nhproj::scenarios {

struct SleighParams {
  double r = 1.0;  // c.m. to knife-edge contact distance
  double J = 1.0;  // moment of inertia about the c.m.

  void validate() const {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("sleigh: r must be >= 0");
    if (!(J > 0.0) || !std::isfinite(J)) throw std::invalid_argument("sleigh: J must be > 0");
  }
};

struct ReducedState {
  double u = 0.0;      // speed of the contact point along the body axis
  double omega = 0.0;  // angular speed
};

/// Chart (x, y, theta), g = diag(1, 1, J), A = (-sin th, cos th, -r), B = 0.
inline LagrangianSystem chaplygin_sleigh(const SleighParams& prm) {
  prm.validate();
  LagrangianSystem sys;
  sys.name = "sleigh";
  sys.n = 3;
  sys.m = 1;
  sys.g = MetricField::constant(Eigen::Vector3d(1.0, 1.0, prm.J).asDiagonal().toDenseMatrix());
  const double r = prm.r;
  sys.pfaffian.n = 3;
  sys.pfaffian.m = 1;
  sys.pfaffian.A.eval = [r](const ChartPoint& z) {
    Matrix a(1, 3);
    a << -std::sin(z[2]), std::cos(z[2]), -r;
    return a;
  };
  sys.pfaffian.A.exact_partials = [](const ChartPoint& z) {
    std::vector<Matrix> d(3, Matrix::Zero(1, 3));
    d[2] << -std::cos(z[2]), -std::sin(z[2]), 0.0;
    return d;
  };
  return sys;
}

/// Lift (u, omega) at pose (x, y, theta) to a full state on the constraint:
/// xdot = u cos th - r w sin th, ydot = u sin th + r w cos th, thdot = w.
inline State sleigh_state(const SleighParams& prm, double x, double y, double theta,
                          ReducedState red, double t = 0.0) {
  const double c = std::cos(theta), s = std::sin(theta);
  Vector v(3);
  v << red.u * c - prm.r * red.omega * s, red.u * s + prm.r * red.omega * c, red.omega;
  return {t, ChartPoint{x, y, theta}, v};
}

/// u = xdot cos th + ydot sin th, omega = thdot.
inline ReducedState sleigh_reduce(const State& s) {
  const double th = s.z[2];
  return {s.v(0) * std::cos(th) + s.v(1) * std::sin(th), s.v(2)};
}

/// Body-frame transverse speed -r thdot + ydot cos th - xdot sin th; zero on
/// the constraint.
inline double sleigh_transverse_speed(const SleighParams& prm, const State& s) {
  const double th = s.z[2];
  return -prm.r * s.v(2) + s.v(1) * std::cos(th) - s.v(0) * std::sin(th);
}

struct SleighReducedTrajectory {
  std::vector<double> t;
  std::vector<ReducedState> states;
};

/// RK4 on omega' = -(r / (J + r^2)) u omega, u' = r omega^2, with the same
/// step rule as nhproj::integrate.
inline SleighReducedTrajectory sleigh_reduced_oracle(const SleighParams& prm, double u0,
                                                     double omega0, double t_end, double h) {
  prm.validate();
  if (!(h > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("oracle: bad step");
  const double r = prm.r, k = prm.r / (prm.J + prm.r * prm.r);
  auto rhs = [r, k](double, const Eigen::Vector2d& y) -> Eigen::Vector2d {
    return {r * y(1) * y(1), -k * y(0) * y(1)};
  };
  const auto steps = static_cast<long long>(std::ceil(t_end / h - 1e-9));
  const double dt = t_end / static_cast<double>(steps);
  SleighReducedTrajectory out;
  Eigen::Vector2d y(u0, omega0);
  out.t.push_back(0.0);
  out.states.push_back({u0, omega0});
  for (long long i = 1; i <= steps; ++i) {
    y = rk4_step(rhs, static_cast<double>(i - 1) * dt, y, dt);
    out.t.push_back(static_cast<double>(i) * dt);
    out.states.push_back({y(0), y(1)});
  }
  return out;
}

/// Chart (x, y, z), g = I, A = (-y, 0, 1), B = 0.
inline LagrangianSystem heisenberg_particle() {
  LagrangianSystem sys;
  sys.name = "heisenberg";
  sys.n = 3;
  sys.m = 1;
  sys.g = MetricField::identity(3);
  sys.pfaffian.n = 3;
  sys.pfaffian.m = 1;
  sys.pfaffian.A.eval = [](const ChartPoint& z) {
    Matrix a(1, 3);
    a << -z[1], 0.0, 1.0;
    return a;
  };
  sys.pfaffian.A.exact_partials = [](const ChartPoint&) {
    std::vector<Matrix> d(3, Matrix::Zero(1, 3));
    d[1](0, 0) = -1.0;
    return d;
  };
  return sys;
}

/// Horizontal frame X1 = d/dx + y d/dz, X2 = d/dy spanning ker A.
inline std::vector<VectorField> heisenberg_horizontal_frame() {
  return {{3, [](const ChartPoint& z) { return Vector(Eigen::Vector3d(1.0, 0.0, z[1])); }},
          {3, [](const ChartPoint&) { return Vector(Eigen::Vector3d(0.0, 1.0, 0.0)); }}};
}

/// Vertical field d/dz, the image of the orthogonal-case projector q.
inline VectorField heisenberg_vertical_field() {
  return {3, [](const ChartPoint&) { return Vector(Eigen::Vector3d(0.0, 0.0, 1.0)); }};
}

struct HeisenbergReducedTrajectory {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> position;  // x, y, z
  std::vector<Eigen::Vector2d> velocity;  // xdot, ydot
};

/// RK4 on x'' = -(y / (1 + y^2)) x' y', y'' = 0, reconstructing z from
/// z' = y x'.
inline HeisenbergReducedTrajectory heisenberg_reduced_oracle(double x0, double y0, double xd0,
                                                             double yd0, double t_end, double h,
                                                             double z0 = 0.0) {
  if (!(h > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("oracle: bad step");
  using V5 = Eigen::Matrix<double, 5, 1>;  // x, y, z, xdot, ydot
  auto rhs = [](double, const V5& s) -> V5 {
    V5 d;
    const double y = s(1), xd = s(3), yd = s(4);
    d << xd, yd, y * xd, -(y / (1.0 + y * y)) * xd * yd, 0.0;
    return d;
  };
  const auto steps = static_cast<long long>(std::ceil(t_end / h - 1e-9));
  const double dt = t_end / static_cast<double>(steps);
  HeisenbergReducedTrajectory out;
  V5 s;
  s << x0, y0, z0, xd0, yd0;
  auto record = [&](double t) {
    out.t.push_back(t);
    out.position.emplace_back(s(0), s(1), s(2));
    out.velocity.emplace_back(s(3), s(4));
  };
  record(0.0);
  for (long long i = 1; i <= steps; ++i) {
    s = rk4_step(rhs, static_cast<double>(i - 1) * dt, s, dt);
    record(static_cast<double>(i) * dt);
  }
  return out;
}

/// z -> P(z), the constraint-tangential projector of a system, as a field.
inline MatrixField projector_field(const LagrangianSystem& sys) {
  return {[sys](const ChartPoint& z) { return orthogonal_pair(sys.g, sys.pfaffian.matrix(z), z).P; },
          {}};
}

}  // namespace nhproj::scenarios
