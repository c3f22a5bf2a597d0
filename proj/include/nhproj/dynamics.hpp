#pragma once

// Euler-Lagrange residual, D'Alembert-projected accelerations and a
// fixed-step RK4 integrator for L = 1/2 v^t g(z) v - V(z) under Pfaffian
// constraints A(z) v + B(t) = 0.
//
// E is a covector (d/dt dL/dv - dL/dz). Virtual displacements compatible
// with the constraints are P delta, so D'Alembert's condition reads
// E^t P delta = 0 for all delta, i.e. P^t E = 0. The constraint force is
// then Q^t E = E.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhproj/errors.hpp"
#include "nhproj/linalg.hpp"
#include "nhproj/manifold.hpp"
#include "nhproj/projectors.hpp"
#include "nhproj/rk4.hpp"

namespace nhproj {

/// A(z) v + B(t) = 0, with m rows.
struct PfaffianSystem {
  std::size_t n = 0;
  std::size_t m = 0;
  MatrixField A;
  std::function<Vector(double)> B;      // empty: B = 0
  std::function<Vector(double)> B_dot;  // empty: forward difference

  [[nodiscard]] Matrix matrix(const ChartPoint& z) const {
    if (m == 0) return Matrix(0, static_cast<Eigen::Index>(n));
    return A(z);
  }

  [[nodiscard]] Vector offset(double t) const {
    if (!B) return Vector::Zero(static_cast<Eigen::Index>(m));
    return B(t);
  }

  [[nodiscard]] Vector offset_rate(double t) const {
    if (B_dot) return B_dot(t);
    if (!B) return Vector::Zero(static_cast<Eigen::Index>(m));
    constexpr double dt = 1e-8;
    return (B(t + dt) - B(t)) / dt;
  }

  /// dA/dt along velocity v, applied to v: sum_K dA/dz^K v^K v.
  [[nodiscard]] Vector rate_term(const ChartPoint& z, const Vector& v) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(m));
    if (m == 0) return out;
    const auto dA = A.derivatives(z);
    for (Eigen::Index k = 0; k < v.size(); ++k) out += v(k) * (dA[k] * v);
    return out;
  }
};

struct LagrangianSystem {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  MetricField g;
  ScalarField V;  // empty value: V = 0
  PfaffianSystem pfaffian;

  [[nodiscard]] double potential(const ChartPoint& z) const { return V.value ? V(z) : 0.0; }

  [[nodiscard]] Vector potential_gradient(const ChartPoint& z) const {
    if (!V.value) return Vector::Zero(static_cast<Eigen::Index>(n));
    return V.grad(z);
  }
};

struct State {
  double t = 0.0;
  ChartPoint z;
  Vector v;
};

struct SampleDiagnostics {
  double energy = 0.0;
  Vector constraint_residual;
};

struct Trajectory {
  std::vector<State> samples;
  std::vector<SampleDiagnostics> diagnostics;
  double step = 0.0;

  [[nodiscard]] const State& back() const { return samples.back(); }
  [[nodiscard]] std::size_t size() const { return samples.size(); }
};

/// Raised when a step produces non-finite values or the projected system
/// cannot be solved. Carries everything accepted so far.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, Trajectory partial)
      : Error(what), partial_(std::move(partial)) {}

  [[nodiscard]] const Trajectory& partial() const { return partial_; }
  [[nodiscard]] const State& last_good() const { return partial_.samples.back(); }

 private:
  Trajectory partial_;
};

inline Vector constraint_residual(const LagrangianSystem& sys, const State& s) {
  return sys.pfaffian.matrix(s.z) * s.v + sys.pfaffian.offset(s.t);
}

inline double energy(const LagrangianSystem& sys, const State& s) {
  return 0.5 * s.v.dot(sys.g(s.z) * s.v) + sys.potential(s.z);
}

/// Velocity-dependent and potential part of E:
/// h_I = (d_K g_IJ - 1/2 d_I g_JK) v^J v^K + d_I V.
inline Vector velocity_terms(const LagrangianSystem& sys, const ChartPoint& z, const Vector& v) {
  const auto n = static_cast<Eigen::Index>(sys.n);
  const auto dg = sys.g.derivatives(z);
  Vector h = sys.potential_gradient(z);
  Matrix transport = Matrix::Zero(n, n);  // sum_K d_K g_IJ v^K
  for (Eigen::Index k = 0; k < n; ++k) transport += v(k) * dg[k];
  h += transport * v;
  for (Eigen::Index i = 0; i < n; ++i) h(i) -= 0.5 * v.dot(dg[i] * v);
  return h;
}

/// E_I = g_IJ a^J + h_I(z, v).
inline Vector el_residual(const LagrangianSystem& sys, const State& s, const Vector& a) {
  return sys.g(s.z) * a + velocity_terms(sys, s.z, s.v);
}

struct AccelerationSolution {
  Vector a;
  Vector force;  // E at the solution; the constraint force
  ProjectorPair pair;
  double stacked_residual = 0.0;
};

/// Solve { P^t (g a + h) = 0 ; A a = -Adot v - Bdot } as one stacked
/// least-squares problem of size (n+m) x n.
inline AccelerationSolution solve_acceleration(const LagrangianSystem& sys, const State& s) {
  const auto n = static_cast<Eigen::Index>(sys.n);
  const auto m = static_cast<Eigen::Index>(sys.m);
  const Matrix gz = sys.g(s.z);
  const Matrix a_mat = sys.pfaffian.matrix(s.z);
  ProjectorPair pair = orthogonal_pair(sys.g, a_mat, s.z);
  const Vector h = velocity_terms(sys, s.z, s.v);

  Matrix stacked(n + m, n);
  Vector rhs(n + m);
  stacked.topRows(n) = pair.P.transpose() * gz;
  rhs.head(n) = -pair.P.transpose() * h;
  if (m > 0) {
    stacked.bottomRows(m) = a_mat;
    rhs.tail(m) = -sys.pfaffian.rate_term(s.z, s.v) - sys.pfaffian.offset_rate(s.t);
  }
  if (!stacked.allFinite() || !rhs.allFinite()) {
    throw IllPosedDynamics("non-finite entries in projected system");
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  qr.setThreshold(1e-10);
  if (qr.rank() < n) {
    throw IllPosedDynamics("projected system has rank " + std::to_string(qr.rank()) +
                           " < " + std::to_string(n));
  }
  Vector a = qr.solve(rhs);
  const double res = (stacked * a - rhs).norm();
  if (!(res <= 1e-10 * (1.0 + rhs.norm()))) {
    throw IllPosedDynamics("projected system inconsistent, residual " + std::to_string(res));
  }
  Vector force = gz * a + h;
  return {std::move(a), std::move(force), std::move(pair), res};
}

inline Vector constrained_accel(const LagrangianSystem& sys, const State& s) {
  return solve_acceleration(sys, s).a;
}

/// v <- P v + v_B, where v_B = -g^-1 A^t G^-1 B is the g-minimal solution of
/// A v_B = -B.
inline Vector project_velocity(const LagrangianSystem& sys, double t, const ChartPoint& z,
                               const Vector& v) {
  if (sys.m == 0) return v;
  const Matrix a_mat = sys.pfaffian.matrix(z);
  const ProjectorPair pair = orthogonal_pair(sys.g, a_mat, z);
  Vector out = pair.P * v;
  const Vector b = sys.pfaffian.offset(t);
  if (b.size() > 0 && b.cwiseAbs().maxCoeff() > 0.0) {
    const Matrix raised = factor_metric(sys.g(z)).solve(a_mat.transpose());
    const Matrix gram = a_mat * raised;
    out -= raised * gram.ldlt().solve(b);
  }
  return out;
}

struct IntegrateOptions {
  double initial_tolerance = 1e-8;
};

/// Fixed-step RK4 on (z, v) with post-step velocity projection. The step is
/// t_end / ceil(t_end / h) so that the final sample lands on t0 + t_end.
inline Trajectory integrate(const LagrangianSystem& sys, const State& initial, double t_end,
                            double h, IntegrateOptions opts = {}) {
  if (!(h > 0.0) || !(t_end > 0.0)) {
    throw std::invalid_argument("integrate: h and t_end must be positive");
  }
  const auto n = static_cast<Eigen::Index>(sys.n);
  if (static_cast<Eigen::Index>(initial.z.dim()) != n || initial.v.size() != n) {
    throw std::invalid_argument("integrate: initial state has wrong dimension");
  }
  const Vector r0 = constraint_residual(sys, initial);
  if (r0.size() > 0 && r0.cwiseAbs().maxCoeff() > opts.initial_tolerance) {
    throw std::invalid_argument("integrate: initial state violates constraints (|Av+B| = " +
                                std::to_string(r0.cwiseAbs().maxCoeff()) + ")");
  }

  const auto steps = static_cast<long long>(std::ceil(t_end / h - 1e-9));
  const double dt = t_end / static_cast<double>(steps);

  Trajectory traj;
  traj.step = dt;
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);
  traj.diagnostics.reserve(static_cast<std::size_t>(steps) + 1);
  auto record = [&](const State& s) {
    traj.samples.push_back(s);
    traj.diagnostics.push_back({energy(sys, s), constraint_residual(sys, s)});
  };
  record(initial);

  auto rhs = [&](double t, const Vector& y) -> Vector {
    State s{t, ChartPoint(Vector(y.head(n))), y.tail(n)};
    Vector dy(2 * n);
    dy.head(n) = s.v;
    dy.tail(n) = constrained_accel(sys, s);
    return dy;
  };

  Vector y(2 * n);
  y << initial.z.coords(), initial.v;
  for (long long k = 1; k <= steps; ++k) {
    const double t0 = initial.t + static_cast<double>(k - 1) * dt;
    const double t1 = initial.t + static_cast<double>(k) * dt;
    try {
      Vector next = rk4_step(rhs, t0, y, dt);
      if (!next.allFinite()) {
        throw IntegrationFailure("non-finite state at t=" + std::to_string(t1), traj);
      }
      State s{t1, ChartPoint(Vector(next.head(n))), next.tail(n)};
      s.v = project_velocity(sys, t1, s.z, s.v);
      if (!s.v.allFinite()) {
        throw IntegrationFailure("non-finite velocity after projection at t=" +
                                     std::to_string(t1),
                                 traj);
      }
      y << s.z.coords(), s.v;
      record(s);
    } catch (const IntegrationFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw IntegrationFailure(std::string("step to t=") + std::to_string(t1) +
                                   " failed: " + e.what(),
                               traj);
    }
  }
  return traj;
}

}  // namespace nhproj
