#pragma once

// Chart-level fields, musical morphisms and central-difference derivatives.
//
// All systems live in a single global chart. Fields are pure closures over a
// ChartPoint; a field may carry an exact derivative closure which then takes
// precedence over finite differences.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "nhproj/errors.hpp"
#include "nhproj/linalg.hpp"

namespace nhproj {

/// Coordinates z^I of a point in the (single) chart.
class ChartPoint {
 public:
  ChartPoint() = default;
  explicit ChartPoint(Vector coords) : coords_(std::move(coords)) {
    if (!coords_.allFinite()) {
      throw std::invalid_argument("ChartPoint: non-finite coordinate");
    }
  }
  ChartPoint(std::initializer_list<double> c)
      : ChartPoint(Vector(Eigen::Map<const Vector>(c.begin(),
                                                   static_cast<Eigen::Index>(c.size())))) {}

  [[nodiscard]] const Vector& coords() const { return coords_; }
  [[nodiscard]] std::size_t dim() const {
    return static_cast<std::size_t>(coords_.size());
  }
  double operator[](Eigen::Index i) const { return coords_(i); }

  /// Copy with coordinate `k` shifted by `delta`.
  [[nodiscard]] ChartPoint shifted(Eigen::Index k, double delta) const {
    ChartPoint p = *this;
    p.coords_(k) += delta;
    return p;
  }

 private:
  Vector coords_;
};

/// Default central-difference step for coordinate k.
inline double fd_step(const ChartPoint& z, Eigen::Index k, double base = 1e-6) {
  return base * std::max(1.0, std::abs(z[k]));
}

namespace detail {

template <typename T>
bool finite_value(const T& v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::isfinite(v);
  } else {
    return v.allFinite();
  }
}

}  // namespace detail

/// Central-difference partial derivatives df/dz^K, K = 0..n-1.
///
/// `f` maps a ChartPoint to a double, Vector or Matrix; the result has one
/// entry of the same type per coordinate. If `step` is set it is used as an
/// absolute step for every coordinate, otherwise 1e-6*max(1,|z^K|).
template <typename F>
auto partials(const F& f, const ChartPoint& z, std::optional<double> step = std::nullopt)
    -> std::vector<std::decay_t<std::invoke_result_t<F, const ChartPoint&>>> {
  using T = std::decay_t<std::invoke_result_t<F, const ChartPoint&>>;
  std::vector<T> out;
  out.reserve(z.dim());
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(z.dim()); ++k) {
    const double h = step ? *step : fd_step(z, k);
    const T fp = f(z.shifted(k, h));
    const T fm = f(z.shifted(k, -h));
    if (!detail::finite_value(fp) || !detail::finite_value(fm)) {
      throw DifferentiationFailure("non-finite field value at coordinate " +
                                   std::to_string(k));
    }
    if constexpr (std::is_arithmetic_v<T>) {
      out.push_back((fp - fm) / (2.0 * h));
    } else {
      out.push_back(((fp - fm) / (2.0 * h)).eval());
    }
  }
  return out;
}

/// Gradient of a scalar function as a Vector.
template <typename F>
Vector gradient(const F& f, const ChartPoint& z, std::optional<double> step = std::nullopt) {
  const auto d = partials(f, z, step);
  Vector g(static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) g(static_cast<Eigen::Index>(k)) = d[k];
  return g;
}

/// Jacobian of a Vector-valued function: rows are outputs, columns coordinates.
template <typename F>
Matrix jacobian(const F& f, const ChartPoint& z, std::optional<double> step = std::nullopt) {
  const auto d = partials(f, z, step);
  if (d.empty()) return Matrix(0, 0);
  Matrix j(d.front().size(), static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) j.col(static_cast<Eigen::Index>(k)) = d[k];
  return j;
}

/// Real-valued field with an optional exact gradient.
struct ScalarField {
  std::function<double(const ChartPoint&)> value;
  std::function<Vector(const ChartPoint&)> exact_gradient;

  double operator()(const ChartPoint& z) const { return value(z); }

  [[nodiscard]] Vector grad(const ChartPoint& z) const {
    if (exact_gradient) return exact_gradient(z);
    return gradient(value, z);
  }

  /// The coordinate function z -> z^k, with its exact gradient.
  static ScalarField coordinate(Eigen::Index k, std::size_t dim) {
    return {[k](const ChartPoint& z) { return z[k]; },
            [k, dim](const ChartPoint&) {
              Vector g = Vector::Zero(static_cast<Eigen::Index>(dim));
              g(k) = 1.0;
              return g;
            }};
  }

  static ScalarField constant(double c) {
    return {[c](const ChartPoint&) { return c; },
            [](const ChartPoint& z) {
              return Vector(Vector::Zero(static_cast<Eigen::Index>(z.dim())));
            }};
  }
};

/// Vector or covector field; which one is a matter of how it is used.
struct VectorField {
  std::size_t dim = 0;
  std::function<Vector(const ChartPoint&)> eval;

  Vector operator()(const ChartPoint& z) const { return eval(z); }
};
using CovectorField = VectorField;

/// Matrix-valued field (constraint matrices, projector fields, ...).
struct MatrixField {
  std::function<Matrix(const ChartPoint&)> eval;
  /// Optional exact d/dz^K, one matrix per coordinate.
  std::function<std::vector<Matrix>(const ChartPoint&)> exact_partials;

  Matrix operator()(const ChartPoint& z) const { return eval(z); }

  [[nodiscard]] std::vector<Matrix> derivatives(const ChartPoint& z) const {
    if (exact_partials) return exact_partials(z);
    return partials(eval, z);
  }
};

/// Kinetic-energy metric g_IJ(z).
struct MetricField {
  std::size_t dim = 0;
  std::function<Matrix(const ChartPoint&)> eval;
  std::function<std::vector<Matrix>(const ChartPoint&)> exact_partials;

  Matrix operator()(const ChartPoint& z) const { return eval(z); }

  [[nodiscard]] std::vector<Matrix> derivatives(const ChartPoint& z) const {
    if (exact_partials) return exact_partials(z);
    return partials(eval, z);
  }

  static MetricField constant(Matrix g) {
    const auto n = static_cast<std::size_t>(g.rows());
    return {n, [g](const ChartPoint&) { return g; },
            [g](const ChartPoint& z) {
              return std::vector<Matrix>(z.dim(), Matrix::Zero(g.rows(), g.cols()));
            }};
  }

  static MetricField identity(std::size_t n) {
    return constant(Matrix::Identity(static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(n)));
  }
};

/// LU factorisation of g(z); raises SingularMetric when cond(g) > 1e12.
inline Eigen::PartialPivLU<Matrix> factor_metric(const Matrix& g) {
  if (g.rows() != g.cols() || g.rows() == 0) {
    throw std::invalid_argument("metric must be a non-empty square matrix");
  }
  if (!g.allFinite()) throw SingularMetric("metric has non-finite entries");
  const auto sv = Eigen::JacobiSVD<Matrix>(g).singularValues();
  const double rc = sv(sv.size() - 1) / sv(0);
  if (!(rc > 1e-12)) {
    throw SingularMetric("metric is singular or ill-conditioned (rcond=" +
                         std::to_string(rc) + ")");
  }
  return Eigen::PartialPivLU<Matrix>(g);
}

inline Matrix inverse_metric(const MetricField& g, const ChartPoint& z) {
  const Matrix gz = g(z);
  return factor_metric(gz).inverse();
}

/// Raise an index: g(z)^-1 phi.
inline Vector sharp(const MetricField& g, const ChartPoint& z, const Vector& phi) {
  const Matrix gz = g(z);
  if (phi.size() != gz.rows()) throw std::invalid_argument("sharp: dimension mismatch");
  return factor_metric(gz).solve(phi);
}

/// Lower an index: g(z) X.
inline Vector flat(const MetricField& g, const ChartPoint& z, const Vector& x) {
  const Matrix gz = g(z);
  if (x.size() != gz.rows()) throw std::invalid_argument("flat: dimension mismatch");
  factor_metric(gz);
  return gz * x;
}

/// Lie bracket [X,Y] = DY.X - DX.Y with finite-difference Jacobians.
inline Vector lie_bracket(const VectorField& x, const VectorField& y, const ChartPoint& z) {
  const Matrix dx = jacobian(x.eval, z);
  const Matrix dy = jacobian(y.eval, z);
  return dy * x(z) - dx * y(z);
}

}  // namespace nhproj
