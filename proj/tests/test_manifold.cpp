#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nhproj/manifold.hpp"
#include "test_support.hpp"

using namespace nhproj;
using nhproj::testing::Rng;

TEST(Sharp, IdentityMetric) {
  const auto g = MetricField::identity(3);
  const Vector out = sharp(g, ChartPoint{0, 0, 0}, Eigen::Vector3d(1, 0, 0));
  EXPECT_NEAR((out - Eigen::Vector3d(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(Sharp, SleighMetric) {
  const auto g = MetricField::constant(Eigen::Vector3d(1, 1, 2).asDiagonal().toDenseMatrix());
  const Vector out = sharp(g, ChartPoint{0, 0, 0}, Eigen::Vector3d(0, 0, 1));
  EXPECT_NEAR((out - Eigen::Vector3d(0, 0, 0.5)).norm(), 0.0, 1e-15);
}

TEST(Sharp, HeisenbergContactForm) {
  // sharp(dz - y dx) at y = 1 is d/dz - y d/dx.
  const auto g = MetricField::identity(3);
  const Vector out = sharp(g, ChartPoint{0, 1, 0}, Eigen::Vector3d(-1, 0, 1));
  EXPECT_NEAR((out - Eigen::Vector3d(-1, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(Flat, Examples) {
  EXPECT_NEAR((flat(MetricField::identity(3), ChartPoint{1, 2, 3}, Eigen::Vector3d(0, 1, 0)) -
               Eigen::Vector3d(0, 1, 0))
                  .norm(),
              0.0, 1e-15);
  const auto g = MetricField::constant(Eigen::Vector3d(1, 1, 2).asDiagonal().toDenseMatrix());
  EXPECT_NEAR((flat(g, ChartPoint{0, 0, 0}, Eigen::Vector3d(0, 0, 1)) - Eigen::Vector3d(0, 0, 2))
                  .norm(),
              0.0, 1e-15);
}

TEST(Musical, RoundTripAndSymmetryOnRandomMetrics) {
  Rng rng(7);
  double worst_round = 0.0, worst_sym = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(rng.integer(1, 8));
    const auto g = MetricField::constant(rng.spd(n));
    const ChartPoint z(rng.vector(n));
    const Vector phi = rng.vector(n), psi = rng.vector(n);
    worst_round = std::max(worst_round, (flat(g, z, sharp(g, z, phi)) - phi).norm());
    worst_round = std::max(worst_round, (sharp(g, z, flat(g, z, phi)) - phi).norm());
    worst_sym = std::max(worst_sym, std::abs(phi.dot(sharp(g, z, psi)) - psi.dot(sharp(g, z, phi))));
  }
  EXPECT_LT(worst_round, 1e-10);
  EXPECT_LT(worst_sym, 1e-10);
}

TEST(Sharp, SingularMetricRaises) {
  Matrix g = Matrix::Identity(3, 3);
  g(2, 2) = 0.0;
  EXPECT_THROW(sharp(MetricField::constant(g), ChartPoint{0, 0, 0}, Eigen::Vector3d(1, 0, 0)),
               SingularMetric);
  g(2, 2) = 1e-14;
  EXPECT_THROW(sharp(MetricField::constant(g), ChartPoint{0, 0, 0}, Eigen::Vector3d(1, 0, 0)),
               SingularMetric);
}

TEST(Jacobian, PolynomialProduct) {
  auto f = [](const ChartPoint& z) { return z[0] * z[1]; };
  const Vector d = gradient(f, ChartPoint{2, 3});
  EXPECT_NEAR(d(0), 3.0, 1e-8);
  EXPECT_NEAR(d(1), 2.0, 1e-8);
}

TEST(Jacobian, SleighProjectorEntry) {
  // Q_11(theta) = J sin^2(theta) / (J + r^2); derivative J sin(2 theta) / (J + r^2).
  const double J = 1.0, r = 1.0;
  auto q11 = [&](const ChartPoint& z) {
    return J * std::sin(z[0]) * std::sin(z[0]) / (J + r * r);
  };
  const double th = M_PI / 4;
  const Vector d = gradient(q11, ChartPoint{th});
  EXPECT_NEAR(d(0), J * std::sin(2 * th) / (J + r * r), 1e-7);
  EXPECT_NEAR(d(0), 0.5, 1e-7);
}

TEST(Jacobian, ConstantFieldIsZero) {
  auto f = [](const ChartPoint&) { return Matrix(Matrix::Constant(2, 2, 3.5)); };
  for (const auto& d : partials(f, ChartPoint{1, -4, 1e3})) EXPECT_LT(max_abs(d), 1e-10);
}

TEST(Jacobian, ClosedFormBattery) {
  // Relative accuracy 1e-6 on smooth closed-form fields at random points.
  Rng rng(11);
  struct Case {
    std::function<double(const ChartPoint&)> f;
    std::function<Vector(const ChartPoint&)> df;
  };
  const std::vector<Case> cases = {
      {[](const ChartPoint& z) { return std::sin(z[0]) * std::exp(z[1]); },
       [](const ChartPoint& z) {
         return Vector(Eigen::Vector2d(std::cos(z[0]) * std::exp(z[1]),
                                       std::sin(z[0]) * std::exp(z[1])));
       }},
      {[](const ChartPoint& z) { return z[0] * z[0] * z[0] - 3 * z[0] * z[1] * z[1]; },
       [](const ChartPoint& z) {
         return Vector(Eigen::Vector2d(3 * z[0] * z[0] - 3 * z[1] * z[1], -6 * z[0] * z[1]));
       }},
      {[](const ChartPoint& z) { return std::log(2.0 + z[0] * z[0] + z[1] * z[1]); },
       [](const ChartPoint& z) {
         const double d = 2.0 + z[0] * z[0] + z[1] * z[1];
         return Vector(Eigen::Vector2d(2 * z[0] / d, 2 * z[1] / d));
       }},
      {[](const ChartPoint& z) { return 1.0 / (1.0 + z[1] * z[1]) + std::atan(z[0]); },
       [](const ChartPoint& z) {
         const double d = 1.0 + z[1] * z[1];
         return Vector(Eigen::Vector2d(1.0 / (1.0 + z[0] * z[0]), -2 * z[1] / (d * d)));
       }},
  };
  for (const auto& c : cases) {
    for (int i = 0; i < 50; ++i) {
      const ChartPoint z(rng.vector(2, -2.0, 2.0));
      const Vector exact = c.df(z);
      const Vector approx = gradient(c.f, z);
      EXPECT_LE((approx - exact).norm(), 1e-6 * std::max(1.0, exact.norm()));
    }
  }
}

TEST(Jacobian, VectorValuedMatchesAnalytic) {
  auto f = [](const ChartPoint& z) {
    return Vector(Eigen::Vector2d(z[0] * z[1], std::cos(z[1])));
  };
  const Matrix j = jacobian(f, ChartPoint{0.5, 0.25});
  Matrix expected(2, 2);
  expected << 0.25, 0.5, 0.0, -std::sin(0.25);
  EXPECT_LT(max_abs(j - expected), 1e-9);
}

TEST(Jacobian, NonFiniteEvaluationRaises) {
  auto f = [](const ChartPoint& z) { return z[0] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0; };
  EXPECT_THROW(gradient(f, ChartPoint{0.0}), DifferentiationFailure);
}

TEST(ChartPointTest, RejectsNonFinite) {
  EXPECT_THROW(ChartPoint({1.0, std::nan("")}), std::invalid_argument);
}

TEST(ScalarFieldTest, ExactGradientTakesPrecedence) {
  ScalarField f{[](const ChartPoint& z) { return z[0] * z[0]; },
                [](const ChartPoint&) { return Vector(Vector::Constant(1, 42.0)); }};
  EXPECT_EQ(f.grad(ChartPoint{1.0})(0), 42.0);
  const auto x1 = ScalarField::coordinate(1, 3);
  EXPECT_EQ(x1.grad(ChartPoint{0, 0, 0}), Vector(Eigen::Vector3d(0, 1, 0)));
}

TEST(LieBracket, CoordinateFieldsCommute) {
  VectorField dx{2, [](const ChartPoint&) { return Vector(Eigen::Vector2d(1, 0)); }};
  VectorField rot{2, [](const ChartPoint& z) { return Vector(Eigen::Vector2d(-z[1], z[0])); }};
  // [d/dx, -y d/dx + x d/dy] = d/dy
  const Vector b = lie_bracket(dx, rot, ChartPoint{0.3, -0.7});
  EXPECT_LT((b - Eigen::Vector2d(0, 1)).norm(), 1e-9);
}
