// Dirac bracket on canonical R^4 = (q1, p1, q2, p2) with the second-class
// pair q2 = 0, p2 = 0, and the Heisenberg pseudo-Poisson tensor.

#include <cstdio>

#include "nhproj/nhproj.hpp"

namespace {

void print(const char* name, const nhproj::Matrix& m) {
  std::printf("%s =\n", name);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) std::printf(" % .5f", m(i, j));
    std::printf("\n");
  }
}

}  // namespace

int main() {
  using namespace nhproj;
  const auto pi = PoissonField::canonical(2);
  const SecondClassConstraintSet cons{{ScalarField::coordinate(2, 4), ScalarField::coordinate(3, 4)}};
  const ChartPoint z{0.3, -0.2, 0.0, 0.0};
  const auto dec = transverse_decomposition(pi, cons, z);
  print("Pi_W", dec.Pi_W);
  print("Pi_S", dec.Pi_S);
  print("Pi_M", dec.Pi_M);
  std::printf("{q1, p1}_M = %.3f\n\n", dirac_bracket(pi, cons, ScalarField::coordinate(0, 4), ScalarField::coordinate(1, 4), z));

  const auto pf = scenarios::projector_field(scenarios::heisenberg_particle());
  const double y = 0.5, px = 1.0;
  print("pseudo-Poisson (Heisenberg, y = 0.5, p = (1, 0.3, y))",
        pseudo_poisson(pf, ChartPoint{0.0, y, 0.0}, Eigen::Vector3d(px, 0.3, y * px)));
  return 0;
}
