#pragma once

// Small dense helpers shared by the projector, dynamics and Poisson code.
// Everything here works on Eigen dynamic-size types; systems of interest
// have n <= ~10 so no attempt is made at fixed-size specialisation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nhproj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Numerical rank with threshold `rel_tol * sigma_max`.
inline Eigen::Index numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  return static_cast<Eigen::Index>((s.array() > cut).count());
}

/// 2-norm condition number; +inf for singular or empty input.
inline double condition_number(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double skew_defect(const Matrix& m) { return max_abs(m + m.transpose()); }

inline double symmetry_defect(const Matrix& m) {
  return max_abs(m - m.transpose());
}

}  // namespace nhproj
