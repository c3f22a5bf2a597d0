#pragma once

// Projector pairs (P, Q) and the almost product structure Gamma = Q - P.
//
// Two conventions appear side by side:
//  * ConstraintTangential: P projects onto the constraint distribution D
//    (ker A), Q onto its g-orthogonal complement. This is what the dynamics
//    code uses.
//  * ComplementTangential: Q projects onto D. This is the natural output of
//    an oblique frame w^alpha = dz^alpha + Gamma^alpha_a dz^a.
// Converting between the two is a swap of P and Q.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

#include "nhproj/errors.hpp"
#include "nhproj/linalg.hpp"
#include "nhproj/manifold.hpp"

namespace nhproj {

enum class Convention { ConstraintTangential, ComplementTangential };

inline const char* to_string(Convention c) {
  return c == Convention::ConstraintTangential ? "ConstraintTangential"
                                               : "ComplementTangential";
}

struct ProjectorPair {
  Matrix P;
  Matrix Q;
  ChartPoint at;
  Convention convention = Convention::ConstraintTangential;

  /// Almost product structure Q - P; squares to the identity.
  [[nodiscard]] Matrix gamma() const { return Q - P; }

  /// Same splitting with the other sign convention.
  [[nodiscard]] ProjectorPair swapped() const {
    return {Q, P, at,
            convention == Convention::ConstraintTangential
                ? Convention::ComplementTangential
                : Convention::ConstraintTangential};
  }

  [[nodiscard]] Eigen::Index dim() const { return P.rows(); }
};

/// Coefficients Gamma^alpha_a of an oblique coframe, rows alpha (forms),
/// columns a. The chart is ordered (z^a | z^alpha).
struct ObliqueFrame {
  Matrix gamma;

  [[nodiscard]] Eigen::Index forms() const { return gamma.rows(); }
  [[nodiscard]] Eigen::Index base() const { return gamma.cols(); }
  [[nodiscard]] Eigen::Index dim() const { return gamma.rows() + gamma.cols(); }

  /// Change-of-coframe matrix T with (dz^a, w^alpha) = T (dz^a, dz^alpha).
  [[nodiscard]] Matrix coframe() const {
    const Eigen::Index r = base(), k = forms();
    Matrix t = Matrix::Identity(r + k, r + k);
    t.bottomLeftCorner(k, r) = gamma;
    return t;
  }

  /// The forms w^alpha as rows over the coordinate basis.
  [[nodiscard]] Matrix forms_matrix() const { return coframe().bottomRows(forms()); }
};

/// Metric written in the coframe {dz^a, w^alpha}:
///   g = F_ab dz^a dz^b + F_a_alpha dz^a w^alpha + G_ab w^alpha w^beta
/// with the mixed term counted once (F_a_alpha carries the factor 2).
struct AdaptedMetricBlocks {
  Matrix F_ab;
  Matrix F_a_alpha;
  Matrix G_alpha_beta;

  /// Symmetric Gram matrix of g in the coframe basis.
  [[nodiscard]] Matrix coframe_gram() const {
    const Eigen::Index r = F_ab.rows(), k = G_alpha_beta.rows();
    Matrix m(r + k, r + k);
    m.topLeftCorner(r, r) = F_ab;
    m.topRightCorner(r, k) = 0.5 * F_a_alpha;
    m.bottomLeftCorner(k, r) = 0.5 * F_a_alpha.transpose();
    m.bottomRightCorner(k, k) = G_alpha_beta;
    return m;
  }

  /// Back to coordinate components g_IJ.
  [[nodiscard]] Matrix to_coordinates(const ObliqueFrame& frame) const {
    const Matrix t = frame.coframe();
    return t.transpose() * coframe_gram() * t;
  }

  /// True when the splitting is g-orthogonal (mixed block vanishes).
  [[nodiscard]] bool orthogonal(double tol = 1e-10) const {
    return max_abs(F_a_alpha) <= tol;
  }
};

namespace detail {

inline void require_full_row_rank(const Matrix& a, const char* what) {
  if (a.rows() == 0) return;
  if (!a.allFinite()) {
    throw DegenerateConstraints(std::string(what) + ": non-finite coefficients");
  }
  const auto rank = numerical_rank(a, 1e-10);
  if (rank < a.rows()) {
    throw DegenerateConstraints(std::string(what) + ": rank " + std::to_string(rank) +
                                " < " + std::to_string(a.rows()) + " constraints");
  }
}

// G^-1 for a Gram matrix built from constraint covectors.
inline Matrix invert_gram(const Matrix& gram, const char* what) {
  if (condition_number(gram) > 1e12) {
    throw DegenerateConstraints(std::string(what) + ": singular Gram matrix");
  }
  return gram.inverse();
}

}  // namespace detail

/// g-orthogonal pair from Pfaffian constraint rows A (m x n):
/// Q = (A g^-1)^t G^-1 A with G = A g^-1 A^t, P = I - Q.
/// P projects onto ker A; Q onto span{sharp(A_a)}.
inline ProjectorPair orthogonal_pair(const MetricField& g, const Matrix& a, const ChartPoint& z) {
  const Matrix gz = g(z);
  const Eigen::Index n = gz.rows();
  if (a.cols() != n && a.rows() != 0) {
    throw std::invalid_argument("orthogonal_pair: constraint matrix has " +
                                std::to_string(a.cols()) + " columns, expected " +
                                std::to_string(n));
  }
  const auto lu = factor_metric(gz);
  const Matrix id = Matrix::Identity(n, n);
  if (a.rows() == 0) {
    return {id, Matrix::Zero(n, n), z, Convention::ConstraintTangential};
  }
  detail::require_full_row_rank(a, "orthogonal_pair");

  const Matrix raised = lu.solve(a.transpose());  // g^-1 A^t, columns sharp(A_a)
  const Matrix gram = a * raised;
  const Matrix q = raised * detail::invert_gram(gram, "orthogonal_pair") * a;
  return {id - q, q, z, Convention::ConstraintTangential};
}

inline ProjectorPair orthogonal_pair(const MetricField& g, const MatrixField& a,
                                     const ChartPoint& z) {
  return orthogonal_pair(g, a(z), z);
}

/// Block projectors of an oblique frame:
///   P = [[I, 0], [-Gamma, 0]],  Q = [[0, 0], [Gamma, I]]
/// Q projects onto D = span{d/dz^alpha}, so the convention is
/// ComplementTangential.
inline ProjectorPair oblique_pair(const ObliqueFrame& frame, ChartPoint at = {}) {
  if (!frame.gamma.allFinite()) {
    throw std::invalid_argument("oblique_pair: non-finite frame coefficients");
  }
  const Eigen::Index r = frame.base(), k = frame.forms(), n = r + k;
  Matrix p = Matrix::Zero(n, n);
  Matrix q = Matrix::Zero(n, n);
  p.topLeftCorner(r, r).setIdentity();
  p.bottomLeftCorner(k, r) = -frame.gamma;
  q.bottomLeftCorner(k, r) = frame.gamma;
  q.bottomRightCorner(k, k).setIdentity();
  return {p, q, std::move(at), Convention::ComplementTangential};
}

/// Components of g in the coframe {dz^a, w^alpha}.
inline AdaptedMetricBlocks adapted_metric(const MetricField& g, const ObliqueFrame& frame,
                                          const ChartPoint& z) {
  const Matrix gz = g(z);
  const Eigen::Index r = frame.base(), k = frame.forms();
  if (gz.rows() != r + k) throw std::invalid_argument("adapted_metric: dimension mismatch");
  factor_metric(gz);

  const Matrix g_ab = gz.topLeftCorner(r, r);
  const Matrix g_aal = gz.topRightCorner(r, k);
  const Matrix g_alal = gz.bottomRightCorner(k, k);
  const Matrix& gam = frame.gamma;

  const Matrix mixed = g_aal * gam;  // g_{a alpha} Gamma^alpha_b
  AdaptedMetricBlocks out;
  out.F_ab = g_ab - mixed - mixed.transpose() + gam.transpose() * g_alal * gam;
  out.F_a_alpha = 2.0 * (g_aal - gam.transpose() * g_alal);
  out.G_alpha_beta = g_alal;
  return out;
}

/// q = G_ab w^alpha (x) xi^beta with xi^beta = sharp(w^beta) and G_ab the
/// inverse of G^ab = g_*(w^alpha, w^beta). Projects onto span{xi^alpha}.
inline Matrix q_projector(const MetricField& g, const Matrix& w_forms, const ChartPoint& z) {
  const Matrix gz = g(z);
  const Eigen::Index n = gz.rows();
  if (w_forms.cols() != n) throw std::invalid_argument("q_projector: dimension mismatch");
  if (w_forms.rows() == 0) return Matrix::Zero(n, n);
  const auto lu = factor_metric(gz);

  const Matrix xi = lu.solve(w_forms.transpose());  // columns xi^beta
  const Matrix g_upper = w_forms * xi;              // G^{alpha beta}
  const Matrix g_lower = detail::invert_gram(g_upper, "q_projector");
  return xi * g_lower * w_forms;
}

}  // namespace nhproj
