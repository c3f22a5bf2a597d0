#pragma once

// Poisson bivectors of constant rank, symplectic-leaf projectors, Dirac
// brackets for second-class constraint sets, the transverse decomposition
// Pi_W = Pi_S + Pi_M, and the pseudo-Poisson tensor obtained by projecting
// canonical momenta with a configuration-space projector field.
//
// Bivectors are stored as skew matrices with Pi(alpha, beta) = alpha^t Pi beta,
// so {f, g} = grad(f)^t Pi grad(g).

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nhproj/errors.hpp"
#include "nhproj/linalg.hpp"
#include "nhproj/manifold.hpp"

namespace nhproj {

/// Skew bivector field, not necessarily Poisson.
struct BivectorField {
  std::size_t dim = 0;
  std::function<Matrix(const ChartPoint&)> eval;

  Matrix operator()(const ChartPoint& z) const { return eval(z); }
};

/// Poisson tensor with a declared constant rank.
struct PoissonField : BivectorField {
  std::size_t rank = 0;

  /// Checks skew-symmetry (1e-12, relative) and the declared rank at z.
  void validate(const ChartPoint& z) const {
    const Matrix pz = eval(z);
    const double scale = std::max(1.0, max_abs(pz));
    if (skew_defect(pz) > 1e-12 * scale) {
      throw std::invalid_argument("PoissonField: tensor is not skew-symmetric");
    }
    const auto r = numerical_rank(pz, 1e-10);
    if (static_cast<std::size_t>(r) != rank) {
      throw std::invalid_argument("PoissonField: numerical rank " + std::to_string(r) +
                                  " differs from declared rank " + std::to_string(rank));
    }
  }

  static PoissonField constant(Matrix pi, std::size_t rank) {
    PoissonField f;
    f.dim = static_cast<std::size_t>(pi.rows());
    f.rank = rank;
    f.eval = [pi = std::move(pi)](const ChartPoint&) { return pi; };
    return f;
  }

  /// Canonical structure on (q^1, p_1, ..., q^s, p_s).
  static PoissonField canonical(std::size_t pairs) {
    const auto n = static_cast<Eigen::Index>(2 * pairs);
    Matrix pi = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; i += 2) {
      pi(i, i + 1) = 1.0;
      pi(i + 1, i) = -1.0;
    }
    return constant(pi, 2 * pairs);
  }
};

struct BracketValue {
  double value = 0.0;
  ChartPoint at;
};

inline double bracket(const BivectorField& pi, const ScalarField& f, const ScalarField& g,
                      const ChartPoint& z) {
  return f.grad(z).dot(pi(z) * g.grad(z));
}

using BracketFn =
    std::function<double(const ScalarField&, const ScalarField&, const ChartPoint&)>;

inline BracketFn bracket_of(BivectorField pi) {
  return [pi = std::move(pi)](const ScalarField& f, const ScalarField& g,
                              const ChartPoint& z) { return bracket(pi, f, g, z); };
}

// ---------------------------------------------------------------------------
// Symplectic leaf projectors in an adapted chart (z^a | z^u).

struct LeafProjectors {
  /// w^a (x) Y_a assembled as w^a lambda_ab xi^b, xi^b = Pi(w^b, .).
  Matrix leaf;
  /// id - leaf.
  Matrix complement;
  /// The lambda-weighted map lambda_ab w^b (x) Y_a; same image as `leaf`,
  /// not idempotent in general.
  Matrix theta_map;
  /// lambda = (pi^{ab})^-1 on the leaf block.
  Matrix lambda;
};

/// `leaf_dim` leading coordinates span the leaf; Pi must vanish outside the
/// leading leaf_dim x leaf_dim block.
inline LeafProjectors leaf_projectors(const BivectorField& pi, std::size_t leaf_dim,
                                      const ChartPoint& z) {
  const Matrix pz = pi(z);
  const Eigen::Index n = pz.rows();
  const auto m = static_cast<Eigen::Index>(leaf_dim);
  if (m > n) throw std::invalid_argument("leaf_projectors: leaf larger than chart");
  const double scale = std::max(1.0, max_abs(pz));
  Matrix outside = pz;
  outside.topLeftCorner(m, m).setZero();
  if (max_abs(outside) > 1e-12 * scale) {
    throw std::invalid_argument("leaf_projectors: bivector not supported on the leaf block");
  }
  const Matrix block = pz.topLeftCorner(m, m);
  if (m > 0 && (numerical_rank(block, 1e-10) < m || condition_number(block) > 1e10)) {
    throw NotSymplecticOnLeaf("leaf block of the bivector is singular");
  }

  LeafProjectors out;
  out.lambda = m > 0 ? Matrix(block.inverse()) : Matrix(0, 0);
  // Column b of xi is Pi(w^b, .) = row b of Pi.
  const Matrix xi = pz.topRows(m).transpose();
  out.leaf = Matrix::Zero(n, n);
  out.leaf.leftCols(m) = xi * out.lambda.transpose();
  out.complement = Matrix::Identity(n, n) - out.leaf;
  out.theta_map = Matrix::Zero(n, n);
  out.theta_map.topLeftCorner(m, m) = out.lambda;
  return out;
}

// ---------------------------------------------------------------------------
// Second-class constraints and Dirac brackets.

struct SecondClassConstraintSet {
  std::vector<ScalarField> functions;

  [[nodiscard]] std::size_t size() const { return functions.size(); }

  /// Gradients as columns, n x k.
  [[nodiscard]] Matrix gradients(const ChartPoint& z) const {
    Matrix gr(static_cast<Eigen::Index>(z.dim()), static_cast<Eigen::Index>(size()));
    for (std::size_t a = 0; a < size(); ++a) {
      gr.col(static_cast<Eigen::Index>(a)) = functions[a].grad(z);
    }
    return gr;
  }
};

struct ConstraintBrackets {
  Matrix gradients;     // n x k
  Matrix lambda_upper;  // {x^a, x^b}
  Matrix lambda_lower;  // inverse
};

inline ConstraintBrackets constraint_brackets(const Matrix& pi_z,
                                              const SecondClassConstraintSet& cons,
                                              const ChartPoint& z) {
  ConstraintBrackets cb;
  cb.gradients = cons.gradients(z);
  cb.lambda_upper = cb.gradients.transpose() * pi_z * cb.gradients;
  if (cons.size() % 2 != 0) {
    throw FirstClassConstraint("odd number of constraints cannot be second-class");
  }
  if (cons.size() == 0) {
    cb.lambda_lower = Matrix(0, 0);
    return cb;
  }
  if (!(condition_number(cb.lambda_upper) < 1e10)) {
    throw FirstClassConstraint("constraint bracket matrix is singular (cond >= 1e10)");
  }
  cb.lambda_lower = cb.lambda_upper.inverse();
  return cb;
}

/// {f,g}_M = {f,g}_W - {f,x^a}_W lambda_ab {x^b,g}_W.
inline double dirac_bracket(const BivectorField& pi_w, const SecondClassConstraintSet& cons,
                            const ScalarField& f, const ScalarField& g, const ChartPoint& z) {
  const Matrix pz = pi_w(z);
  const auto cb = constraint_brackets(pz, cons, z);
  const Vector df = f.grad(z);
  const Vector dg = g.grad(z);
  double value = df.dot(pz * dg);
  if (cons.size() > 0) {
    const Vector f_x = cb.gradients.transpose() * (pz.transpose() * df);  // {f, x^a}
    const Vector x_g = cb.gradients.transpose() * (pz * dg);              // {x^b, g}
    value -= f_x.dot(cb.lambda_lower * x_g);
  }
  return value;
}

inline BracketFn dirac_bracket_of(BivectorField pi_w, SecondClassConstraintSet cons) {
  return [pi_w = std::move(pi_w), cons = std::move(cons)](
             const ScalarField& f, const ScalarField& g, const ChartPoint& z) {
    return dirac_bracket(pi_w, cons, f, g, z);
  };
}

struct TransverseDecomposition {
  Matrix Pi_W;
  Matrix Pi_S;  // leaf part
  Matrix Pi_M;  // transverse part, Pi_W - Pi_S
  Matrix lambda_upper;
  Matrix lambda_lower;
  /// Projector onto the leaf directions along ker(dx^a):
  /// p = X^a lambda_ab dx^b with X^a = Pi grad(x^a). Pi_S = p Pi p^t.
  Matrix leaf_tangent;
};

inline TransverseDecomposition transverse_decomposition(const BivectorField& pi_w,
                                                        const SecondClassConstraintSet& cons,
                                                        const ChartPoint& z) {
  TransverseDecomposition out;
  out.Pi_W = pi_w(z);
  const auto n = out.Pi_W.rows();
  const auto cb = constraint_brackets(out.Pi_W, cons, z);
  out.lambda_upper = cb.lambda_upper;
  out.lambda_lower = cb.lambda_lower;
  if (cons.size() == 0) {
    out.Pi_S = Matrix::Zero(n, n);
    out.leaf_tangent = Matrix::Zero(n, n);
  } else {
    const Matrix hamiltonian = out.Pi_W * cb.gradients;  // columns X^a
    out.leaf_tangent = hamiltonian * cb.lambda_lower * cb.gradients.transpose();
    out.Pi_S = out.leaf_tangent * out.Pi_W;
  }
  out.Pi_M = out.Pi_W - out.Pi_S;
  return out;
}

// ---------------------------------------------------------------------------
// Pseudo-Poisson tensor of projected momenta pbar = P(z) p.

/// Tensor on (z, pbar) with blocks
///   {z^i, z^j} = 0, {z^i, pbar_j} = P_ji, {pbar_i, pbar_j} = D_ij,
///   D_ij = (P_jk d_k P_il - P_ik d_k P_jl) p_l,
/// i.e. [[0, P^t], [-P, D]] in matrix layout.
inline Matrix pseudo_poisson(const MatrixField& pfield, const ChartPoint& z, const Vector& p) {
  const Matrix proj = pfield(z);
  const Eigen::Index n = proj.rows();
  if (p.size() != n) throw std::invalid_argument("pseudo_poisson: momentum has wrong size");
  const auto dproj = pfield.derivatives(z);
  Matrix rate(n, n);  // column k: (d_k P) p
  for (Eigen::Index k = 0; k < n; ++k) rate.col(k) = dproj[k] * p;
  const Matrix half = rate * proj.transpose();

  Matrix out = Matrix::Zero(2 * n, 2 * n);
  out.topRightCorner(n, n) = proj.transpose();
  out.bottomLeftCorner(n, n) = -proj;
  out.bottomRightCorner(n, n) = half - half.transpose();
  return out;
}

/// Pseudo-Poisson tensor as a bivector field on (z, p), 2n coordinates.
inline BivectorField pseudo_poisson_field(MatrixField pfield, std::size_t n) {
  return {2 * n, [pfield = std::move(pfield), n](const ChartPoint& zp) {
            const auto nn = static_cast<Eigen::Index>(n);
            return pseudo_poisson(pfield, ChartPoint(Vector(zp.coords().head(nn))),
                                  zp.coords().tail(nn));
          }};
}

/// Cyclic sum {f,{g,h}} + {g,{h,f}} + {h,{f,g}}. Inner brackets become
/// scalar fields differentiated with a five-point stencil, step
/// 1e-3*max(1,|z^K|).
inline double jacobiator(const BracketFn& br, const ScalarField& f, const ScalarField& g,
                         const ScalarField& h, const ChartPoint& z) {
  auto nested = [&br](const ScalarField& a, const ScalarField& b) {
    ScalarField s;
    s.value = [&br, a, b](const ChartPoint& x) { return br(a, b, x); };
    s.exact_gradient = [v = s.value](const ChartPoint& x) {
      Vector d(static_cast<Eigen::Index>(x.dim()));
      for (Eigen::Index k = 0; k < d.size(); ++k) {
        const double hk = fd_step(x, k, 1e-3);
        d(k) = (-v(x.shifted(k, 2 * hk)) + 8 * v(x.shifted(k, hk)) - 8 * v(x.shifted(k, -hk)) +
                v(x.shifted(k, -2 * hk))) /
               (12 * hk);
      }
      if (!d.allFinite()) throw DifferentiationFailure("non-finite nested bracket");
      return d;
    };
    return s;
  };
  return br(f, nested(g, h), z) + br(g, nested(h, f), z) + br(h, nested(f, g), z);
}

}  // namespace nhproj
