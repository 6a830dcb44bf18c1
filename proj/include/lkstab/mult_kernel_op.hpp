// SPDX-License-Identifier: MIT

/// \file lkstab/mult_kernel_op.hpp
/// \brief Multiplier-plus-kernel integral operators on L2^{m+n}[-tau_K, 0]
/// and the flattening map that rewrites a complete-quadratic operator on
/// Z_{m,n,K} as one of them.
///
/// An operator {M, N} acts on y in L2^{m+n}[-tau_K, 0] by
///
///   (T y)(s) = M(s) y(s) + integral_{-tau_K}^0 N(s, theta) y(theta) dtheta,
///
/// with M piecewise-polynomial on the delay grid and N piecewise on grid
/// pairs. A state z = (x, phi_1..phi_K) embeds into that space as
/// yhat(s) = [x; phi_i(rho_i(s))] on piece i, where rho_i(s) =
/// (s + tau_{i-1}) / a_i stretches piece i onto [-tau_i, 0] with ratio
/// a_i = (tau_i - tau_{i-1}) / tau_i. Under the Jacobian-corrected
/// flattening below, <yhat_1, T yhat_2>_{L2} equals the Z-space form
/// <z_1, P z_2>_Z exactly.

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lkstab/complete_quad_op.hpp"
#include "lkstab/grid.hpp"
#include "lkstab/matrix_poly.hpp"

namespace lkstab {

/// Multiplier M and kernel N of an integral operator on L2^{m+n}[-tau_K, 0].
/// The leading m rows/columns are the image of the finite-dimensional state
/// component; the trailing n are the segment component.
struct MultKernelOp {
  int m = 0;
  int n = 0;
  PiecewisePoly1D M;  ///< (m+n) x (m+n) per piece.
  PiecewisePoly2D N;  ///< (m+n) x (m+n) per piece pair.

  const IntervalGrid& grid() const { return M.grid(); }
  int dim() const { return m + n; }
};

/// Parameter tuple of a complete-quadratic operator with a rectangular
/// connecting block: P is m x m, Q_i are m x n, S_i and R_ij are n x n.
/// (m == n for the Lyapunov operator; the derivative operator has
/// m = n(K+1).)
struct L1Input {
  MatrixPoly P;
  std::vector<MatrixPoly> Q;
  std::vector<MatrixPoly> S;
  std::vector<MatrixPoly> R;  ///< K*K entries, row-major.
  IntervalGrid grid;

  int K() const { return grid.pieces(); }
  const MatrixPoly& r(int i, int j) const { return R.at(i * K() + j); }
};

/// View of a square operator family as an L1Input.
inline L1Input l1_input(const CompleteQuadOp& op) {
  return L1Input{op.P, op.Q, op.S, op.R, op.grid};
}

/// Whether the kernel pieces carry the 1/(a_i a_j) change-of-variables
/// Jacobian. Corrected flattening makes the L2 quadratic form match the
/// Z-space form exactly; the direct form reproduces the reference formula
/// literally. Both are valid as long as operator and state sides agree.
enum class FlattenMode { kJacobianCorrected, kDirect };

/// Rewrites (P, Q_i, S_i, R_ij) as a multiplier-plus-kernel pair on the
/// delay grid:
///
///   M on piece i = [ P                      (tau_K/a_i) Q_i(rho_i(s))   ]
///                  [ (tau_K/a_i) Q_i^T(..)  (tau_K/a_i) S_i(rho_i(s))   ]
///
///   N on pair (i,j) = c_ij R_ij(rho_i(s), rho_j(theta)) in the segment
///   block, with c_ij = 1/(a_i a_j) (corrected) or 1 (direct).
inline MultKernelOp flatten_l1(const L1Input& in,
                               FlattenMode mode = FlattenMode::kJacobianCorrected) {
  const int K = in.K();
  if (static_cast<int>(in.Q.size()) != K || static_cast<int>(in.S.size()) != K ||
      static_cast<int>(in.R.size()) != K * K)
    throw std::invalid_argument("flatten_l1: family size mismatch");
  const int m = in.P.rows();
  const int n = in.S.at(0).rows();
  if (in.P.cols() != m || in.Q[0].rows() != m || in.Q[0].cols() != n)
    throw std::invalid_argument("flatten_l1: block dimension mismatch");
  const double tau_K = in.grid.tau_max();

  MultKernelOp op;
  op.m = m;
  op.n = n;
  op.M = PiecewisePoly1D(in.grid, m + n, m + n);
  op.N = PiecewisePoly2D(in.grid, m + n, m + n);

  auto stretch = [&](const MatrixPoly& p, Var v, int piece) {
    const double a = in.grid.a(piece);
    return affine_substitute(p, v, 1.0 / a, in.grid.tau(piece) / a);
  };

  for (int i = 0; i < K; ++i) {
    const double scale = tau_K / in.grid.a(i);
    MatrixPoly qi = stretch(in.Q[i], Var::s, i) * scale;
    MatrixPoly& mi = op.M.piece(i);
    add_block(mi, 0, 0, in.P);
    add_block(mi, 0, m, qi);
    add_block(mi, m, 0, qi.transpose());
    add_block(mi, m, m, stretch(in.S[i], Var::s, i) * scale);
  }
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      double c = mode == FlattenMode::kJacobianCorrected
                     ? 1.0 / (in.grid.a(i) * in.grid.a(j))
                     : 1.0;
      MatrixPoly rij = stretch(stretch(in.r(i, j), Var::s, i), Var::theta, j);
      add_block(op.N.piece(i, j), m, m, rij * c);
    }
  return op;
}

/// Embeds z = (x, phi_1..phi_K) as yhat in L2^{m+n}[-tau_K, 0]:
/// yhat(s) = [x; phi_i(rho_i(s))] on piece i.
inline PiecewisePoly1D flatten_state(const ZState& z, const IntervalGrid& grid) {
  const int m = static_cast<int>(z.x.size());
  if (static_cast<int>(z.phi.size()) != grid.pieces())
    throw std::invalid_argument("flatten_state: segment count mismatch");
  const int n = z.phi.at(0).rows();
  PiecewisePoly1D out(grid, m + n, 1);
  for (int i = 0; i < grid.pieces(); ++i) {
    const double a = grid.a(i);
    MatrixPoly seg = affine_substitute(z.phi[i], Var::s, 1.0 / a, grid.tau(i) / a);
    add_block(out.piece(i), 0, 0, MatrixPoly::constant(z.x));
    add_block(out.piece(i), m, 0, seg);
  }
  return out;
}

/// Numeric instantiation of a multiplier/kernel pair.
inline MultKernelOp with_values(const MultKernelOp& op,
                                const std::vector<double>& assignment) {
  MultKernelOp out;
  out.m = op.m;
  out.n = op.n;
  out.M = PiecewisePoly1D(op.grid(), op.dim(), op.dim());
  out.N = PiecewisePoly2D(op.grid(), op.dim(), op.dim());
  for (int i = 0; i < op.grid().pieces(); ++i) {
    out.M.piece(i) = with_values(op.M.piece(i), assignment);
    for (int j = 0; j < op.grid().pieces(); ++j)
      out.N.piece(i, j) = with_values(op.N.piece(i, j), assignment);
  }
  return out;
}

/// Applies {M, N} to a piecewise-polynomial function, exactly.
inline PiecewisePoly1D apply_op(const MultKernelOp& op,
                                const PiecewisePoly1D& y) {
  if (!(y.grid() == op.grid()) || y.rows() != op.dim() || y.cols() != 1)
    throw std::invalid_argument("apply_op: operand shape mismatch");
  const IntervalGrid& grid = op.grid();
  PiecewisePoly1D out(grid, op.dim(), 1);
  for (int i = 0; i < grid.pieces(); ++i) {
    MatrixPoly acc = multiply(op.M.piece(i), y.piece(i));
    for (int j = 0; j < grid.pieces(); ++j) {
      MatrixPoly yj = rename_var(y.piece(j), Var::s, Var::theta);
      acc += integrate_definite(multiply(op.N.piece(i, j), yj), Var::theta,
                                grid.left(j), grid.right(j));
    }
    out.piece(i) = std::move(acc);
  }
  return out;
}

/// <a, b> = integral_{-tau_K}^0 a(s)^T b(s) ds, exactly.
inline double l2_inner_product(const PiecewisePoly1D& a,
                               const PiecewisePoly1D& b) {
  if (!(a.grid() == b.grid()) || a.rows() != b.rows() || a.cols() != 1 ||
      b.cols() != 1)
    throw std::invalid_argument("l2_inner_product: operand shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < a.grid().pieces(); ++i) {
    MatrixPoly prod = multiply(a.piece(i).transpose(), b.piece(i));
    acc += evaluate(
        integrate_definite(prod, Var::s, a.grid().left(i), a.grid().right(i)),
        0.0)(0, 0);
  }
  return acc;
}

}  // namespace lkstab
