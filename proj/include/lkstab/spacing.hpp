// SPDX-License-Identifier: MIT

/// \file lkstab/spacing.hpp
/// \brief Spacing operators: multiplier/kernel pairs {F, H} whose quadratic
/// form vanishes identically on R^m x L2^n[-tau_K, 0].
///
/// For y(s) = [c; w(s)] with constant first block,
///
///   integral y^T F y ds + double-integral y(s)^T H(s,theta) y(theta) = 0
///
/// holds for every c and w by construction: F repackages the interval
/// integrals of the kernel functions that H subtracts pointwise, plus a
/// zero-mean multiplier K(s) seen only by the constant block. Adding such a
/// pair to an operator changes nothing about its quadratic form but moves
/// polynomial mass between the multiplier and the kernel, which is what lets
/// a fixed-degree Gram cone certify it.

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "lkstab/grid.hpp"
#include "lkstab/matrix_poly.hpp"
#include "lkstab/sdp_problem.hpp"

namespace lkstab {

/// A zero-form pair plus the equality rows it requires (the zero-mean
/// conditions on the K(s) multiplier). The rows are returned, not added;
/// the feasibility layer owns the problem's constraint set.
struct SpacingOp {
  int m = 0;
  int n = 0;
  PiecewisePoly1D F;  ///< (m+n) square per piece.
  PiecewisePoly2D H;  ///< (m+n) square per piece pair.
  std::vector<LinearEq> constraints;  ///< Zero-mean rows, m*m of them.
};

namespace spacing_detail {

/// Fresh piecewise univariate function, degree <= d per piece.
inline PiecewisePoly1D fresh_1d(SdpProblem& problem, const IntervalGrid& grid,
                                int rows, int cols, int d) {
  PiecewisePoly1D out(grid, rows, cols);
  for (int i = 0; i < grid.pieces(); ++i)
    for (int e = 0; e <= d; ++e)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          out.piece(i).add_to_coeff({e, 0}, r, c, problem.new_free_var());
  return out;
}

/// Fresh piecewise bivariate function, degree <= d in each variable.
inline PiecewisePoly2D fresh_2d(SdpProblem& problem, const IntervalGrid& grid,
                                int rows, int cols, int d) {
  PiecewisePoly2D out(grid, rows, cols);
  for (int i = 0; i < grid.pieces(); ++i)
    for (int j = 0; j < grid.pieces(); ++j)
      for (int a = 0; a <= d; ++a)
        for (int b = 0; b <= d; ++b)
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
              out.piece(i, j).add_to_coeff({a, b}, r, c, problem.new_free_var());
  return out;
}

/// integral over the first argument: sum_l int_{piece l} P(omega, s) domega,
/// returned as a univariate function of s restricted to piece \p j.
inline MatrixPoly integrate_first_arg(const PiecewisePoly2D& p, int j) {
  const IntervalGrid& grid = p.grid();
  MatrixPoly acc(p.rows(), p.cols());
  for (int l = 0; l < grid.pieces(); ++l)
    acc += rename_var(
        integrate_definite(p.piece(l, j), Var::s, grid.left(l), grid.right(l)),
        Var::theta, Var::s);
  return acc;
}

/// integral over the second argument: sum_l int_{piece l} P(s, omega) domega,
/// restricted to piece \p i of the first argument.
inline MatrixPoly integrate_second_arg(const PiecewisePoly2D& p, int i) {
  const IntervalGrid& grid = p.grid();
  MatrixPoly acc(p.rows(), p.cols());
  for (int l = 0; l < grid.pieces(); ++l)
    acc += integrate_definite(p.piece(i, l), Var::theta, grid.left(l),
                              grid.right(l));
  return acc;
}

}  // namespace spacing_detail

/// Allocates a fresh spacing pair on \p problem with finite block m, segment
/// block n, and per-piece degree d for all four generating functions
/// (K(s) m x m zero-mean; L11 m x m, L12 m x n, L21 m x n placed transposed):
///
///   F(s) = [ K(s) + (1/tau_K) int int L11   int L12(omega, s) domega ]
///          [ (int L21(s, omega) domega)^T    0                       ]
///   H(s,theta) = - [ L11(s,theta)       L12(s,theta) ]
///                  [ L21(s,theta)^T     0            ].
inline SpacingOp spacing_make(SdpProblem& problem, int m, int n,
                              const IntervalGrid& grid, int d) {
  if (m <= 0 || n < 0 || d < 0)
    throw std::invalid_argument("spacing_make: bad dimensions");
  using spacing_detail::fresh_1d;
  using spacing_detail::fresh_2d;

  PiecewisePoly1D Kmult = fresh_1d(problem, grid, m, m, d);
  PiecewisePoly2D L11 = fresh_2d(problem, grid, m, m, d);
  PiecewisePoly2D L12 = fresh_2d(problem, grid, m, n, d);
  PiecewisePoly2D L21 = fresh_2d(problem, grid, m, n, d);

  SpacingOp out;
  out.m = m;
  out.n = n;
  out.F = PiecewisePoly1D(grid, m + n, m + n);
  out.H = PiecewisePoly2D(grid, m + n, m + n);

  // Constant mean of the L11 double integral, spread back uniformly.
  MatrixPoly l11_mean(m, m);
  for (int l = 0; l < grid.pieces(); ++l)
    for (int t = 0; t < grid.pieces(); ++t)
      l11_mean += integrate_definite(
          integrate_definite(L11.piece(l, t), Var::s, grid.left(l),
                             grid.right(l)),
          Var::theta, grid.left(t), grid.right(t));
  l11_mean = l11_mean * (1.0 / grid.tau_max());

  for (int i = 0; i < grid.pieces(); ++i) {
    MatrixPoly& f = out.F.piece(i);
    add_block(f, 0, 0, Kmult.piece(i) + l11_mean);
    add_block(f, 0, m, spacing_detail::integrate_first_arg(L12, i));
    add_block(f, m, 0,
              spacing_detail::integrate_second_arg(L21, i).transpose());
    for (int j = 0; j < grid.pieces(); ++j) {
      MatrixPoly& h = out.H.piece(i, j);
      add_block(h, 0, 0, -L11.piece(i, j));
      add_block(h, 0, m, -L12.piece(i, j));
      add_block(h, m, 0, -L21.piece(i, j).transpose());
    }
  }

  // Zero-mean rows: sum_i int_{piece i} K(s) ds = 0, entrywise.
  MatrixPoly k_total(m, m);
  for (int i = 0; i < grid.pieces(); ++i)
    k_total += integrate_definite(Kmult.piece(i), Var::s, grid.left(i),
                                  grid.right(i));
  out.constraints = coefficient_equalities(k_total, MatrixPoly(m, m));
  return out;
}

}  // namespace lkstab
