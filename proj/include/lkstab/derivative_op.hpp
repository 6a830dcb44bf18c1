// SPDX-License-Identifier: MIT

/// \file lkstab/derivative_op.hpp
/// \brief Symbolic derivative constructions for a complete-quadratic
/// operator under the dynamics x'(t) = A_0 x(t) + sum A_i x(t - tau_i).
///
/// Two distinct derivative forms live here, both emitted over the extended
/// finite state [x(t); x(t-tau_1); ...; x(t-tau_K)] of dimension n(K+1)
/// with all entries affine in the decision variables of the source
/// operator:
///
///  - derivative_op_single / derivative_op_multi: the symmetric part of the
///    composed operator (generator applied to the operator image). Its
///    algebra presumes the structural boundary constraints, which make the
///    operator map compatible states to compatible states; it is the form
///    the dual stability condition bounds.
///  - derivative_op_trajectory: the literal time derivative of the scalar
///    functional <z_t, P z_t> along solutions, valid for arbitrary tuples.
///
/// The stability condition bounds these forms from above, so the
/// feasibility layer negates them before cone matching; no coercivity shift
/// is applied here.

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "lkstab/complete_quad_op.hpp"
#include "lkstab/delay_system.hpp"
#include "lkstab/matrix_poly.hpp"
#include "lkstab/mult_kernel_op.hpp"

namespace lkstab {

/// Single-delay derivative tuple (the explicit 2n-block form):
///
///   D0 = [ S11 + S11^T  S12 ]   with  S11 = tau A0 (R(0,0)+S(0))
///        [ S12^T        S22 ]              + tau A1 R(-tau,0) + S(0)/2,
///                                    S12 = tau A1 S(-tau), S22 = -S(-tau);
///   V(s) = [ S13(s); 0 ],  S13(s) = A0 R(0,s) + A1 R(-tau,s) + Rdot(s,0)^T;
///   Sdot = dS/ds;  E(s,theta) = dR/ds + dR/dtheta.
struct DerivativeOpSingle {
  MatrixPoly D0;    ///< 2n x 2n, constant.
  MatrixPoly V;     ///< 2n x n in s (top block S13, zero bottom block).
  MatrixPoly Sdot;  ///< n x n in s.
  MatrixPoly E;     ///< n x n in (s, theta).
};

/// Multi-delay derivative tuple over the extended state dimension n(K+1).
struct DerivativeOpMulti {
  int n = 0;
  int K = 0;
  IntervalGrid grid;
  MatrixPoly D1;                 ///< n(K+1) square, constant.
  std::vector<MatrixPoly> B;     ///< K stacked blocks V_i = [B_i; 0; ...; 0].
  std::vector<MatrixPoly> Sdot;  ///< K entries, n x n in s.
  std::vector<MatrixPoly> G;     ///< K*K entries row-major, n x n in (s,theta).

  const MatrixPoly& g(int i, int j) const { return G.at(i * K + j); }

  /// The tuple viewed as an L1 flattening input with finite part n(K+1).
  L1Input l1_input() const { return L1Input{D1, B, Sdot, G, grid}; }
};

namespace deriv_detail {

/// R with its first argument fixed: R(at, s) as a polynomial in s.
inline MatrixPoly fix_first(const MatrixPoly& r, double at) {
  return rename_var(eval_var(r, Var::s, at), Var::theta, Var::s);
}

/// R with its second argument fixed: R(s, at) as a polynomial in s.
inline MatrixPoly fix_second(const MatrixPoly& r, double at) {
  return eval_var(r, Var::theta, at);
}

}  // namespace deriv_detail

/// Derivative tuple for a single delay, from the segment parameters (S, R)
/// of the reduced operator form (P and Q eliminated by substitution).
inline DerivativeOpSingle derivative_op_single(const DelaySystem& sys,
                                               const MatrixPoly& S,
                                               const MatrixPoly& R) {
  if (sys.K() != 1)
    throw std::invalid_argument("derivative_op_single: system must have K = 1");
  const int n = sys.n();
  if (S.rows() != n || S.cols() != n || R.rows() != n || R.cols() != n)
    throw std::invalid_argument("derivative_op_single: parameter dimensions");
  const double tau = sys.tau_max();
  const Eigen::MatrixXd& A0 = sys.A(0);
  const Eigen::MatrixXd& A1 = sys.A(1);
  const MatrixPoly A0p = MatrixPoly::constant(A0);
  const MatrixPoly A1p = MatrixPoly::constant(A1);

  MatrixPoly S0 = eval_var(S, Var::s, 0.0);
  MatrixPoly Stau = eval_var(S, Var::s, -tau);
  MatrixPoly R00 = eval_var(deriv_detail::fix_first(R, 0.0), Var::s, 0.0);
  MatrixPoly Rtau0 = eval_var(deriv_detail::fix_second(R, 0.0), Var::s, -tau);

  MatrixPoly S11 = multiply(A0p, R00 + S0) * tau +
                   multiply(A1p, Rtau0) * tau + S0 * 0.5;
  MatrixPoly S12 = multiply(A1p, Stau) * tau;
  MatrixPoly S22 = -Stau;

  DerivativeOpSingle out;
  out.D0 = MatrixPoly(2 * n, 2 * n);
  add_block(out.D0, 0, 0, S11 + S11.transpose());
  add_block(out.D0, 0, n, S12);
  add_block(out.D0, n, 0, S12.transpose());
  add_block(out.D0, n, n, S22);

  MatrixPoly S13 = multiply(A0p, deriv_detail::fix_first(R, 0.0)) +
                   multiply(A1p, deriv_detail::fix_first(R, -tau)) +
                   deriv_detail::fix_second(differentiate(R, Var::s), 0.0)
                       .transpose();
  out.V = MatrixPoly(2 * n, n);
  add_block(out.V, 0, 0, S13);

  out.Sdot = differentiate(S, Var::s);
  out.E = differentiate(R, Var::s) + differentiate(R, Var::theta);
  return out;
}

/// Derivative tuple for any K, from a full operator tuple. Blocks:
///
///   D1 = [ C0 + C0^T  C_1 ... C_K ]   C0  = A0 P + tau_K sum_i A_i
///        [ C_i^T      -S_i(-tau_i)]          Q_i(-tau_i)^T + sum_i S_i(0)/2,
///                                     C_i = tau_K A_i S_i(-tau_i);
///   B_i(s) = A0 Q_i(s) + Qdot_i(s) + sum_j A_j R_ji(-tau_j, s), stacked as
///   V_i = [B_i; 0; ...; 0]; Sdot_i = dS_i/ds; G_ij = ds R_ij + dtheta R_ij
///   (the pairing R_ji(theta,s)^T = R_ij(s,theta) makes the second form of
///   the cross-derivative identical).
inline DerivativeOpMulti derivative_op_multi(const DelaySystem& sys,
                                             const CompleteQuadOp& op) {
  const int n = sys.n();
  const int K = sys.K();
  if (op.n != n || op.K != K || !(op.grid == sys.grid()))
    throw std::invalid_argument("derivative_op_multi: operator/system mismatch");
  const double tau_K = sys.tau_max();

  DerivativeOpMulti out;
  out.n = n;
  out.K = K;
  out.grid = op.grid;

  MatrixPoly C0 = multiply(MatrixPoly::constant(sys.A(0)), op.P);
  for (int i = 0; i < K; ++i) {
    MatrixPoly q_end = eval_var(op.Q[i], Var::s, -sys.tau(i + 1));
    C0 += multiply(MatrixPoly::constant(sys.A(i + 1)), q_end.transpose()) * tau_K;
    C0 += eval_var(op.S[i], Var::s, 0.0) * 0.5;
  }

  const int m = n * (K + 1);
  out.D1 = MatrixPoly(m, m);
  add_block(out.D1, 0, 0, C0 + C0.transpose());
  for (int i = 0; i < K; ++i) {
    MatrixPoly s_end = eval_var(op.S[i], Var::s, -sys.tau(i + 1));
    MatrixPoly ci = multiply(MatrixPoly::constant(sys.A(i + 1)), s_end) * tau_K;
    add_block(out.D1, 0, n * (i + 1), ci);
    add_block(out.D1, n * (i + 1), 0, ci.transpose());
    add_block(out.D1, n * (i + 1), n * (i + 1), -s_end);
  }

  for (int i = 0; i < K; ++i) {
    MatrixPoly bi = multiply(MatrixPoly::constant(sys.A(0)), op.Q[i]) +
                    differentiate(op.Q[i], Var::s);
    for (int j = 0; j < K; ++j)
      bi += multiply(MatrixPoly::constant(sys.A(j + 1)),
                     deriv_detail::fix_first(op.r(j, i), -sys.tau(j + 1)));
    MatrixPoly vi(m, n);
    add_block(vi, 0, 0, bi);
    out.B.push_back(std::move(vi));
    out.Sdot.push_back(differentiate(op.S[i], Var::s));
  }
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      out.G.push_back(differentiate(op.r(i, j), Var::s) +
                      differentiate(op.r(i, j), Var::theta));
  return out;
}

/// Time-derivative tuple of the scalar functional V(t) = <z_t, P z_t>_Z
/// along solutions, where z_t = (x(t), x(t+.)) is the trajectory segment
/// state. Integration by parts in each segment variable turns d/dt V into
/// another extended-state quadratic form, in the same container as
/// derivative_op_multi:
///
///   D1(1,1)    = A0^T P + P A0 + sum_i [Q_i(0) + Q_i(0)^T + S_i(0)]
///   D1(1,i+1)  = P A_i - Q_i(-tau_i)        D1(i+1,i+1) = -S_i(-tau_i)
///   V_i x-row  = A0^T Q_i - Qdot_i + (1/tau_K) sum_j R_ji(0, s)
///   V_i w_j-row= A_j^T Q_i - (1/tau_K) R_ji(-tau_j, s)
///   Sdot_i     = -dS_i/ds
///   G_ij       = -(ds R_ij + dtheta R_ij)
///
/// Unlike the composition form, this identity holds for an arbitrary
/// parameter tuple: V is differentiated as a scalar function of t, so no
/// boundary compatibility between P, Q_i, S_i and R_ij is required. A
/// coercive V whose derivative form is negative is a complete-quadratic
/// Lyapunov-Krasovskii functional in the classical sense. The resulting
/// search space is strictly larger than the structurally constrained one,
/// and on multi-delay problems it is decisively more expressive at equal
/// degree.
inline DerivativeOpMulti derivative_op_trajectory(const DelaySystem& sys,
                                                  const CompleteQuadOp& op) {
  const int n = sys.n();
  const int K = sys.K();
  if (op.n != n || op.K != K || !(op.grid == sys.grid()))
    throw std::invalid_argument(
        "derivative_op_trajectory: operator/system mismatch");
  const double tau_K = sys.tau_max();
  const int m = n * (K + 1);

  DerivativeOpMulti out;
  out.n = n;
  out.K = K;
  out.grid = op.grid;

  const MatrixPoly A0 = MatrixPoly::constant(sys.A(0));
  const MatrixPoly A0t = MatrixPoly::constant(sys.A(0).transpose());

  out.D1 = MatrixPoly(m, m);
  MatrixPoly c00 = multiply(A0t, op.P) + multiply(op.P, A0);
  for (int i = 0; i < K; ++i) {
    MatrixPoly q0 = eval_var(op.Q[i], Var::s, 0.0);
    c00 += q0 + q0.transpose() + eval_var(op.S[i], Var::s, 0.0);
  }
  add_block(out.D1, 0, 0, c00);
  for (int i = 0; i < K; ++i) {
    const MatrixPoly Ai = MatrixPoly::constant(sys.A(i + 1));
    MatrixPoly c0i =
        multiply(op.P, Ai) - eval_var(op.Q[i], Var::s, -sys.tau(i + 1));
    add_block(out.D1, 0, n * (i + 1), c0i);
    add_block(out.D1, n * (i + 1), 0, c0i.transpose());
    add_block(out.D1, n * (i + 1), n * (i + 1),
              -eval_var(op.S[i], Var::s, -sys.tau(i + 1)));
  }

  for (int i = 0; i < K; ++i) {
    MatrixPoly vi(m, n);
    MatrixPoly xrow = multiply(A0t, op.Q[i]) - differentiate(op.Q[i], Var::s);
    for (int j = 0; j < K; ++j)
      xrow += deriv_detail::fix_first(op.r(j, i), 0.0) * (1.0 / tau_K);
    add_block(vi, 0, 0, xrow);
    for (int j = 0; j < K; ++j) {
      const MatrixPoly Ajt = MatrixPoly::constant(sys.A(j + 1).transpose());
      MatrixPoly wrow =
          multiply(Ajt, op.Q[i]) -
          deriv_detail::fix_first(op.r(j, i), -sys.tau(j + 1)) * (1.0 / tau_K);
      add_block(vi, n * (j + 1), 0, wrow);
    }
    out.B.push_back(std::move(vi));
    out.Sdot.push_back(-differentiate(op.S[i], Var::s));
  }
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      out.G.push_back(-(differentiate(op.r(i, j), Var::s) +
                        differentiate(op.r(i, j), Var::theta)));
  return out;
}

}  // namespace lkstab
