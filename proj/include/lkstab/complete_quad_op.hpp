// SPDX-License-Identifier: MIT

/// \file lkstab/complete_quad_op.hpp
/// \brief Complete-quadratic operators on the delay state space
/// Z_{n,K} = R^n x L2^n[-tau_1,0] x ... x L2^n[-tau_K,0].
///
/// The operator is parameterized by a constant matrix P, univariate matrix
/// polynomials Q_i, S_i on [-tau_i, 0], and bivariate kernels R_ij on
/// [-tau_i,0] x [-tau_j,0]:
///
///   (P z)_0    = P x + sum_i integral Q_i(s) phi_i(s) ds
///   (P z)_i(s) = tau_K Q_i(s)^T x + tau_K S_i(s) phi_i(s)
///                + sum_j integral R_ij(s,theta) phi_j(theta) dtheta.
///
/// Self-adjointness and preservation of the subspace {phi_i(0) = x} hold
/// exactly when the structural relations hold: S_i symmetric, R_ij(s,theta)
/// = R_ji(theta,s)^T, P = tau_K Q_i(0)^T + tau_K S_i(0) for every i, and
/// Q_j(s) = R_ij(0,s) for every pair. make_free_operator encodes the first
/// two by sharing decision variables and the last two either by substitution
/// (single delay) or as equality rows (multiple delays).

#pragma once

#include <map>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lkstab/delay_system.hpp"
#include "lkstab/grid.hpp"
#include "lkstab/matrix_poly.hpp"
#include "lkstab/sdp_problem.hpp"

namespace lkstab {

/// Monomial support of a freshly allocated operator family.
struct OperatorSupport {
  int s_degree = 1;  ///< Degree of each S_i in s.
  int q_degree = 1;  ///< Degree of each Q_i in s.
  /// Monomial support of each R_ij; must be closed under (a,b) -> (b,a)
  /// so the pairing R_ij(s,theta) = R_ji(theta,s)^T can share variables.
  std::vector<Mono> r_support;

  /// All monomials with both exponents at most d.
  static OperatorSupport tensor(int d) {
    OperatorSupport sup;
    sup.s_degree = d;
    sup.q_degree = d;
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d; ++b) sup.r_support.push_back({a, b});
    return sup;
  }

  /// Support matched to what a degree-d Gram expansion produces: S and Q up
  /// to 2d+2 (quadratic interval weight), R on the L-shaped set
  /// {a <= 2d, b <= d} union {a <= d, b <= 2d}.
  static OperatorSupport cone_induced(int d) {
    OperatorSupport sup;
    sup.s_degree = 2 * d + 2;
    sup.q_degree = 2 * d + 2;
    for (int a = 0; a <= 2 * d; ++a)
      for (int b = 0; b <= 2 * d; ++b)
        if (a <= d || b <= d) sup.r_support.push_back({a, b});
    return sup;
  }
};

/// The operator parameter tuple (P, Q_i, S_i, R_ij) with affine entries,
/// plus the structural equality rows that are not encoded by variable
/// sharing. Callers feeding an SdpProblem must add those rows themselves.
struct CompleteQuadOp {
  int n = 0;
  int K = 0;
  IntervalGrid grid;          ///< Built from the delays tau_1..tau_K.
  MatrixPoly P;               ///< n x n, degree 0.
  std::vector<MatrixPoly> Q;  ///< K entries, n x n, univariate in s.
  std::vector<MatrixPoly> S;  ///< K entries, n x n, univariate in s.
  std::vector<MatrixPoly> R;  ///< K*K entries row-major, n x n in (s,theta).
  std::vector<LinearEq> structural_constraints;

  const MatrixPoly& r(int i, int j) const { return R.at(i * K + j); }
  MatrixPoly& r(int i, int j) { return R.at(i * K + j); }
  double tau_max() const { return grid.tau_max(); }
};

namespace quad_op_detail {

/// R_ji(s,theta) := R_ij(theta,s)^T, realized on coefficients:
/// coeff of (a,b) at entry (r,c) in the result = coeff of (b,a) at (c,r).
inline MatrixPoly pair_transpose(const MatrixPoly& rij) {
  return swap_vars(rij).transpose();
}

}  // namespace quad_op_detail

/// Allocates a fresh complete-quadratic operator family on \p problem.
///
/// Symmetry of S_i and the pairing R_ij(s,theta) = R_ji(theta,s)^T are
/// encoded by sharing decision variables. With K = 1, P and Q are eliminated
/// by substitution (P = tau (R(0,0) + S(0)), Q(s) = R(0,s)) and
/// structural_constraints is empty; with K >= 2 they are fresh variables tied
/// by the remaining structural equality rows.
inline CompleteQuadOp make_free_operator(SdpProblem& problem, int n, int K,
                                         const std::vector<double>& taus,
                                         const OperatorSupport& support) {
  if (n <= 0 || K <= 0)
    throw std::invalid_argument("make_free_operator: n and K must be positive");
  if (static_cast<int>(taus.size()) != K)
    throw std::invalid_argument("make_free_operator: delay count mismatch");
  for (const Mono& m : support.r_support) {
    bool has_swap = false;
    for (const Mono& w : support.r_support)
      if (w.es == m.eth && w.eth == m.es) {
        has_swap = true;
        break;
      }
    if (!has_swap)
      throw std::invalid_argument(
          "make_free_operator: R support not closed under exponent swap");
  }

  CompleteQuadOp op;
  op.n = n;
  op.K = K;
  op.grid = IntervalGrid(taus);
  const double tau_K = taus.back();

  // S_i: symmetric n x n, one variable per (monomial, upper-triangle entry).
  for (int i = 0; i < K; ++i) {
    MatrixPoly s_poly(n, n);
    for (int e = 0; e <= support.s_degree; ++e)
      for (int r = 0; r < n; ++r)
        for (int c = r; c < n; ++c) {
          AffineScalar v = problem.new_free_var();
          s_poly.add_to_coeff({e, 0}, r, c, v);
          if (c != r) s_poly.add_to_coeff({e, 0}, c, r, v);
        }
    op.S.push_back(std::move(s_poly));
  }

  // R_ij for i <= j; R_ji is the shared-variable pair transpose. On the
  // diagonal (i = j) the orbit {((a,b),r,c), ((b,a),c,r)} gets one variable.
  op.R.assign(static_cast<std::size_t>(K) * K, MatrixPoly(n, n));
  for (int i = 0; i < K; ++i)
    for (int j = i; j < K; ++j) {
      MatrixPoly rij(n, n);
      if (i == j) {
        std::map<std::tuple<int, int, int, int>, AffineScalar> rep;
        for (const Mono& m : support.r_support)
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
              std::tuple<int, int, int, int> key{m.es, m.eth, r, c};
              std::tuple<int, int, int, int> partner{m.eth, m.es, c, r};
              auto it = rep.find(partner);
              AffineScalar v =
                  (it != rep.end()) ? it->second : problem.new_free_var();
              rep.emplace(key, v);
              rij.add_to_coeff(m, r, c, v);
            }
      } else {
        for (const Mono& m : support.r_support)
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
              rij.add_to_coeff(m, r, c, problem.new_free_var());
      }
      op.r(i, j) = rij;
      if (j != i) op.r(j, i) = quad_op_detail::pair_transpose(rij);
    }

  if (K == 1) {
    // Single delay: substitute the two eliminated parameters (the paper's
    // Eq. (5) form). No structural rows remain.
    const MatrixPoly& r00 = op.r(0, 0);
    MatrixPoly q = rename_var(eval_var(r00, Var::s, 0.0), Var::theta, Var::s);
    op.Q.push_back(std::move(q));
    MatrixPoly r_origin = eval_var(eval_var(r00, Var::s, 0.0), Var::theta, 0.0);
    MatrixPoly s_origin = eval_var(op.S[0], Var::s, 0.0);
    op.P = tau_K * (r_origin + s_origin);
    return op;
  }

  // Multiple delays: fresh P and Q_i plus the Lemma-2 equality rows.
  for (int i = 0; i < K; ++i) {
    MatrixPoly q_poly(n, n);
    for (int e = 0; e <= support.q_degree; ++e)
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          q_poly.add_to_coeff({e, 0}, r, c, problem.new_free_var());
    op.Q.push_back(std::move(q_poly));
  }
  MatrixPoly p_poly(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      p_poly.add_to_coeff({0, 0}, r, c, problem.new_free_var());
  op.P = std::move(p_poly);

  for (int i = 0; i < K; ++i) {
    MatrixPoly rhs = tau_K * (eval_var(op.Q[i], Var::s, 0.0).transpose() +
                              eval_var(op.S[i], Var::s, 0.0));
    for (auto& row : coefficient_equalities(op.P, rhs))
      op.structural_constraints.push_back(std::move(row));
  }
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      MatrixPoly slice =
          rename_var(eval_var(op.r(i, j), Var::s, 0.0), Var::theta, Var::s);
      for (auto& row : coefficient_equalities(op.Q[j], slice))
        op.structural_constraints.push_back(std::move(row));
    }
  return op;
}

inline CompleteQuadOp make_free_operator(SdpProblem& problem, int n, int K,
                                         const std::vector<double>& taus,
                                         int degree) {
  return make_free_operator(problem, n, K, taus, OperatorSupport::tensor(degree));
}

/// Replaces every affine coefficient by its numeric value under
/// \p assignment, yielding a constant-coefficient polynomial.
inline MatrixPoly with_values(const MatrixPoly& p,
                              const std::vector<double>& assignment) {
  auto value = [&](int id) { return assignment.at(static_cast<std::size_t>(id)); };
  MatrixPoly out(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    AffMat cm(mat.size());
    for (std::size_t k = 0; k < mat.size(); ++k)
      cm[k] = AffineScalar(mat[k].evaluate(value));
    out.set_coeff(m, std::move(cm));
  }
  return out;
}

/// Numeric instantiation of a whole operator family.
inline CompleteQuadOp with_values(const CompleteQuadOp& op,
                                  const std::vector<double>& assignment) {
  CompleteQuadOp out;
  out.n = op.n;
  out.K = op.K;
  out.grid = op.grid;
  out.P = with_values(op.P, assignment);
  for (const auto& q : op.Q) out.Q.push_back(with_values(q, assignment));
  for (const auto& s : op.S) out.S.push_back(with_values(s, assignment));
  for (const auto& r : op.R) out.R.push_back(with_values(r, assignment));
  return out;
}

/// One point of Z_{n,K}: a vector x and one polynomial segment phi_i per
/// delay interval [-tau_i, 0], each an n x 1 constant-coefficient polynomial.
struct ZState {
  Eigen::VectorXd x;
  std::vector<MatrixPoly> phi;
};

/// <(y,psi), (x,phi)>_Z = tau_K y^T x + sum_i integral psi_i^T phi_i,
/// computed exactly (polynomial segments integrate in closed form).
inline double z_inner_product(const ZState& a, const ZState& b, double tau_K,
                              const std::vector<double>& taus) {
  double acc = tau_K * a.x.dot(b.x);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    MatrixPoly prod = multiply(a.phi[i].transpose(), b.phi[i]);
    acc += evaluate(integrate_definite(prod, Var::s, -taus[i], 0.0), 0.0)(0, 0);
  }
  return acc;
}

/// Applies a constant-coefficient operator family to a state, exactly.
inline ZState apply_quad_op(const CompleteQuadOp& op, const ZState& z) {
  const double tau_K = op.tau_max();
  ZState out;
  Eigen::VectorXd y = evaluate(op.P, 0.0) * z.x;
  for (int i = 0; i < op.K; ++i) {
    MatrixPoly integrand = multiply(op.Q[i], z.phi[i]);
    y += evaluate(
        integrate_definite(integrand, Var::s, -op.grid.tau(i + 1), 0.0), 0.0);
  }
  out.x = y;
  for (int i = 0; i < op.K; ++i) {
    MatrixPoly xs = MatrixPoly::constant(z.x);
    MatrixPoly psi = tau_K * multiply(op.Q[i].transpose(), xs) +
                     tau_K * multiply(op.S[i], z.phi[i]);
    for (int j = 0; j < op.K; ++j) {
      MatrixPoly phij = rename_var(z.phi[j], Var::s, Var::theta);
      psi += integrate_definite(multiply(op.r(i, j), phij), Var::theta,
                                -op.grid.tau(j + 1), 0.0);
    }
    out.phi.push_back(std::move(psi));
  }
  return out;
}

}  // namespace lkstab
