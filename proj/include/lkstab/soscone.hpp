// SPDX-License-Identifier: MIT

/// \file lkstab/soscone.hpp
/// \brief Gram-matrix parameterization of the cone of multiplier/kernel
/// pairs {M, N} whose integral operator is positive semidefinite on
/// L2^n[-tau_K, 0].
///
/// A member is a sum over two weight families (g = 1 and the interval
/// quadratic g_i(s) = -(s + tau_i)(s + tau_{i-1})) of operators of the form
///
///   <x, P x> = sum_l integral_{I_l} g_l(w) v_l(w)^T Q v_l(w) dw,
///   v_l(w) = [ Y1(w) x(w) in slot l; int_{I_i} Y2(w,theta) x(theta) dtheta
///              in slot (l,i) ],
///
/// with Y1 = Y_d kron I_n (univariate basis), Y2 = Z_d kron I_n (bivariate
/// basis) and Q constrained PSD, which is nonnegative for any x whenever
/// every g_l is nonnegative on its interval. Expanding the square yields
/// piecewise-polynomial M (from the Q11 diagonal blocks) and N (the Q12
/// cross blocks, their pairing transposes, and the Q22 term with the
/// w-integral carried out exactly via weighted moments).
///
/// Basis rows are stored explicitly so callers can drop rows whose diagonal
/// output monomial the matched target cannot carry: such rows are forced to
/// zero by the coefficient-matching equalities anyway (a positive
/// semidefinite matrix with a zero diagonal entry has a zero row), and
/// keeping them would pin every matched program to the boundary of the PSD
/// cone. Dropping them restores a strictly feasible interior without
/// shrinking the set of expressible pairs.

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "lkstab/grid.hpp"
#include "lkstab/matrix_poly.hpp"
#include "lkstab/mult_kernel_op.hpp"
#include "lkstab/sdp_problem.hpp"

namespace lkstab {

/// [1, s, s^2, ..., s^d].
inline std::vector<Mono> monomial_basis(int d) {
  std::vector<Mono> out;
  for (int e = 0; e <= d; ++e) out.push_back({e, 0});
  return out;
}

/// All monomials in (s, theta) of total degree <= d, graded-lex
/// (grade ascending, s-exponent descending within a grade):
/// d = 1 gives [1, s, theta].
inline std::vector<Mono> bivariate_basis(int d) {
  std::vector<Mono> out;
  for (int grade = 0; grade <= d; ++grade)
    for (int es = grade; es >= 0; --es) out.push_back({es, grade - es});
  return out;
}

/// Dimensions of the full (uncapped) Gram parameterization at degree d,
/// block dimension n, K grid intervals.
struct BasisDescriptor {
  int d = 0;
  int n = 1;
  int K = 1;

  int y1() const { return d + 1; }                 ///< |Y_d|.
  int q() const { return (d + 1) * (d + 2) / 2; }  ///< |Z_d|.
  /// Rows of Q11: one Y1 image per interval.
  int q11_rows() const { return n * y1() * K; }
  /// Rows of Q22: one Y2 integral image per (interval, interval) pair.
  int q22_rows() const { return n * q() * K * K; }
};

/// Per-coordinate-part degree caps on the Gram basis rows. The first
/// `finite` coordinates of the operator dimension form the finite part
/// (matched against high-degree spacing functions); the rest is the segment
/// part (matched against the operator parameters, whose degree is lower).
/// A cap of -1 means the full basis degree d; a cap below 0 after
/// defaulting removes the rows entirely.
struct ConeCaps {
  int finite = 0;
  int y1_finite = -1;   ///< Max Y1 power on finite coordinates.
  int y1_segment = -1;  ///< Max Y1 power on segment coordinates.
  int y2_finite = -1;   ///< Max theta-exponent of Y2 rows, finite part.
  int y2_segment = -1;  ///< Max theta-exponent of Y2 rows, segment part.

  int y1_cap(int coord) const {
    return coord < finite ? y1_finite : y1_segment;
  }
  int y2_cap(int coord) const {
    return coord < finite ? y2_finite : y2_segment;
  }
  static int defaulted(int cap, int d) { return cap == -1 ? d : cap; }
};

/// A multiplier-image basis row: s^power on one coordinate, one interval.
struct Y1Row {
  int interval = 0;
  int power = 0;
  int coord = 0;
};

/// A kernel-image basis row: the integral over inner interval of
/// basis(omega, theta) against one coordinate, seen from outer interval.
struct Y2Row {
  int outer = 0;
  int inner = 0;
  Mono basis;
  int coord = 0;
};

/// One PSD-constrained Gram block over an explicit basis-row list. Row
/// order in the block: all Y1 rows, then all Y2 rows.
struct GramCertificate {
  int block = -1;
  int d = 0;
  int dim = 0;
  int K = 0;
  std::vector<Y1Row> y1_rows;
  std::vector<Y2Row> y2_rows;

  int rows() const {
    return static_cast<int>(y1_rows.size() + y2_rows.size());
  }
};

/// Allocates one PSD Gram block with the basis rows admitted by \p caps.
/// \p include_kernel false drops all Y2 rows (the reduced form).
inline GramCertificate make_gram_certificate(SdpProblem& problem, int d,
                                             int dim, int K,
                                             const ConeCaps& caps,
                                             bool include_kernel) {
  GramCertificate cert;
  cert.d = d;
  cert.dim = dim;
  cert.K = K;
  for (int l = 0; l < K; ++l)
    for (int k = 0; k <= d; ++k)
      for (int r = 0; r < dim; ++r)
        if (k <= ConeCaps::defaulted(caps.y1_cap(r), d))
          cert.y1_rows.push_back(Y1Row{l, k, r});
  if (include_kernel) {
    const std::vector<Mono> y2 = bivariate_basis(d);
    for (int lo = 0; lo < K; ++lo)
      for (int li = 0; li < K; ++li)
        for (const Mono& u : y2)
          for (int r = 0; r < dim; ++r)
            if (u.eth <= ConeCaps::defaulted(caps.y2_cap(r), d))
              cert.y2_rows.push_back(Y2Row{lo, li, u, r});
  }
  cert.block = problem.add_psd_block(cert.rows());
  return cert;
}

/// Expands one weighted Gram certificate into its multiplier/kernel pair.
/// \p weights holds one scalar polynomial (1x1 MatrixPoly in s, constant
/// coefficients) per interval, nonnegative there.
inline MultKernelOp expand_gram(SdpProblem& problem,
                                const std::vector<MatrixPoly>& weights,
                                const GramCertificate& cert,
                                const IntervalGrid& grid) {
  if (grid.pieces() != cert.K ||
      static_cast<int>(weights.size()) != cert.K)
    throw std::invalid_argument("expand_gram: grid/weight count mismatch");
  const int n = cert.dim;
  const int K = cert.K;
  const int n_y1 = static_cast<int>(cert.y1_rows.size());

  MultKernelOp out;
  out.m = 0;
  out.n = n;
  out.M = PiecewisePoly1D(grid, n, n);
  out.N = PiecewisePoly2D(grid, n, n);

  // Multiplier: the Q11 pairs sharing an interval, M_l += g_l Y1^T Q Y1.
  {
    std::vector<MatrixPoly> acc(static_cast<std::size_t>(K), MatrixPoly(n, n));
    for (int a = 0; a < n_y1; ++a) {
      const Y1Row& ra = cert.y1_rows[static_cast<std::size_t>(a)];
      for (int b = 0; b < n_y1; ++b) {
        const Y1Row& rb = cert.y1_rows[static_cast<std::size_t>(b)];
        if (rb.interval != ra.interval) continue;  // never referenced
        acc[static_cast<std::size_t>(ra.interval)].add_to_coeff(
            {ra.power + rb.power, 0}, ra.coord, rb.coord,
            problem.psd_entry(cert.block, a, b));
      }
    }
    for (int l = 0; l < K; ++l)
      out.M.piece(l) += scalar_multiply(weights[l], acc[l]);
  }
  if (cert.y2_rows.empty()) return out;

  // Kernel cross terms: a Q12 entry pairing Y1 row (l, k, r) with Y2 row
  // (l, j, u, c) lands in N piece (l, j) as g_l(s) s^(k+u_s) theta^(u_th)
  // at (r, c), and its pairing mirror in piece (j, l) at (c, r) with the
  // roles of s and theta exchanged. Both use the same Gram variable, so
  // N_ij(s,th) = N_ji(th,s)^T holds exactly by construction.
  {
    std::vector<MatrixPoly> acc(static_cast<std::size_t>(K) * K,
                                MatrixPoly(n, n));
    std::vector<MatrixPoly> acc_mirror(static_cast<std::size_t>(K) * K,
                                       MatrixPoly(n, n));
    for (int a = 0; a < n_y1; ++a) {
      const Y1Row& ra = cert.y1_rows[static_cast<std::size_t>(a)];
      for (std::size_t bi = 0; bi < cert.y2_rows.size(); ++bi) {
        const Y2Row& rb = cert.y2_rows[bi];
        if (rb.outer != ra.interval) continue;  // never referenced
        AffineScalar e = problem.psd_entry(cert.block, a,
                                           n_y1 + static_cast<int>(bi));
        acc[static_cast<std::size_t>(ra.interval) * K + rb.inner].add_to_coeff(
            {ra.power + rb.basis.es, rb.basis.eth}, ra.coord, rb.coord, e);
        acc_mirror[static_cast<std::size_t>(rb.inner) * K + ra.interval]
            .add_to_coeff({rb.basis.eth, ra.power + rb.basis.es}, rb.coord,
                          ra.coord, e);
      }
    }
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        out.N.piece(i, j) +=
            scalar_multiply(weights[i], acc[static_cast<std::size_t>(i) * K + j]);
        MatrixPoly w_theta = rename_var(weights[j], Var::s, Var::theta);
        out.N.piece(i, j) += scalar_multiply(
            w_theta, acc_mirror[static_cast<std::size_t>(i) * K + j]);
      }
  }

  // Kernel Q22 term: rows sharing an outer interval combine through the
  // weighted omega-moments of that interval,
  // N_(inner_a, inner_b) += moment(es_a + es_b) theta-monomials.
  {
    const int max_pow = 2 * cert.d;
    std::vector<std::vector<double>> moment(static_cast<std::size_t>(K));
    for (int l = 0; l < K; ++l) {
      moment[static_cast<std::size_t>(l)].assign(
          static_cast<std::size_t>(max_pow) + 1, 0.0);
      for (int p = 0; p <= max_pow; ++p) {
        MatrixPoly wp =
            scalar_multiply(weights[l], MatrixPoly::monomial({p, 0}));
        moment[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)] =
            evaluate(integrate_definite(wp, Var::s, grid.left(l),
                                        grid.right(l)),
                     0.0)(0, 0);
      }
    }
    for (std::size_t ai = 0; ai < cert.y2_rows.size(); ++ai) {
      const Y2Row& ra = cert.y2_rows[ai];
      for (std::size_t bi = 0; bi < cert.y2_rows.size(); ++bi) {
        const Y2Row& rb = cert.y2_rows[bi];
        if (rb.outer != ra.outer) continue;  // never referenced
        const double mom =
            moment[static_cast<std::size_t>(ra.outer)]
                  [static_cast<std::size_t>(ra.basis.es + rb.basis.es)];
        if (mom == 0.0) continue;
        AffineScalar e =
            problem.psd_entry(cert.block, n_y1 + static_cast<int>(ai),
                              n_y1 + static_cast<int>(bi));
        e *= mom;
        out.N.piece(ra.inner, rb.inner)
            .add_to_coeff({ra.basis.eth, rb.basis.eth}, ra.coord, rb.coord, e);
      }
    }
  }
  return out;
}

/// The two canonical weight families.
inline std::vector<MatrixPoly> unit_weights(const IntervalGrid& grid) {
  return std::vector<MatrixPoly>(static_cast<std::size_t>(grid.pieces()),
                                 MatrixPoly::identity(1));
}

/// g_l(s) = -(s - left_l)(s - right_l), nonnegative exactly on piece l.
inline std::vector<MatrixPoly> interval_weights(const IntervalGrid& grid) {
  std::vector<MatrixPoly> out;
  for (int l = 0; l < grid.pieces(); ++l) {
    const double lo = grid.left(l), hi = grid.right(l);
    MatrixPoly g(1, 1);
    g.add_to_coeff({2, 0}, 0, 0, -1.0);
    g.add_to_coeff({1, 0}, 0, 0, lo + hi);
    g.add_to_coeff({0, 0}, 0, 0, -lo * hi);
    out.push_back(std::move(g));
  }
  return out;
}

struct XiOptions {
  /// Drop Q12/Q22 of the interval-weight family (variable reduction; the
  /// cone loses nothing needed in practice and shrinks considerably).
  bool reduced_second_block = true;
  /// Basis-row caps per family (see ConeCaps); defaults keep the full basis.
  ConeCaps unit_caps;
  ConeCaps interval_caps;
};

/// A cone member: the summed pair plus its two Gram certificates.
struct XiMember {
  MultKernelOp op;
  GramCertificate unit_family;
  GramCertificate interval_family;
};

/// Allocates a fresh member of the degree-d positive cone over
/// L2^dim[-tau_K, 0] on the given grid: two PSD Gram blocks (one per weight
/// family), expanded and summed.
inline XiMember make_xi_member(SdpProblem& problem, int d, int dim,
                               const IntervalGrid& grid,
                               const XiOptions& options = {}) {
  if (d < 0 || dim <= 0)
    throw std::invalid_argument("make_xi_member: bad cone shape");
  XiMember member;
  member.unit_family = make_gram_certificate(problem, d, dim, grid.pieces(),
                                             options.unit_caps, true);
  member.interval_family =
      make_gram_certificate(problem, d, dim, grid.pieces(),
                            options.interval_caps,
                            !options.reduced_second_block);
  member.op =
      expand_gram(problem, unit_weights(grid), member.unit_family, grid);
  MultKernelOp second = expand_gram(problem, interval_weights(grid),
                                    member.interval_family, grid);
  member.op.M += second.M;
  member.op.N += second.N;
  return member;
}

}  // namespace lkstab
