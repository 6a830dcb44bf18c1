// SPDX-License-Identifier: MIT

/// \file lkstab/matrix_poly.hpp
/// \brief Matrix-valued polynomials in the variables s and theta with
/// affine-in-decision-variable coefficients.
///
/// A MatrixPoly is a map from exponent pairs (e_s, e_theta) to rows x cols
/// coefficient matrices of AffineScalar. The canonical monomial ordering is
/// graded lexicographic with s before theta (1, s, theta, s^2, s*theta,
/// theta^2, ...); that ordering defines every coefficient-vector layout used
/// downstream. Only the two variables s and theta exist by design: the delay
/// operators never need more.

#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lkstab/affine.hpp"

namespace lkstab {

/// Which polynomial variable an operation refers to.
enum class Var : int { s = 0, theta = 1 };

/// Exponent pair of one monomial s^es * theta^eth.
struct Mono {
  int es = 0;
  int eth = 0;
  int grade() const { return es + eth; }
  friend bool operator==(const Mono&, const Mono&) = default;
};

/// Graded-lex order, s before theta: lower total degree first, and within a
/// grade the monomial with the larger s exponent first.
struct MonoLess {
  bool operator()(const Mono& a, const Mono& b) const {
    if (a.grade() != b.grade()) return a.grade() < b.grade();
    return a.es > b.es;
  }
};

/// Dense coefficient matrix of affine scalars.
using AffMat = std::vector<AffineScalar>;  // row-major rows*cols

class MatrixPoly {
 public:
  MatrixPoly() = default;
  MatrixPoly(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0)
      throw std::invalid_argument("MatrixPoly: dimensions must be positive");
  }

  /// Constant polynomial equal to a numeric matrix.
  static MatrixPoly constant(const Eigen::MatrixXd& m) {
    MatrixPoly p(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    AffMat c(p.rows_ * p.cols_);
    for (int i = 0; i < p.rows_; ++i)
      for (int j = 0; j < p.cols_; ++j) c[i * p.cols_ + j] = m(i, j);
    p.set_coeff({0, 0}, std::move(c));
    return p;
  }

  /// Scalar identity: k * I_n as a degree-zero polynomial.
  static MatrixPoly identity(int n, double k = 1.0) {
    return constant(k * Eigen::MatrixXd::Identity(n, n));
  }

  static MatrixPoly zero(int rows, int cols) { return MatrixPoly(rows, cols); }

  /// The scalar monomial s^es * theta^eth with coefficient \p c.
  static MatrixPoly monomial(Mono m, const AffineScalar& c = 1.0) {
    MatrixPoly p(1, 1);
    p.add_to_coeff(m, 0, 0, c);
    return p;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool is_zero() const { return coeffs_.empty(); }

  /// Max total exponent over stored monomials; zero polynomial has degree 0.
  int degree() const {
    int d = 0;
    for (const auto& [m, c] : coeffs_) d = std::max(d, m.grade());
    return d;
  }
  /// Max exponent of one variable over stored monomials.
  int degree_in(Var v) const {
    int d = 0;
    for (const auto& [m, c] : coeffs_)
      d = std::max(d, v == Var::s ? m.es : m.eth);
    return d;
  }
  bool depends_on(Var v) const { return degree_in(v) > 0; }

  const std::map<Mono, AffMat, MonoLess>& coeffs() const { return coeffs_; }

  const AffineScalar& coeff(Mono m, int i, int j) const {
    static const AffineScalar kZero;
    auto it = coeffs_.find(m);
    if (it == coeffs_.end()) return kZero;
    return it->second[i * cols_ + j];
  }

  void add_to_coeff(Mono m, int i, int j, const AffineScalar& v) {
    if (v.is_zero()) return;
    auto& mat = coeffs_.try_emplace(m, AffMat(rows_ * cols_)).first->second;
    mat[i * cols_ + j] += v;
    if (mat[i * cols_ + j].is_zero() && all_zero(mat)) coeffs_.erase(m);
  }

  void set_coeff(Mono m, AffMat v) {
    if (static_cast<int>(v.size()) != rows_ * cols_)
      throw std::invalid_argument("MatrixPoly::set_coeff: size mismatch");
    if (all_zero(v))
      coeffs_.erase(m);
    else
      coeffs_[m] = std::move(v);
  }

  // ------------------------------------------------------------- arithmetic

  MatrixPoly& operator+=(const MatrixPoly& o) {
    require_same_shape(o);
    for (const auto& [m, mat] : o.coeffs_) {
      auto& mine = coeffs_.try_emplace(m, AffMat(rows_ * cols_)).first->second;
      for (std::size_t k = 0; k < mine.size(); ++k) mine[k] += mat[k];
      if (all_zero(mine)) coeffs_.erase(m);
    }
    return *this;
  }
  MatrixPoly& operator-=(const MatrixPoly& o) {
    require_same_shape(o);
    for (const auto& [m, mat] : o.coeffs_) {
      auto& mine = coeffs_.try_emplace(m, AffMat(rows_ * cols_)).first->second;
      for (std::size_t k = 0; k < mine.size(); ++k) mine[k] -= mat[k];
      if (all_zero(mine)) coeffs_.erase(m);
    }
    return *this;
  }
  friend MatrixPoly operator+(MatrixPoly a, const MatrixPoly& b) {
    a += b;
    return a;
  }
  friend MatrixPoly operator-(MatrixPoly a, const MatrixPoly& b) {
    a -= b;
    return a;
  }
  friend MatrixPoly operator-(MatrixPoly a) {
    for (auto& [m, mat] : a.coeffs_)
      for (auto& c : mat) c *= -1.0;
    return a;
  }
  friend MatrixPoly operator*(MatrixPoly a, double k) {
    if (k == 0.0) return MatrixPoly(a.rows_, a.cols_);
    for (auto& [m, mat] : a.coeffs_)
      for (auto& c : mat) c *= k;
    return a;
  }
  friend MatrixPoly operator*(double k, MatrixPoly a) { return std::move(a) * k; }

  MatrixPoly transpose() const {
    MatrixPoly r(cols_, rows_);
    for (const auto& [m, mat] : coeffs_) {
      AffMat t(rows_ * cols_);
      for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t[j * rows_ + i] = mat[i * cols_ + j];
      r.coeffs_[m] = std::move(t);
    }
    return r;
  }

 private:
  static bool all_zero(const AffMat& m) {
    for (const auto& c : m)
      if (!c.is_zero()) return false;
    return true;
  }
  void require_same_shape(const MatrixPoly& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("MatrixPoly: dimension mismatch");
  }

  int rows_ = 1, cols_ = 1;
  std::map<Mono, AffMat, MonoLess> coeffs_;
};

// --------------------------------------------------------------- operations

/// Coefficient-wise sum (spec op "add"); operator+ is the same thing.
inline MatrixPoly add(const MatrixPoly& a, const MatrixPoly& b) { return a + b; }

/// Polynomial matrix product. At most one operand may carry decision
/// variables; the AffineScalar product enforces this ("nonlinear product").
inline MatrixPoly multiply(const MatrixPoly& a, const MatrixPoly& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("multiply: inner dimensions mismatch");
  MatrixPoly r(a.rows(), b.cols());
  for (const auto& [ma, ca] : a.coeffs()) {
    for (const auto& [mb, cb] : b.coeffs()) {
      Mono m{ma.es + mb.es, ma.eth + mb.eth};
      for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < b.cols(); ++j) {
          AffineScalar acc;
          for (int k = 0; k < a.cols(); ++k)
            acc += ca[i * a.cols() + k] * cb[k * b.cols() + j];
          r.add_to_coeff(m, i, j, acc);
        }
      }
    }
  }
  return r;
}

/// Product of a 1x1 polynomial with a matrix polynomial (scalar weight).
/// At most one operand may carry decision variables, as in multiply().
inline MatrixPoly scalar_multiply(const MatrixPoly& g, const MatrixPoly& p) {
  if (g.rows() != 1 || g.cols() != 1)
    throw std::invalid_argument("scalar_multiply: weight must be 1x1");
  MatrixPoly r(p.rows(), p.cols());
  for (const auto& [mg, cg] : g.coeffs())
    for (const auto& [mp, cp] : p.coeffs()) {
      Mono m{mg.es + mp.es, mg.eth + mp.eth};
      for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j)
          r.add_to_coeff(m, i, j, cg[0] * cp[i * p.cols() + j]);
    }
  return r;
}

/// Formal partial derivative with respect to \p v.
inline MatrixPoly differentiate(const MatrixPoly& p, Var v) {
  MatrixPoly r(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    int e = (v == Var::s) ? m.es : m.eth;
    if (e == 0) continue;
    Mono dm = (v == Var::s) ? Mono{m.es - 1, m.eth} : Mono{m.es, m.eth - 1};
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j)
        r.add_to_coeff(dm, i, j, mat[i * p.cols() + j] * double(e));
  }
  return r;
}

/// Exact definite integral over \p v from \p a to \p b; the result no longer
/// depends on \p v. Decision-variable coefficients pass through linearly.
inline MatrixPoly integrate_definite(const MatrixPoly& p, Var v, double a,
                                     double b) {
  MatrixPoly r(p.rows(), p.cols());
  // Powers of the endpoints, computed once up to the maximal exponent + 1.
  int maxe = p.degree_in(v) + 1;
  std::vector<double> pa(maxe + 1, 1.0), pb(maxe + 1, 1.0);
  for (int k = 1; k <= maxe; ++k) {
    pa[k] = pa[k - 1] * a;
    pb[k] = pb[k - 1] * b;
  }
  for (const auto& [m, mat] : p.coeffs()) {
    int e = (v == Var::s) ? m.es : m.eth;
    double w = (pb[e + 1] - pa[e + 1]) / double(e + 1);
    Mono rm = (v == Var::s) ? Mono{0, m.eth} : Mono{m.es, 0};
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j)
        r.add_to_coeff(rm, i, j, mat[i * p.cols() + j] * w);
  }
  return r;
}

/// Substitution v <- alpha * v + beta, expanded exactly (binomial theorem).
inline MatrixPoly affine_substitute(const MatrixPoly& p, Var v, double alpha,
                                    double beta) {
  if (alpha == 0.0)
    throw std::invalid_argument("affine_substitute: alpha = 0 rejected");
  int maxe = p.degree_in(v);
  // binom[e][k] * alpha^k * beta^(e-k) tables
  std::vector<std::vector<double>> w(maxe + 1);
  for (int e = 0; e <= maxe; ++e) {
    w[e].resize(e + 1);
    double binom = 1.0;
    for (int k = 0; k <= e; ++k) {
      double ak = 1.0, bk = 1.0;
      for (int t = 0; t < k; ++t) ak *= alpha;
      for (int t = 0; t < e - k; ++t) bk *= beta;
      w[e][k] = binom * ak * bk;
      binom = binom * double(e - k) / double(k + 1);
    }
  }
  MatrixPoly r(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    int e = (v == Var::s) ? m.es : m.eth;
    for (int k = 0; k <= e; ++k) {
      if (w[e][k] == 0.0) continue;
      Mono rm = (v == Var::s) ? Mono{k, m.eth} : Mono{m.es, k};
      for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j)
          r.add_to_coeff(rm, i, j, mat[i * p.cols() + j] * w[e][k]);
    }
  }
  return r;
}

/// Substitution v <- value (a number); the result no longer depends on v.
inline MatrixPoly eval_var(const MatrixPoly& p, Var v, double value) {
  int maxe = p.degree_in(v);
  std::vector<double> pw(maxe + 1, 1.0);
  for (int k = 1; k <= maxe; ++k) pw[k] = pw[k - 1] * value;
  MatrixPoly r(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    int e = (v == Var::s) ? m.es : m.eth;
    Mono rm = (v == Var::s) ? Mono{0, m.eth} : Mono{m.es, 0};
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j)
        r.add_to_coeff(rm, i, j, mat[i * p.cols() + j] * pw[e]);
  }
  return r;
}

/// Renames \p from to \p to. The polynomial must not already depend on \p to.
inline MatrixPoly rename_var(const MatrixPoly& p, Var from, Var to) {
  if (from == to) return p;
  if (p.depends_on(to))
    throw std::invalid_argument("rename_var: target variable already present");
  MatrixPoly r(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    int e = (from == Var::s) ? m.es : m.eth;
    Mono rm = (to == Var::s) ? Mono{e, 0} : Mono{0, e};
    AffMat copy = mat;
    r.set_coeff(rm, std::move(copy));
  }
  return r;
}

/// Swaps the roles of s and theta: q(s, theta) = p(theta, s).
inline MatrixPoly swap_vars(const MatrixPoly& p) {
  MatrixPoly r(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    AffMat copy = mat;
    r.set_coeff({m.eth, m.es}, std::move(copy));
  }
  return r;
}

/// Numeric evaluation at a point with a decision-variable assignment
/// callback (id -> value).
template <class ValueFn>
Eigen::MatrixXd evaluate(const MatrixPoly& p, double s, double theta,
                         ValueFn&& value) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  for (const auto& [m, mat] : p.coeffs()) {
    double mono = 1.0;
    for (int k = 0; k < m.es; ++k) mono *= s;
    for (int k = 0; k < m.eth; ++k) mono *= theta;
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j)
        out(i, j) += mono * mat[i * p.cols() + j].evaluate(value);
  }
  return out;
}

/// Numeric evaluation of a polynomial with constant coefficients.
inline Eigen::MatrixXd evaluate(const MatrixPoly& p, double s,
                                double theta = 0.0) {
  return evaluate(p, s, theta, [](int id) -> double {
    throw std::invalid_argument("evaluate: missing assignment for variable " +
                                std::to_string(id));
    return 0.0;  // unreachable
  });
}

/// Adds \p src into \p dst with its (0,0) entry landing at (row0, col0).
inline void add_block(MatrixPoly& dst, int row0, int col0,
                      const MatrixPoly& src) {
  if (row0 < 0 || col0 < 0 || row0 + src.rows() > dst.rows() ||
      col0 + src.cols() > dst.cols())
    throw std::invalid_argument("add_block: block out of range");
  for (const auto& [m, mat] : src.coeffs())
    for (int i = 0; i < src.rows(); ++i)
      for (int j = 0; j < src.cols(); ++j)
        dst.add_to_coeff(m, row0 + i, col0 + j, mat[i * src.cols() + j]);
}

/// One linear equation over decision variables per (entry, monomial) present
/// in either operand; all equations hold iff a == b identically. Satisfied
/// constant equations are pruned. A row with empty terms and nonzero rhs
/// encodes a constant contradiction.
inline std::vector<LinearEq> coefficient_equalities(const MatrixPoly& a,
                                                    const MatrixPoly& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("coefficient_equalities: dimension mismatch");
  std::vector<LinearEq> rows;
  MatrixPoly diff = a - b;
  for (const auto& [m, mat] : diff.coeffs()) {
    for (const auto& c : mat) {
      LinearEq eq;
      if (equality_from_affine(c, eq)) rows.push_back(std::move(eq));
    }
  }
  return rows;
}

}  // namespace lkstab
