// SPDX-License-Identifier: MIT

/// \file lkstab/affine.hpp
/// \brief Scalar expressions that are affine in semidefinite-program decision
/// variables, plus the linear equality rows they generate.
///
/// Every polynomial coefficient in this library is an AffineScalar: a real
/// constant plus a sparse linear combination of decision variables identified
/// by integer ids. Keeping coefficients affine is what lets the operator
/// assembly stay symbolic until the last moment, when coefficient matching
/// turns polynomial identities into exact linear equality rows -- no
/// quadrature error enters the constraint set.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lkstab {

/// One linear equality row  sum_k coeff_k * x_{id_k} = rhs  over scalar
/// decision variables. Terms are sorted by id and ids are unique.
struct LinearEq {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

/// A real constant plus a sparse affine form over decision variables.
///
/// Invariants: term ids are unique and sorted ascending; no stored term has
/// coefficient exactly 0.0 (exact-zero pruning only -- epsilon pruning would
/// silently corrupt constraint rows).
class AffineScalar {
 public:
  AffineScalar() = default;
  /*implicit*/ AffineScalar(double c) : constant_(c) {}

  /// A fresh reference to decision variable \p id with coefficient \p coeff.
  static AffineScalar variable(int id, double coeff = 1.0) {
    AffineScalar a;
    if (coeff != 0.0) a.terms_.emplace_back(id, coeff);
    return a;
  }

  double constant() const { return constant_; }
  std::span<const std::pair<int, double>> terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  bool is_zero() const { return terms_.empty() && constant_ == 0.0; }

  AffineScalar& operator+=(const AffineScalar& o) {
    constant_ += o.constant_;
    if (!o.terms_.empty()) merge(o.terms_, 1.0);
    return *this;
  }
  AffineScalar& operator-=(const AffineScalar& o) {
    constant_ -= o.constant_;
    if (!o.terms_.empty()) merge(o.terms_, -1.0);
    return *this;
  }
  AffineScalar& operator*=(double k) {
    if (k == 0.0) {
      constant_ = 0.0;
      terms_.clear();
      return *this;
    }
    constant_ *= k;
    for (auto& [id, c] : terms_) c *= k;
    return *this;
  }

  friend AffineScalar operator+(AffineScalar a, const AffineScalar& b) {
    a += b;
    return a;
  }
  friend AffineScalar operator-(AffineScalar a, const AffineScalar& b) {
    a -= b;
    return a;
  }
  friend AffineScalar operator-(AffineScalar a) {
    a *= -1.0;
    return a;
  }
  friend AffineScalar operator*(AffineScalar a, double k) {
    a *= k;
    return a;
  }
  friend AffineScalar operator*(double k, AffineScalar a) {
    a *= k;
    return a;
  }

  /// Product of two affine expressions. Rejected ("nonlinear product") when
  /// both factors carry decision variables: the assembly never needs
  /// variable-times-variable terms, and allowing them would break the SDP.
  friend AffineScalar operator*(const AffineScalar& a, const AffineScalar& b) {
    if (!a.terms_.empty() && !b.terms_.empty())
      throw std::invalid_argument("AffineScalar: nonlinear product rejected");
    if (a.terms_.empty()) {
      AffineScalar r = b;
      r *= a.constant_;
      return r;
    }
    AffineScalar r = a;
    r *= b.constant_;
    return r;
  }

  /// Numeric value under a full assignment of decision variables.
  /// \p value must return the value of a variable id; a missing assignment is
  /// the callback's responsibility to signal.
  template <class ValueFn>
  double evaluate(ValueFn&& value) const {
    double v = constant_;
    for (const auto& [id, c] : terms_) v += c * value(id);
    return v;
  }

  bool operator==(const AffineScalar& o) const {
    return constant_ == o.constant_ && terms_ == o.terms_;
  }

 private:
  void merge(std::span<const std::pair<int, double>> other, double scale) {
    std::vector<std::pair<int, double>> out;
    out.reserve(terms_.size() + other.size());
    std::size_t i = 0, j = 0;
    while (i < terms_.size() || j < other.size()) {
      if (j == other.size() ||
          (i < terms_.size() && terms_[i].first < other[j].first)) {
        out.push_back(terms_[i++]);
      } else if (i == terms_.size() || other[j].first < terms_[i].first) {
        out.emplace_back(other[j].first, scale * other[j].second);
        ++j;
      } else {
        double c = terms_[i].second + scale * other[j].second;
        if (c != 0.0) out.emplace_back(terms_[i].first, c);
        ++i;
        ++j;
      }
    }
    terms_ = std::move(out);
  }

  double constant_ = 0.0;
  std::vector<std::pair<int, double>> terms_;
};

/// Builds the equality row "a = 0" from an affine expression, i.e.
/// sum coeff_k x_k = -constant. Returns false (and leaves \p out untouched)
/// when the expression is identically zero, so satisfied constant rows are
/// pruned. A nonzero constant with no terms yields a row with empty terms
/// and nonzero rhs -- the canonical encoding of a contradiction, which the
/// SDP layer flags as trivially infeasible.
inline bool equality_from_affine(const AffineScalar& a, LinearEq& out) {
  if (a.terms().empty() && a.constant() == 0.0) return false;
  out.terms.assign(a.terms().begin(), a.terms().end());
  out.rhs = -a.constant();
  return true;
}

}  // namespace lkstab
