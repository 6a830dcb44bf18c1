// SPDX-License-Identifier: MIT

/// \file lkstab/grid.hpp
/// \brief The delay-interval grid of [-tau_K, 0] and piecewise polynomials
/// over it.
///
/// Interval i (1-based in the math, 0-based in code) is [-tau_i, -tau_{i-1}]
/// with the convention tau_0 = 0, so piece 0 touches the origin and piece
/// K-1 touches -tau_K. Pieces tile [-tau_K, 0] and overlap only at their
/// endpoints. Discontinuities across breakpoints are allowed by design.

#pragma once

#include <stdexcept>
#include <vector>

#include "lkstab/matrix_poly.hpp"

namespace lkstab {

class IntervalGrid {
 public:
  IntervalGrid() = default;
  explicit IntervalGrid(std::vector<double> delays) : delays_(std::move(delays)) {
    if (delays_.empty())
      throw std::invalid_argument("IntervalGrid: at least one delay required");
    double prev = 0.0;
    for (double t : delays_) {
      if (!(t > prev))
        throw std::invalid_argument(
            "IntervalGrid: delays must be strictly increasing and positive");
      prev = t;
    }
  }

  int pieces() const { return static_cast<int>(delays_.size()); }
  const std::vector<double>& delays() const { return delays_; }
  double tau(int i) const {
    // tau(0) = 0, tau(i) = delays[i-1]
    return i == 0 ? 0.0 : delays_.at(i - 1);
  }
  double tau_max() const { return delays_.back(); }
  /// Left endpoint of piece i (0-based): -tau_{i+1}.
  double left(int i) const { return -tau(i + 1); }
  /// Right endpoint of piece i (0-based): -tau_i.
  double right(int i) const { return -tau(i); }
  double width(int i) const { return right(i) - left(i); }

  /// The compression ratio a_i = (tau_i - tau_{i-1}) / tau_i of the paper's
  /// change of variables (0-based piece index).
  double a(int i) const { return width(i) / tau(i + 1); }

  /// Index of the piece containing \p s in [-tau_K, 0]; breakpoint values
  /// resolve to the piece on their right (closer to zero).
  int piece_of(double s) const {
    for (int i = 0; i < pieces(); ++i)
      if (s >= left(i)) return i;
    return pieces() - 1;
  }

  bool operator==(const IntervalGrid& o) const { return delays_ == o.delays_; }

 private:
  std::vector<double> delays_;
};

/// One MatrixPoly in s per grid interval; pieces share rows/cols. Continuity
/// across breakpoints is not required.
class PiecewisePoly1D {
 public:
  PiecewisePoly1D() = default;
  PiecewisePoly1D(IntervalGrid grid, int rows, int cols)
      : grid_(std::move(grid)),
        pieces_(grid_.pieces(), MatrixPoly(rows, cols)) {}
  PiecewisePoly1D(IntervalGrid grid, std::vector<MatrixPoly> pieces)
      : grid_(std::move(grid)), pieces_(std::move(pieces)) {
    if (static_cast<int>(pieces_.size()) != grid_.pieces())
      throw std::invalid_argument("PiecewisePoly1D: piece count mismatch");
    for (const auto& p : pieces_)
      if (p.rows() != rows() || p.cols() != cols())
        throw std::invalid_argument("PiecewisePoly1D: inconsistent dimensions");
  }

  const IntervalGrid& grid() const { return grid_; }
  int rows() const { return pieces_.at(0).rows(); }
  int cols() const { return pieces_.at(0).cols(); }
  MatrixPoly& piece(int i) { return pieces_.at(i); }
  const MatrixPoly& piece(int i) const { return pieces_.at(i); }

  PiecewisePoly1D& operator+=(const PiecewisePoly1D& o) {
    require_compatible(o);
    for (std::size_t k = 0; k < pieces_.size(); ++k) pieces_[k] += o.pieces_[k];
    return *this;
  }
  friend PiecewisePoly1D operator+(PiecewisePoly1D a, const PiecewisePoly1D& b) {
    a += b;
    return a;
  }
  friend PiecewisePoly1D operator-(PiecewisePoly1D a) {
    for (auto& p : a.pieces_) p = -p;
    return a;
  }

  template <class ValueFn>
  Eigen::MatrixXd evaluate_at(double s, ValueFn&& value) const {
    int i = grid_.piece_of(s);
    return evaluate(pieces_[i], s, 0.0, value);
  }

 private:
  void require_compatible(const PiecewisePoly1D& o) const {
    if (!(grid_ == o.grid_) || rows() != o.rows() || cols() != o.cols())
      throw std::invalid_argument("PiecewisePoly1D: incompatible operands");
  }
  IntervalGrid grid_;
  std::vector<MatrixPoly> pieces_;
};

/// One MatrixPoly in (s, theta) per interval pair (i, j), row-major in i.
class PiecewisePoly2D {
 public:
  PiecewisePoly2D() = default;
  PiecewisePoly2D(IntervalGrid grid, int rows, int cols)
      : grid_(std::move(grid)),
        pieces_(static_cast<std::size_t>(grid_.pieces()) * grid_.pieces(),
                MatrixPoly(rows, cols)) {}

  const IntervalGrid& grid() const { return grid_; }
  int rows() const { return pieces_.at(0).rows(); }
  int cols() const { return pieces_.at(0).cols(); }
  MatrixPoly& piece(int i, int j) { return pieces_.at(i * grid_.pieces() + j); }
  const MatrixPoly& piece(int i, int j) const {
    return pieces_.at(i * grid_.pieces() + j);
  }

  PiecewisePoly2D& operator+=(const PiecewisePoly2D& o) {
    require_compatible(o);
    for (std::size_t k = 0; k < pieces_.size(); ++k) pieces_[k] += o.pieces_[k];
    return *this;
  }
  friend PiecewisePoly2D operator+(PiecewisePoly2D a, const PiecewisePoly2D& b) {
    a += b;
    return a;
  }
  friend PiecewisePoly2D operator-(PiecewisePoly2D a) {
    for (auto& p : a.pieces_) p = -p;
    return a;
  }

  template <class ValueFn>
  Eigen::MatrixXd evaluate_at(double s, double theta, ValueFn&& value) const {
    return evaluate(piece(grid_.piece_of(s), grid_.piece_of(theta)), s, theta,
                    value);
  }

 private:
  void require_compatible(const PiecewisePoly2D& o) const {
    if (!(grid_ == o.grid_) || rows() != o.rows() || cols() != o.cols())
      throw std::invalid_argument("PiecewisePoly2D: incompatible operands");
  }
  IntervalGrid grid_;
  std::vector<MatrixPoly> pieces_;
};

}  // namespace lkstab
