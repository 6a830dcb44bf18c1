// SPDX-License-Identifier: MIT

/// \file lkstab/delay_system.hpp
/// \brief The linear multi-delay system  x'(t) = A_0 x(t) + sum_i A_i x(t-tau_i).
///
/// A DelaySystem is the immutable problem datum every other module consumes:
/// a state dimension n, strictly increasing positive delays tau_1 < ... <
/// tau_K, and K+1 real n x n coefficient matrices. The delay grid of
/// [-tau_K, 0] induced by the delays is available via grid().

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lkstab/grid.hpp"

namespace lkstab {

class DelaySystem {
 public:
  /// \param A  K+1 matrices A_0, A_1, ..., A_K, all n x n.
  /// \param taus  strictly increasing positive delays tau_1 < ... < tau_K.
  DelaySystem(std::vector<Eigen::MatrixXd> A, std::vector<double> taus)
      : A_(std::move(A)), taus_(std::move(taus)) {
    if (A_.empty()) throw std::invalid_argument("DelaySystem: A_0 required");
    if (A_.size() != taus_.size() + 1)
      throw std::invalid_argument(
          "DelaySystem: need exactly one delay per matrix A_1..A_K");
    const Eigen::Index n = A_[0].rows();
    if (n <= 0 || A_[0].cols() != n)
      throw std::invalid_argument("DelaySystem: A_0 must be square");
    for (const auto& m : A_)
      if (m.rows() != n || m.cols() != n)
        throw std::invalid_argument("DelaySystem: inconsistent matrix sizes");
    double prev = 0.0;
    for (double t : taus_) {
      if (!(t > prev))
        throw std::invalid_argument(
            "DelaySystem: delays must be strictly increasing and positive");
      prev = t;
    }
  }

  int n() const { return static_cast<int>(A_[0].rows()); }
  int K() const { return static_cast<int>(taus_.size()); }
  const std::vector<double>& taus() const { return taus_; }
  double tau(int i) const { return i == 0 ? 0.0 : taus_.at(i - 1); }
  double tau_max() const { return taus_.back(); }

  /// A_0 for i = 0, the delay matrices A_1..A_K otherwise.
  const Eigen::MatrixXd& A(int i) const { return A_.at(i); }
  const std::vector<Eigen::MatrixXd>& matrices() const { return A_; }

  IntervalGrid grid() const { return IntervalGrid(taus_); }

 private:
  std::vector<Eigen::MatrixXd> A_;
  std::vector<double> taus_;
};

}  // namespace lkstab
