// SPDX-License-Identifier: MIT

/// \file lkstab/sdp_problem.hpp
/// \brief Semidefinite-program data model: PSD blocks, free scalars, linear
///        equality rows over the unified scalar-variable registry.
///
/// A problem instance owns one flat registry of scalar decision variables.
/// Each variable is either an upper-triangle entry (i <= j) of some PSD
/// matrix block or a free (sign-unconstrained) scalar.  Equality constraints
/// are sparse rows over these variables.  Assembly is single-writer; a
/// solved problem is treated as immutable.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lkstab/affine.hpp"
#include "lkstab/matrix_poly.hpp"

namespace lkstab {

/// Where a scalar decision variable lives.
struct VarInfo {
  int block = -1;  ///< PSD block index, or -1 for a free scalar.
  int i = 0;       ///< Row within the block (i <= j); unused for free vars.
  int j = 0;       ///< Column within the block.
};

/// Feasibility-problem container.  See file comment.
class SdpProblem {
 public:
  /// Registers a symmetric PSD block of the given size and eagerly allocates
  /// its size*(size+1)/2 upper-triangle scalar variables.
  int add_psd_block(int size) {
    if (size <= 0) throw std::invalid_argument("SdpProblem: block size must be positive");
    const int handle = static_cast<int>(block_sizes_.size());
    block_sizes_.push_back(size);
    block_base_.push_back(static_cast<int>(vars_.size()));
    for (int i = 0; i < size; ++i)
      for (int j = i; j < size; ++j) vars_.push_back(VarInfo{handle, i, j});
    return handle;
  }

  /// Scalar variable id of entry (i, j) of a PSD block; order-insensitive.
  int psd_entry_id(int block, int i, int j) const {
    if (block < 0 || block >= static_cast<int>(block_sizes_.size()))
      throw std::out_of_range("SdpProblem: bad block handle");
    const int n = block_sizes_[block];
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::out_of_range("SdpProblem: entry outside block");
    if (i > j) std::swap(i, j);
    return block_base_[block] + i * n - i * (i - 1) / 2 + (j - i);
  }

  /// Entry (i, j) of a PSD block as an affine expression (a bare variable).
  AffineScalar psd_entry(int block, int i, int j) const {
    return AffineScalar::variable(psd_entry_id(block, i, j));
  }

  /// Registers a free (sign-unconstrained) scalar; returns its id.
  int new_free_var_id() {
    vars_.push_back(VarInfo{-1, 0, 0});
    return static_cast<int>(vars_.size()) - 1;
  }
  AffineScalar new_free_var() { return AffineScalar::variable(new_free_var_id()); }

  /// Symmetric matrix of fresh PSD-block entries as a MatrixPoly coefficient
  /// matrix (degree zero); convenience for Gram and kernel allocation.
  Eigen::Index num_scalar_vars() const { return static_cast<Eigen::Index>(vars_.size()); }
  int num_blocks() const { return static_cast<int>(block_sizes_.size()); }
  int block_size(int b) const { return block_sizes_.at(b); }
  const std::vector<int>& block_sizes() const { return block_sizes_; }
  const VarInfo& var(int id) const { return vars_.at(id); }
  const std::vector<VarInfo>& vars() const { return vars_; }

  /// Appends one equality row.  Rows are normalized (terms sorted by id,
  /// duplicates merged, exact zeros dropped).  An empty row with nonzero
  /// right-hand side marks the problem trivially infeasible; an empty row
  /// with (numerically) zero right-hand side is dropped.
  void add_equality(LinearEq row) {
    normalize(row);
    for (const auto& [id, c] : row.terms) {
      (void)c;
      if (id < 0 || id >= static_cast<int>(vars_.size()))
        throw std::invalid_argument("SdpProblem: equality references unknown variable");
    }
    if (row.terms.empty()) {
      if (std::abs(row.rhs) > kContradictionTol) trivially_infeasible_ = true;
      return;
    }
    equalities_.push_back(std::move(row));
  }

  /// Appends the coefficient-matching rows that force a == b identically.
  void add_poly_equality(const MatrixPoly& a, const MatrixPoly& b) {
    for (auto& row : coefficient_equalities(a, b)) add_equality(std::move(row));
  }

  const std::vector<LinearEq>& equalities() const { return equalities_; }
  bool trivially_infeasible() const { return trivially_infeasible_; }

  /// Materializes one PSD block from a full assignment vector.
  Eigen::MatrixXd block_value(int b, const std::vector<double>& assignment) const {
    const int n = block_sizes_.at(b);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = assignment.at(static_cast<std::size_t>(psd_entry_id(b, i, j)));
        M(i, j) = v;
        M(j, i) = v;
      }
    return M;
  }

 private:
  static constexpr double kContradictionTol = 1e-9;

  static void normalize(LinearEq& row) {
    std::sort(row.terms.begin(), row.terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    out.reserve(row.terms.size());
    for (const auto& t : row.terms) {
      if (!out.empty() && out.back().first == t.first)
        out.back().second += t.second;
      else
        out.push_back(t);
    }
    std::erase_if(out, [](const auto& t) { return t.second == 0.0; });
    row.terms = std::move(out);
  }

  std::vector<int> block_sizes_;
  std::vector<int> block_base_;
  std::vector<VarInfo> vars_;
  std::vector<LinearEq> equalities_;
  bool trivially_infeasible_ = false;
};

/// Solver verdict taxonomy.  "infeasible" is only ever reported together
/// with a verified dual improving ray; anything uncertified is "unknown".
enum class SdpStatus { feasible, infeasible, unknown };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::feasible: return "feasible";
    case SdpStatus::infeasible: return "infeasible";
    default: return "unknown";
  }
}

/// Output of a solve: values for every registered scalar variable plus
/// bookkeeping.  `margin` is the optimal strict-feasibility slack t* of the
/// internal phase-I program max t s.t. X - t I is PSD on the affine slice.
struct SdpSolution {
  SdpStatus status = SdpStatus::unknown;
  std::vector<double> assignment;   ///< Size = problem.num_scalar_vars().
  double margin = 0.0;              ///< Optimal slack t*.
  int iterations = 0;
  double solve_seconds = 0.0;
  double mu = 0.0;                  ///< Final complementarity measure.
  double primal_residual = 0.0;     ///< Final scaled equality residual.
  double dual_residual = 0.0;
  std::vector<double> farkas_ray;   ///< Dual certificate when infeasible.
  std::string detail;               ///< Human-readable termination note.
};

/// Residual report recomputed from raw problem data only (independent of
/// the solver path; uses the original, pre-elimination equality rows).
struct VerifyReport {
  double max_equality_residual = 0.0;
  double min_eigenvalue = 0.0;  ///< Minimum over all PSD blocks.
  std::vector<double> block_min_eig;
};

inline VerifyReport verify(const SdpProblem& p, const std::vector<double>& assignment) {
  if (assignment.size() != static_cast<std::size_t>(p.num_scalar_vars()))
    throw std::invalid_argument("verify: assignment size mismatch");
  VerifyReport rep;
  for (const auto& row : p.equalities()) {
    double acc = -row.rhs;
    for (const auto& [id, c] : row.terms) acc += c * assignment[static_cast<std::size_t>(id)];
    rep.max_equality_residual = std::max(rep.max_equality_residual, std::abs(acc));
  }
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int b = 0; b < p.num_blocks(); ++b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.block_value(b, assignment),
                                                      Eigen::EigenvaluesOnly);
    rep.block_min_eig.push_back(es.eigenvalues().minCoeff());
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, rep.block_min_eig.back());
  }
  if (p.num_blocks() == 0) rep.min_eigenvalue = 0.0;
  return rep;
}

}  // namespace lkstab
