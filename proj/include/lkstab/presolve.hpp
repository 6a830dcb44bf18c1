// SPDX-License-Identifier: MIT

/// \file lkstab/presolve.hpp
/// \brief Equality-system presolve: duplicate-row removal and exact
///        elimination of free scalar variables by sparse Gaussian pivoting.
///
/// The assembled programs contain large families of free scalars (operator
/// coefficients, spacing-kernel coefficients) that each appear in only a
/// handful of equality rows.  Eliminating them shrinks the interior-point
/// Schur system from "all coefficient-matching rows" down to the rows that
/// genuinely couple PSD entries.  Every elimination is recorded so the
/// eliminated values can be reconstructed exactly from the reduced solution.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <vector>

#include "lkstab/sdp_problem.hpp"

namespace lkstab {

/// One recorded pivot: `var` was solved out of `row` (coefficient `coeff`),
/// i.e.  var = (row.rhs - sum_{other terms} c_k x_k) / coeff.
struct Elimination {
  int var = -1;
  double coeff = 0.0;
  LinearEq row;  ///< Pivot row as it stood at elimination time, var removed.
};

struct PresolveResult {
  bool contradiction = false;          ///< A row reduced to 0 = c, c != 0.
  double contradiction_residual = 0.0;
  std::vector<LinearEq> reduced;       ///< Rows over surviving variables only.
  std::vector<Elimination> log;        ///< In elimination order.
  std::vector<int> dangling_free;      ///< Free vars absent from every row.
  std::size_t duplicate_rows = 0;
  std::size_t input_rows = 0;
};

namespace detail {

inline void normalize_row(LinearEq& row) {
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

/// target += scale * source, merged by variable id, exact zeros dropped.
/// `drop` (when >= 0) is removed from the result unconditionally: the
/// caller is eliminating that variable and roundoff in the cancellation
/// must not leave a spurious residue behind.
inline void axpy_row(LinearEq& target, double scale, const LinearEq& source,
                     int drop = -1) {
  std::vector<std::pair<int, double>> merged;
  merged.reserve(target.terms.size() + source.terms.size());
  std::size_t a = 0, b = 0;
  while (a < target.terms.size() || b < source.terms.size()) {
    if (b == source.terms.size() ||
        (a < target.terms.size() && target.terms[a].first < source.terms[b].first)) {
      merged.push_back(target.terms[a++]);
    } else if (a == target.terms.size() || source.terms[b].first < target.terms[a].first) {
      merged.emplace_back(source.terms[b].first, scale * source.terms[b].second);
      ++b;
    } else {
      const double v = target.terms[a].second + scale * source.terms[b].second;
      if (v != 0.0) merged.emplace_back(target.terms[a].first, v);
      ++a;
      ++b;
    }
  }
  std::erase_if(merged, [&](const auto& t) {
    return t.second == 0.0 || t.first == drop;
  });
  target.terms = std::move(merged);
  target.rhs += scale * source.rhs;
}

inline double coeff_of(const LinearEq& row, int var) {
  auto it = std::lower_bound(row.terms.begin(), row.terms.end(), std::make_pair(var, 0.0),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
  return (it != row.terms.end() && it->first == var) ? it->second : 0.0;
}

}  // namespace detail

/// Removes exact-duplicate rows, then repeatedly solves free variables out
/// of the system, always picking a free variable of minimum occurrence (so
/// the common single-occurrence kernels eliminate with zero fill-in).
///
/// \param tol  rows whose terms vanish are contradictions when |rhs| exceeds
///             tol * (1 + max |coefficient| seen in the input).
inline PresolveResult presolve(const SdpProblem& p, double tol = 1e-11) {
  PresolveResult res;
  res.input_rows = p.equalities().size();
  if (p.trivially_infeasible()) {
    res.contradiction = true;
    res.contradiction_residual = std::numeric_limits<double>::quiet_NaN();
    return res;
  }

  double coeff_scale = 1.0;
  for (const auto& row : p.equalities())
    for (const auto& [id, c] : row.terms) {
      (void)id;
      coeff_scale = std::max(coeff_scale, std::abs(c));
    }
  const double zero_rhs_tol = tol * coeff_scale;

  // Active row set with exact-duplicate removal.
  std::vector<LinearEq> rows;
  rows.reserve(res.input_rows);
  {
    std::map<std::pair<std::vector<std::pair<int, double>>, double>, bool> seen;
    for (LinearEq row : p.equalities()) {
      detail::normalize_row(row);
      if (row.terms.empty()) {
        if (std::abs(row.rhs) > zero_rhs_tol) {
          res.contradiction = true;
          res.contradiction_residual = row.rhs;
          return res;
        }
        continue;
      }
      auto key = std::make_pair(row.terms, row.rhs);
      if (seen.emplace(std::move(key), true).second) rows.push_back(std::move(row));
    }
    res.duplicate_rows = res.input_rows - rows.size();
  }

  std::vector<bool> alive(rows.size(), true);
  const int nvars = static_cast<int>(p.num_scalar_vars());

  // Occurrence lists for free variables, lazily pruned of stale entries, and
  // a lazy min-occurrence heap keyed by (count, var).
  std::vector<std::vector<std::size_t>> occ(static_cast<std::size_t>(nvars));
  std::vector<bool> eliminated(static_cast<std::size_t>(nvars), false);
  using HeapItem = std::pair<std::size_t, int>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;

  auto index_row = [&](std::size_t r) {
    for (const auto& [id, c] : rows[r].terms) {
      (void)c;
      if (p.var(id).block < 0 && !eliminated[static_cast<std::size_t>(id)]) {
        occ[static_cast<std::size_t>(id)].push_back(r);
        heap.emplace(occ[static_cast<std::size_t>(id)].size(), id);
      }
    }
  };
  for (std::size_t r = 0; r < rows.size(); ++r) index_row(r);

  auto prune_occ = [&](int var) -> std::vector<std::size_t>& {
    auto& lst = occ[static_cast<std::size_t>(var)];
    std::erase_if(lst, [&](std::size_t r) {
      return !alive[r] || detail::coeff_of(rows[r], var) == 0.0;
    });
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
    return lst;
  };

  while (!heap.empty()) {
    const auto [claimed, var] = heap.top();
    heap.pop();
    if (eliminated[static_cast<std::size_t>(var)]) continue;
    auto& lst = prune_occ(var);
    if (lst.empty()) continue;           // var no longer present anywhere
    if (lst.size() > claimed) {          // stale priority: requeue
      heap.emplace(lst.size(), var);
      continue;
    }

    // Pivot row: fewest terms, then largest |coefficient| for stability.
    std::size_t pivot = lst.front();
    double pivot_coeff = 0.0;
    std::size_t best_terms = SIZE_MAX;
    for (std::size_t r : lst) {
      const double c = detail::coeff_of(rows[r], var);
      const std::size_t nt = rows[r].terms.size();
      if (nt < best_terms || (nt == best_terms && std::abs(c) > std::abs(pivot_coeff))) {
        best_terms = nt;
        pivot = r;
        pivot_coeff = c;
      }
    }

    // Fold the pivot row into every other row containing the variable.
    // Iterate a snapshot: index_row below appends to occurrence lists and
    // must not invalidate this traversal.
    const std::vector<std::size_t> fold(lst.begin(), lst.end());
    for (std::size_t r : fold) {
      if (r == pivot) continue;
      const double c = detail::coeff_of(rows[r], var);
      if (c == 0.0) continue;
      detail::axpy_row(rows[r], -c / pivot_coeff, rows[pivot], var);
      if (rows[r].terms.empty()) {
        if (std::abs(rows[r].rhs) > zero_rhs_tol * 1e3) {
          res.contradiction = true;
          res.contradiction_residual = rows[r].rhs;
          return res;
        }
        alive[r] = false;
        continue;
      }
      index_row(r);  // pivot terms (incl. other frees) entered row r
    }

    // Record the pivot and retire its row.
    Elimination e;
    e.var = var;
    e.coeff = pivot_coeff;
    e.row = rows[pivot];
    std::erase_if(e.row.terms, [&](const auto& t) { return t.first == var; });
    res.log.push_back(std::move(e));
    alive[pivot] = false;
    eliminated[static_cast<std::size_t>(var)] = true;
    occ[static_cast<std::size_t>(var)].clear();
  }

  // Free variables never pivoted out get value zero at reconstruction.
  for (int id = 0; id < nvars; ++id)
    if (p.var(id).block < 0 && !eliminated[static_cast<std::size_t>(id)])
      res.dangling_free.push_back(id);

  for (std::size_t r = 0; r < rows.size(); ++r)
    if (alive[r]) res.reduced.push_back(std::move(rows[r]));
  return res;
}

/// Fills in the eliminated free variables of `assignment` by reverse
/// back-substitution through the elimination log.  PSD-entry values (and
/// any surviving free values) must already be present.
inline void back_substitute(const PresolveResult& pre, std::vector<double>& assignment) {
  for (int id : pre.dangling_free) assignment.at(static_cast<std::size_t>(id)) = 0.0;
  for (auto it = pre.log.rbegin(); it != pre.log.rend(); ++it) {
    double acc = it->row.rhs;
    for (const auto& [id, c] : it->row.terms)
      acc -= c * assignment.at(static_cast<std::size_t>(id));
    assignment.at(static_cast<std::size_t>(it->var)) = acc / it->coeff;
  }
}

}  // namespace lkstab
