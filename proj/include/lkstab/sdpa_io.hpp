// SPDX-License-Identifier: MIT

/// \file lkstab/sdpa_io.hpp
/// \brief Classical SDPA sparse-format export and import.
///
/// The file encodes the standard pair
///     (P)  min  c'x   s.t.  X = sum_k x_k F_k - F_0,  X PSD,
///     (D)  max  tr(F_0 Y)  s.t.  tr(F_k Y) = c_k,  Y PSD.
/// Our feasibility problems map onto the (D) side: one entry matrix F_k per
/// equality row, the right-hand sides on line 4, and no objective (F_0 = 0).
/// Free scalars are exported with the standard split u = u+ - u- realized as
/// a diagonal block (negative size on line 3), since the classical format
/// has no free variables.
///
/// Layout (ASCII, space-separated, one entry per line, upper triangle only):
///   line 1: m                      number of constraint matrices
///   line 2: nblocks
///   line 3: block sizes            negative = diagonal block
///   line 4: right-hand sides       m values
///   then:   matno blkno i j value  1-based; matno 0 is the constant matrix

#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lkstab/sdp_problem.hpp"

namespace lkstab {

/// One quintuple line of an SDPA sparse file (1-based indices, as on disk).
struct SdpaEntry {
  int matno = 0;
  int blkno = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;
  friend bool operator==(const SdpaEntry&, const SdpaEntry&) = default;
};

/// Parsed file image: exactly what is on disk, no interpretation.
struct SdpaData {
  int m = 0;
  std::vector<int> block_sizes;  ///< Signed; negative = diagonal block.
  std::vector<double> rhs;
  std::vector<SdpaEntry> entries;
  friend bool operator==(const SdpaData&, const SdpaData&) = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Renders a problem to the file image.  Every PSD block maps to one
/// positive block; all free scalars map into one trailing diagonal block of
/// size 2 * (number of free scalars), entries (2f-1, 2f-1) = +c and
/// (2f, 2f) = -c realizing the split convention.
inline SdpaData to_sdpa_data(const SdpProblem& p) {
  SdpaData d;
  d.m = static_cast<int>(p.equalities().size());
  d.block_sizes.assign(p.block_sizes().begin(), p.block_sizes().end());

  // Free-variable numbering within the split block.
  std::vector<int> free_slot(static_cast<std::size_t>(p.num_scalar_vars()), -1);
  int nfree = 0;
  for (int id = 0; id < static_cast<int>(p.num_scalar_vars()); ++id)
    if (p.var(id).block < 0) free_slot[static_cast<std::size_t>(id)] = nfree++;
  const int split_block = static_cast<int>(d.block_sizes.size()) + 1;  // 1-based
  if (nfree > 0) d.block_sizes.push_back(-2 * nfree);

  for (int k = 0; k < d.m; ++k) {
    const LinearEq& row = p.equalities()[static_cast<std::size_t>(k)];
    d.rhs.push_back(row.rhs);
    for (const auto& [id, c] : row.terms) {
      const VarInfo& v = p.var(id);
      if (v.block >= 0) {
        // tr(F Y) with F symmetric and stored upper-triangle: an off-diagonal
        // coefficient c on the scalar variable Y_ij needs F_ij = c / 2.
        const double val = (v.i == v.j) ? c : c / 2.0;
        d.entries.push_back({k + 1, v.block + 1, v.i + 1, v.j + 1, val});
      } else {
        const int f = free_slot[static_cast<std::size_t>(id)];
        d.entries.push_back({k + 1, split_block, 2 * f + 1, 2 * f + 1, c});
        d.entries.push_back({k + 1, split_block, 2 * f + 2, 2 * f + 2, -c});
      }
    }
  }
  return d;
}

inline void write_sdpa(const SdpaData& d, std::ostream& os) {
  os << d.m << "\n";
  os << d.block_sizes.size() << "\n";
  for (std::size_t b = 0; b < d.block_sizes.size(); ++b)
    os << (b ? " " : "") << d.block_sizes[b];
  os << "\n";
  for (std::size_t k = 0; k < d.rhs.size(); ++k)
    os << (k ? " " : "") << detail::format_double(d.rhs[k]);
  os << "\n";
  for (const auto& e : d.entries)
    os << e.matno << " " << e.blkno << " " << e.i << " " << e.j << " "
       << detail::format_double(e.value) << "\n";
  if (!os) throw std::runtime_error("sdpa: stream write failed");
}

inline void to_sdpa_sparse(const SdpProblem& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("sdpa: cannot open '" + path + "' for writing");
  write_sdpa(to_sdpa_data(p), os);
}

/// Parses a file image.  Accepts comment lines (* or ") before the header as
/// produced by other tools; our own writer emits none.
inline SdpaData parse_sdpa(std::istream& is) {
  SdpaData d;
  std::string line;
  auto next_data_line = [&]() -> std::string {
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line[0] == '*' || line[0] == '"') continue;
      return line;
    }
    throw std::runtime_error("sdpa: unexpected end of file in header");
  };

  d.m = std::stoi(next_data_line());
  const int nblocks = std::stoi(next_data_line());
  {
    std::istringstream bs(next_data_line());
    for (int b = 0; b < nblocks; ++b) {
      std::string tok;
      if (!(bs >> tok)) throw std::runtime_error("sdpa: short block-size line");
      // Tolerate delimiters {}(), used by some writers.
      std::erase_if(tok, [](char ch) { return ch == '{' || ch == '}' || ch == '(' ||
                                              ch == ')' || ch == ','; });
      d.block_sizes.push_back(std::stoi(tok));
    }
  }
  {
    std::istringstream rs(next_data_line());
    for (int k = 0; k < d.m; ++k) {
      double v;
      if (!(rs >> v)) throw std::runtime_error("sdpa: short right-hand-side line");
      d.rhs.push_back(v);
    }
  }
  SdpaEntry e;
  while (is >> e.matno >> e.blkno >> e.i >> e.j >> e.value) {
    if (e.blkno < 1 || e.blkno > nblocks) throw std::runtime_error("sdpa: entry block out of range");
    if (e.matno < 0 || e.matno > d.m) throw std::runtime_error("sdpa: entry matno out of range");
    d.entries.push_back(e);
  }
  return d;
}

inline SdpaData parse_sdpa_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("sdpa: cannot open '" + path + "' for reading");
  return parse_sdpa(is);
}

/// Rebuilds a solvable problem from a file image.  Positive blocks become
/// PSD blocks; each diagonal-block slot becomes its own 1x1 PSD block (a
/// nonnegative scalar), which is an exact model of a diagonal block.
/// Constant-matrix entries (matno 0) shift the corresponding rows: the file
/// row  tr(F_k Y) = c_k  with nonzero F_0 has no equality-side constant, so
/// F_0 support is rejected here (our writer never emits it).
inline SdpProblem sdpa_to_problem(const SdpaData& d) {
  SdpProblem p;
  std::vector<int> handle;          // per file block: first handle
  std::vector<bool> diagonal;
  for (int bs : d.block_sizes) {
    diagonal.push_back(bs < 0);
    if (bs > 0) {
      handle.push_back(p.add_psd_block(bs));
    } else if (bs < 0) {
      int first = -1;
      for (int k = 0; k < -bs; ++k) {
        const int h = p.add_psd_block(1);
        if (k == 0) first = h;
      }
      handle.push_back(first);
    } else {
      throw std::runtime_error("sdpa: zero block size");
    }
  }
  std::vector<LinearEq> rows(static_cast<std::size_t>(d.m));
  for (int k = 0; k < d.m; ++k) rows[static_cast<std::size_t>(k)].rhs = d.rhs[static_cast<std::size_t>(k)];
  for (const auto& e : d.entries) {
    if (e.matno == 0) throw std::runtime_error("sdpa: constant matrix not supported on import");
    const int bi = e.blkno - 1;
    int var;
    double coeff;
    if (diagonal[static_cast<std::size_t>(bi)]) {
      if (e.i != e.j) throw std::runtime_error("sdpa: off-diagonal entry in diagonal block");
      var = p.psd_entry_id(handle[static_cast<std::size_t>(bi)] + (e.i - 1), 0, 0);
      coeff = e.value;
    } else {
      var = p.psd_entry_id(handle[static_cast<std::size_t>(bi)], e.i - 1, e.j - 1);
      coeff = (e.i == e.j) ? e.value : 2.0 * e.value;
    }
    rows[static_cast<std::size_t>(e.matno - 1)].terms.emplace_back(var, coeff);
  }
  for (auto& r : rows) p.add_equality(std::move(r));
  return p;
}

}  // namespace lkstab
