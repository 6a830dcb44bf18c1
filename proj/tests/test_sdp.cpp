// SPDX-License-Identifier: MIT

/// \file tests/test_sdp.cpp
/// \brief SDP model, presolve, SDPA round-trip, and interior-point backend.

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "lkstab/ipm.hpp"
#include "lkstab/presolve.hpp"
#include "lkstab/sdp_problem.hpp"
#include "lkstab/sdpa_io.hpp"

using namespace lkstab;

namespace {
std::mt19937 rng(20240818);
double urand(double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
}  // namespace

TEST_CASE("registry semantics") {
  SdpProblem p;
  SECTION("2x2 block exposes three scalar entries") {
    int b = p.add_psd_block(2);
    REQUIRE(p.num_scalar_vars() == 3);
    REQUIRE(p.psd_entry_id(b, 0, 1) == p.psd_entry_id(b, 1, 0));
    REQUIRE(p.psd_entry_id(b, 0, 0) != p.psd_entry_id(b, 1, 1));
  }
  SECTION("independent block handles") {
    int b1 = p.add_psd_block(2);
    int b2 = p.add_psd_block(3);
    REQUIRE(b1 != b2);
    REQUIRE(p.num_scalar_vars() == 3 + 6);
    REQUIRE(p.psd_entry_id(b2, 2, 2) == 8);
  }
  SECTION("size zero rejected") {
    REQUIRE_THROWS_AS(p.add_psd_block(0), std::invalid_argument);
    REQUIRE_THROWS_AS(p.add_psd_block(-2), std::invalid_argument);
  }
}

TEST_CASE("add_poly_equality flags contradictions") {
  SdpProblem p;
  SECTION("consistent rows pass through") {
    int b = p.add_psd_block(1);
    MatrixPoly lhs = MatrixPoly::monomial({1, 0}, p.psd_entry(b, 0, 0));
    MatrixPoly rhs = 3.0 * MatrixPoly::monomial({1, 0});
    p.add_poly_equality(lhs, rhs);
    REQUIRE(p.equalities().size() == 1);
    REQUIRE(!p.trivially_infeasible());
  }
  SECTION("constant mismatch is trivially infeasible") {
    MatrixPoly lhs = MatrixPoly::identity(1, 1.0);
    MatrixPoly rhs = MatrixPoly::identity(1, 2.0);
    p.add_poly_equality(lhs, rhs);
    REQUIRE(p.trivially_infeasible());
  }
}

TEST_CASE("sdpa export: minimal instance") {
  SdpProblem p;
  int b = p.add_psd_block(1);
  LinearEq row;
  row.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
  row.rhs = 1.0;
  p.add_equality(row);

  std::ostringstream os;
  write_sdpa(to_sdpa_data(p), os);
  REQUIRE(os.str() == "1\n1\n1\n1\n1 1 1 1 1\n");
}

TEST_CASE("sdpa round-trip reproduces the file image") {
  SdpProblem p;
  int b = p.add_psd_block(2);
  int f = p.new_free_var_id();
  LinearEq r1;
  r1.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
  r1.terms.emplace_back(p.psd_entry_id(b, 0, 1), -0.5);
  r1.terms.emplace_back(f, 2.0);
  r1.rhs = 3.25;
  p.add_equality(r1);
  LinearEq r2;
  r2.terms.emplace_back(p.psd_entry_id(b, 1, 1), 1.0 / 3.0);
  r2.rhs = -1.0;
  p.add_equality(r2);

  SdpaData d = to_sdpa_data(p);
  std::ostringstream os;
  write_sdpa(d, os);
  std::istringstream is(os.str());
  SdpaData back = parse_sdpa(is);
  REQUIRE(back == d);

  // The split-free-variable block is diagonal with paired +/- entries.
  REQUIRE(d.block_sizes.size() == 2);
  REQUIRE(d.block_sizes[1] == -2);
  // Off-diagonal coefficient is halved in the file (trace convention).
  bool found = false;
  for (const auto& e : d.entries)
    if (e.blkno == 1 && e.i == 1 && e.j == 2) {
      REQUIRE(e.value == -0.25);
      found = true;
    }
  REQUIRE(found);
}

TEST_CASE("presolve eliminates free variables and dedups rows") {
  SdpProblem p;
  int b = p.add_psd_block(1);
  int f1 = p.new_free_var_id();
  int f2 = p.new_free_var_id();  // dangling
  LinearEq r1;
  r1.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
  r1.terms.emplace_back(f1, 1.0);
  r1.rhs = 5.0;
  p.add_equality(r1);
  p.add_equality(r1);  // exact duplicate
  LinearEq r2;
  r2.terms.emplace_back(f1, 1.0);
  r2.rhs = 4.0;
  p.add_equality(r2);

  PresolveResult pre = presolve(p);
  REQUIRE(!pre.contradiction);
  REQUIRE(pre.duplicate_rows == 1);
  REQUIRE(pre.log.size() == 1);
  REQUIRE(pre.log[0].var == f1);
  REQUIRE(pre.dangling_free == std::vector<int>{f2});
  // Surviving system: x = 1.
  REQUIRE(pre.reduced.size() == 1);
  REQUIRE(pre.reduced[0].terms.size() == 1);

  std::vector<double> assign(static_cast<std::size_t>(p.num_scalar_vars()), 0.0);
  assign[0] = 1.0;  // x
  back_substitute(pre, assign);
  REQUIRE(assign[static_cast<std::size_t>(f1)] == Catch::Approx(4.0));
  REQUIRE(assign[static_cast<std::size_t>(f2)] == 0.0);
}

TEST_CASE("presolve detects fold-in contradictions") {
  SdpProblem p;
  (void)p.add_psd_block(1);
  int f = p.new_free_var_id();
  LinearEq r1;
  r1.terms.emplace_back(f, 1.0);
  r1.rhs = 4.0;
  p.add_equality(r1);
  LinearEq r2;
  r2.terms.emplace_back(f, 1.0);
  r2.rhs = 5.0;
  p.add_equality(r2);
  PresolveResult pre = presolve(p);
  REQUIRE(pre.contradiction);
}

TEST_CASE("solve: 1x1 equality instances") {
  SECTION("x = 1 is feasible with x recovered") {
    SdpProblem p;
    int b = p.add_psd_block(1);
    LinearEq r;
    r.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
    r.rhs = 1.0;
    p.add_equality(r);
    SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::feasible);
    REQUIRE(s.assignment[0] == Catch::Approx(1.0).margin(1e-6));
    VerifyReport rep = verify(p, s.assignment);
    REQUIRE(rep.max_equality_residual < 1e-7);
    REQUIRE(rep.min_eigenvalue > -1e-9);
  }
  SECTION("x = -1 is infeasible with a certificate") {
    SdpProblem p;
    int b = p.add_psd_block(1);
    LinearEq r;
    r.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
    r.rhs = -1.0;
    p.add_equality(r);
    SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::infeasible);
    REQUIRE(!s.farkas_ray.empty());
  }
  SECTION("x = 0.25 has phase-I slack 0.25") {
    SdpProblem p;
    int b = p.add_psd_block(1);
    LinearEq r;
    r.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
    r.rhs = 0.25;
    p.add_equality(r);
    SolveOptions o;
    o.optimize_margin = true;
    SdpSolution s = solve(p, o);
    REQUIRE(s.status == SdpStatus::feasible);
    REQUIRE(s.assignment[0] == Catch::Approx(0.25).margin(1e-6));
    REQUIRE(s.margin == Catch::Approx(0.25).margin(1e-4));
  }
}

TEST_CASE("solve: pinned 2x2 matrix margins") {
  auto pinned = [](double offdiag) {
    SdpProblem p;
    int b = p.add_psd_block(2);
    auto pin = [&](int i, int j, double v) {
      LinearEq r;
      r.terms.emplace_back(p.psd_entry_id(b, i, j), 1.0);
      r.rhs = v;
      p.add_equality(r);
    };
    pin(0, 0, 1.0);
    pin(1, 1, 1.0);
    pin(0, 1, offdiag);
    return p;
  };
  SECTION("off-diagonal 0.6: feasible, margin = smallest eigenvalue") {
    SdpProblem p = pinned(0.6);
    SolveOptions o;
    o.optimize_margin = true;
    SdpSolution s = solve(p, o);
    REQUIRE(s.status == SdpStatus::feasible);
    REQUIRE(s.margin == Catch::Approx(0.4).margin(1e-4));
  }
  SECTION("off-diagonal 1.2: infeasible with verified ray") {
    SdpProblem p = pinned(1.2);
    SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::infeasible);
    REQUIRE(!s.farkas_ray.empty());
  }
}

TEST_CASE("solve: free variables participate and reconstruct") {
  SdpProblem p;
  int b = p.add_psd_block(1);
  int f = p.new_free_var_id();
  LinearEq r1;  // x + f = 5
  r1.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
  r1.terms.emplace_back(f, 1.0);
  r1.rhs = 5.0;
  p.add_equality(r1);
  LinearEq r2;  // f = 4
  r2.terms.emplace_back(f, 1.0);
  r2.rhs = 4.0;
  p.add_equality(r2);
  SdpSolution s = solve(p);
  REQUIRE(s.status == SdpStatus::feasible);
  REQUIRE(s.assignment[static_cast<std::size_t>(f)] == Catch::Approx(4.0).margin(1e-7));
  REQUIRE(s.assignment[0] == Catch::Approx(1.0).margin(1e-6));
  VerifyReport rep = verify(p, s.assignment);
  REQUIRE(rep.max_equality_residual < 1e-7);
}

TEST_CASE("verify detects perturbations") {
  SdpProblem p;
  int b = p.add_psd_block(2);
  LinearEq r;
  r.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
  r.terms.emplace_back(p.psd_entry_id(b, 1, 1), 1.0);
  r.rhs = 2.0;
  p.add_equality(r);
  std::vector<double> exact{1.0, 0.0, 1.0};
  REQUIRE(verify(p, exact).max_equality_residual == 0.0);
  REQUIRE(verify(p, exact).min_eigenvalue >= 0.0);
  std::vector<double> bad{1.0, 0.0, 1.0 + 1e-3};
  REQUIRE(verify(p, bad).max_equality_residual == Catch::Approx(1e-3));
}

TEST_CASE("solve: random feasible and infeasible instances") {
  SECTION("random consistent systems are certified feasible") {
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 4;
      SdpProblem p;
      int b = p.add_psd_block(n);
      // Random strictly PD target X0 = G G' + I.
      Eigen::MatrixXd G(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = urand();
      Eigen::MatrixXd X0 = G * G.transpose() + Eigen::MatrixXd::Identity(n, n);
      for (int k = 0; k < 7; ++k) {
        LinearEq r;
        double rhs = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            if (urand() > 0.4) continue;
            double c = urand();
            r.terms.emplace_back(p.psd_entry_id(b, i, j), c);
            rhs += c * X0(i, j);
          }
        r.rhs = rhs;
        p.add_equality(r);
      }
      SdpSolution s = solve(p);
      REQUIRE(s.status == SdpStatus::feasible);
      VerifyReport rep = verify(p, s.assignment);
      REQUIRE(rep.max_equality_residual < 1e-6);
      REQUIRE(rep.min_eigenvalue > -1e-9);
    }
  }
  SECTION("PD coefficient with negative rhs is certified infeasible") {
    const int n = 4;
    SdpProblem p;
    int b = p.add_psd_block(n);
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) G(i, j) = urand();
    Eigen::MatrixXd S = G * G.transpose() + Eigen::MatrixXd::Identity(n, n);
    LinearEq r;  // <S, X> = -1, impossible for X PSD
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        r.terms.emplace_back(p.psd_entry_id(b, i, j), (i == j) ? S(i, i) : 2.0 * S(i, j));
    r.rhs = -1.0;
    p.add_equality(r);
    SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::infeasible);
  }
}

TEST_CASE("sdpa import solves to the same verdict") {
  // Feasible instance with a free variable (split on export).
  SdpProblem p;
  int b = p.add_psd_block(2);
  int f = p.new_free_var_id();
  LinearEq r1;
  r1.terms.emplace_back(p.psd_entry_id(b, 0, 0), 1.0);
  r1.terms.emplace_back(f, 1.0);
  r1.rhs = 2.0;
  p.add_equality(r1);
  LinearEq r2;
  r2.terms.emplace_back(p.psd_entry_id(b, 1, 1), 1.0);
  r2.terms.emplace_back(f, -1.0);
  r2.rhs = 0.0;
  p.add_equality(r2);

  SdpSolution direct = solve(p);
  REQUIRE(direct.status == SdpStatus::feasible);

  std::ostringstream os;
  write_sdpa(to_sdpa_data(p), os);
  std::istringstream is(os.str());
  SdpProblem q = sdpa_to_problem(parse_sdpa(is));
  SdpSolution imported = solve(q);
  REQUIRE(imported.status == direct.status);
}
