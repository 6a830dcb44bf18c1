// SPDX-License-Identifier: MIT

/// \file tests/test_polyalg.cpp
/// \brief Unit and property tests for the affine-coefficient polynomial layer.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lkstab/affine.hpp"
#include "lkstab/grid.hpp"
#include "lkstab/matrix_poly.hpp"
#include "lkstab/quadrature.hpp"

using namespace lkstab;

namespace {

std::mt19937 rng(20240817);

double urand(double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random numeric (constant-coefficient) polynomial in the given vars.
MatrixPoly random_poly(int rows, int cols, int deg, bool with_theta) {
  MatrixPoly p(rows, cols);
  for (int es = 0; es <= deg; ++es) {
    for (int eth = 0; eth <= (with_theta ? deg - es : 0); ++eth) {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          p.add_to_coeff({es, eth}, i, j, urand());
    }
  }
  return p;
}

}  // namespace

TEST_CASE("AffineScalar basics") {
  AffineScalar x1 = AffineScalar::variable(1);
  AffineScalar x2 = AffineScalar::variable(2);

  SECTION("unique ids and exact-zero pruning") {
    AffineScalar a = x1 + x1;  // 2 x1
    REQUIRE(a.terms().size() == 1);
    REQUIRE(a.terms()[0].second == 2.0);
    AffineScalar b = a - x1 - x1;
    REQUIRE(b.is_zero());
  }
  SECTION("pure number has empty terms") {
    AffineScalar c = 3.5;
    REQUIRE(c.is_constant());
    REQUIRE(c.constant() == 3.5);
  }
  SECTION("closure under addition and scaling") {
    AffineScalar a = 2.0 * x1 + 3.0 * x2 + 1.0;
    double v = a.evaluate([](int id) { return id == 1 ? 10.0 : 100.0; });
    REQUIRE(v == Catch::Approx(321.0));
  }
  SECTION("nonlinear product rejected") {
    REQUIRE_THROWS_AS(x1 * x2, std::invalid_argument);
    REQUIRE_NOTHROW(x1 * AffineScalar(2.0));
  }
}

TEST_CASE("add examples") {
  MatrixPoly s = MatrixPoly::monomial({1, 0});
  SECTION("additive inverse gives the zero polynomial") {
    REQUIRE((s + (-s)).is_zero());
  }
  SECTION("(2s + 3) + s^2") {
    MatrixPoly p = 2.0 * s + MatrixPoly::identity(1, 3.0);
    MatrixPoly q = MatrixPoly::monomial({2, 0});
    MatrixPoly r = p + q;
    REQUIRE(r.coeff({2, 0}, 0, 0).constant() == 1.0);
    REQUIRE(r.coeff({1, 0}, 0, 0).constant() == 2.0);
    REQUIRE(r.coeff({0, 0}, 0, 0).constant() == 3.0);
  }
  SECTION("affine linearity of decision coefficients") {
    MatrixPoly p = MatrixPoly::monomial({1, 0}, AffineScalar::variable(1));
    MatrixPoly q = MatrixPoly::monomial({1, 0}, AffineScalar::variable(2));
    MatrixPoly r = p + q;
    REQUIRE(r.coeff({1, 0}, 0, 0).terms().size() == 2);
  }
  SECTION("dimension mismatch rejected") {
    REQUIRE_THROWS_AS(MatrixPoly(1, 2) + MatrixPoly(2, 1),
                      std::invalid_argument);
  }
}

TEST_CASE("multiply examples") {
  MatrixPoly s = MatrixPoly::monomial({1, 0});
  SECTION("s * s = s^2") {
    MatrixPoly r = multiply(s, s);
    REQUIRE(r.coeff({2, 0}, 0, 0).constant() == 1.0);
    REQUIRE(r.degree() == 2);
  }
  SECTION("identity is neutral") {
    MatrixPoly m = random_poly(2, 2, 2, true);
    MatrixPoly r = multiply(MatrixPoly::identity(2), m);
    REQUIRE((r - m).is_zero());
  }
  SECTION("distributes over decision variables") {
    // (-(s + tau) * s) * x1 with tau = 1  ->  -x1 s^2 - x1 s
    double tau = 1.0;
    MatrixPoly g = -(multiply(s + MatrixPoly::identity(1, tau), s));
    MatrixPoly x1 = MatrixPoly::monomial({0, 0}, AffineScalar::variable(1));
    MatrixPoly r = multiply(g, x1);
    REQUIRE(r.coeff({2, 0}, 0, 0).terms()[0].second == Catch::Approx(-1.0));
    REQUIRE(r.coeff({1, 0}, 0, 0).terms()[0].second == Catch::Approx(-tau));
  }
  SECTION("both operands with decision variables rejected") {
    MatrixPoly x1 = MatrixPoly::monomial({0, 0}, AffineScalar::variable(1));
    REQUIRE_THROWS_AS(multiply(x1, x1), std::invalid_argument);
  }
}

TEST_CASE("differentiate examples") {
  MatrixPoly s2 = MatrixPoly::monomial({2, 0});
  MatrixPoly sth = MatrixPoly::monomial({1, 1});
  REQUIRE(differentiate(s2, Var::s).coeff({1, 0}, 0, 0).constant() == 2.0);
  REQUIRE(differentiate(sth, Var::theta).coeff({1, 0}, 0, 0).constant() == 1.0);
  REQUIRE(differentiate(MatrixPoly::identity(3, 7.0), Var::s).is_zero());
}

TEST_CASE("integrate_definite examples") {
  SECTION("linear") {
    MatrixPoly p = MatrixPoly::monomial({1, 0}) + MatrixPoly::identity(1);
    MatrixPoly r = integrate_definite(p, Var::s, -1.0, 0.0);
    REQUIRE(r.coeff({0, 0}, 0, 0).constant() == Catch::Approx(0.5));
  }
  SECTION("monomial integral over auxiliary variable") {
    // integral_{-1}^{0} (w s)(w theta) dw, with w taking the role of s and
    // the integrand expressed as s^2 * (s theta) after renaming: test the
    // equivalent direct form  integral of  w^2 dw * s*theta = (1/3) s theta.
    MatrixPoly w2 = MatrixPoly::monomial({2, 0});
    MatrixPoly r = integrate_definite(w2, Var::s, -1.0, 0.0);
    REQUIRE(r.coeff({0, 0}, 0, 0).constant() == Catch::Approx(1.0 / 3.0));
  }
  SECTION("decision-variable coefficient preserved") {
    double tau = 2.5;
    MatrixPoly x1 = MatrixPoly::monomial({0, 0}, AffineScalar::variable(1));
    MatrixPoly r = integrate_definite(x1, Var::s, -tau, 0.0);
    REQUIRE(r.coeff({0, 0}, 0, 0).terms()[0].second == Catch::Approx(tau));
  }
}

TEST_CASE("affine_substitute examples") {
  MatrixPoly s = MatrixPoly::monomial({1, 0});
  SECTION("identity substitution") {
    REQUIRE((affine_substitute(s, Var::s, 1.0, 0.0) - s).is_zero());
  }
  SECTION("pure scaling") {
    MatrixPoly r = affine_substitute(s, Var::s, 2.0, 0.0);
    REQUIRE(r.coeff({1, 0}, 0, 0).constant() == 2.0);
  }
  SECTION("binomial expansion") {
    MatrixPoly r = affine_substitute(MatrixPoly::monomial({2, 0}), Var::s, 1.0,
                                     1.0);  // (s+1)^2
    REQUIRE(r.coeff({2, 0}, 0, 0).constant() == 1.0);
    REQUIRE(r.coeff({1, 0}, 0, 0).constant() == 2.0);
    REQUIRE(r.coeff({0, 0}, 0, 0).constant() == 1.0);
  }
  SECTION("alpha = 0 rejected") {
    REQUIRE_THROWS_AS(affine_substitute(s, Var::s, 0.0, 1.0),
                      std::invalid_argument);
  }
}

TEST_CASE("coefficient_equalities examples") {
  SECTION("constant matching") {
    // a = 2s + 3,  b = x0 + x1 s  ->  {x0 = 3, x1 = 2}
    MatrixPoly a = 2.0 * MatrixPoly::monomial({1, 0}) + MatrixPoly::identity(1, 3.0);
    MatrixPoly b = MatrixPoly::monomial({0, 0}, AffineScalar::variable(0)) +
                   MatrixPoly::monomial({1, 0}, AffineScalar::variable(1));
    auto rows = coefficient_equalities(a, b);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      REQUIRE(r.terms.size() == 1);
      double expect = r.terms[0].first == 0 ? 3.0 : 2.0;
      REQUIRE(r.rhs / r.terms[0].second == Catch::Approx(expect));
    }
  }
  SECTION("identical constants prune to empty") {
    MatrixPoly a = random_poly(2, 2, 3, true);
    REQUIRE(coefficient_equalities(a, a).empty());
  }
  SECTION("x1 s = 0 forces x1 = 0") {
    MatrixPoly a = MatrixPoly::monomial({1, 0}, AffineScalar::variable(1));
    auto rows = coefficient_equalities(a, MatrixPoly(1, 1));
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].rhs == 0.0);
    REQUIRE(rows[0].terms.size() == 1);
  }
}

TEST_CASE("evaluate examples") {
  REQUIRE(evaluate(MatrixPoly::monomial({2, 0}), 2.0)(0, 0) == 4.0);
  MatrixPoly p = MatrixPoly::monomial({1, 0}, AffineScalar::variable(1));
  REQUIRE(evaluate(p, 3.0, 0.0, [](int) { return 2.0; })(0, 0) == 6.0);
  REQUIRE_THROWS_AS(evaluate(p, 3.0), std::invalid_argument);
}

TEST_CASE("ring axioms on random instances") {
  // Associativity, distributivity, commutativity of addition: exact to 1e-12
  // at random evaluation points, 100 instances up to degree 4.
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + trial % 3;
    MatrixPoly a = random_poly(n, n, 4, true);
    MatrixPoly b = random_poly(n, n, 4, true);
    MatrixPoly c = random_poly(n, n, 4, true);
    MatrixPoly lhs1 = multiply(multiply(a, b), c);
    MatrixPoly rhs1 = multiply(a, multiply(b, c));
    MatrixPoly lhs2 = multiply(a, b + c);
    MatrixPoly rhs2 = multiply(a, b) + multiply(a, c);
    MatrixPoly lhs3 = a + b, rhs3 = b + a;
    for (int pt = 0; pt < 10; ++pt) {
      double s = urand(), th = urand();
      REQUIRE((evaluate(lhs1, s, th) - evaluate(rhs1, s, th)).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE((evaluate(lhs2, s, th) - evaluate(rhs2, s, th)).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE((evaluate(lhs3, s, th) - evaluate(rhs3, s, th)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("substitution commutes with evaluation") {
  for (int trial = 0; trial < 50; ++trial) {
    MatrixPoly p = random_poly(2, 2, 4, true);
    double alpha = urand(0.2, 2.0), beta = urand(-1.0, 1.0);
    MatrixPoly q = affine_substitute(p, Var::s, alpha, beta);
    double s0 = urand(), th = urand();
    Eigen::MatrixXd lhs = evaluate(q, s0, th);
    Eigen::MatrixXd rhs = evaluate(p, alpha * s0 + beta, th);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fundamental theorem of calculus") {
  for (int trial = 0; trial < 50; ++trial) {
    MatrixPoly p = random_poly(1, 1, 5, false);
    double a = urand(-2.0, -0.1), b = urand(0.1, 2.0);
    MatrixPoly integ = integrate_definite(differentiate(p, Var::s), Var::s, a, b);
    double lhs = integ.coeff({0, 0}, 0, 0).constant();
    double rhs = evaluate(p, b)(0, 0) - evaluate(p, a)(0, 0);
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-10));
  }
}

TEST_CASE("coefficient equalities characterize pointwise equality") {
  for (int trial = 0; trial < 30; ++trial) {
    MatrixPoly a = random_poly(2, 2, 3, true);
    MatrixPoly b = a;
    bool tampered = trial % 2 == 1;
    if (tampered) b.add_to_coeff({1, 1}, 0, 1, 1e-3);
    auto rows = coefficient_equalities(a, b);
    double maxdiff = 0.0;
    for (int pt = 0; pt < 20; ++pt) {
      double s = urand(), th = urand();
      maxdiff = std::max(maxdiff, (evaluate(a, s, th) - evaluate(b, s, th))
                                      .cwiseAbs()
                                      .maxCoeff());
    }
    bool all_satisfied = rows.empty();
    REQUIRE(all_satisfied == (maxdiff < 1e-9));
  }
}

TEST_CASE("transpose is an involution") {
  MatrixPoly p = random_poly(2, 3, 3, true);
  REQUIRE((p.transpose().transpose() - p).is_zero());
}

TEST_CASE("variable manipulation helpers") {
  // R(s, theta) = s + 2 theta; R(0, s) should be 2 s after renaming.
  MatrixPoly R = MatrixPoly::monomial({1, 0}) + 2.0 * MatrixPoly::monomial({0, 1});
  MatrixPoly R0s = rename_var(eval_var(R, Var::s, 0.0), Var::theta, Var::s);
  REQUIRE(R0s.coeff({1, 0}, 0, 0).constant() == 2.0);
  REQUIRE(!R0s.depends_on(Var::theta));
  // swap_vars: p(s, theta) = s  ->  theta
  REQUIRE(swap_vars(MatrixPoly::monomial({1, 0})).coeff({0, 1}, 0, 0).constant() == 1.0);
}

TEST_CASE("interval grid") {
  SECTION("degenerate grids rejected") {
    REQUIRE_THROWS_AS(IntervalGrid({1.0, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(IntervalGrid({-1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(IntervalGrid({2.0, 1.0}), std::invalid_argument);
  }
  SECTION("tiling and compression ratios") {
    IntervalGrid g({1.0, 2.0});
    REQUIRE(g.pieces() == 2);
    REQUIRE(g.left(0) == -1.0);
    REQUIRE(g.right(0) == 0.0);
    REQUIRE(g.left(1) == -2.0);
    REQUIRE(g.right(1) == -1.0);
    REQUIRE(g.a(0) == Catch::Approx(1.0));
    REQUIRE(g.a(1) == Catch::Approx(0.5));
    REQUIRE(g.piece_of(-0.5) == 0);
    REQUIRE(g.piece_of(-1.5) == 1);
  }
}

TEST_CASE("gauss-legendre quadrature sanity") {
  // Exactness on a degree-9 polynomial with a 5-point rule.
  auto f = [](double x) { return 3.0 * std::pow(x, 9) + x * x - 0.5; };
  double exact = 3.0 / 10.0 * (1.0 - 1.0) + 2.0 / 3.0 - 1.0;
  REQUIRE(integrate(f, -1.0, 1.0, 5) == Catch::Approx(exact).margin(1e-13));
  // Convergence on a transcendental integrand.
  REQUIRE(integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 32) ==
          Catch::Approx(std::exp(1.0) - 1.0).margin(1e-14));
}
