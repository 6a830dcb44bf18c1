// SPDX-License-Identifier: MIT

/// \file tests/test_oracle.cpp
/// \brief Tests for the spectral oracle and the time-domain simulator,
/// including the cross-check that the two independent methods agree on
/// stability verdicts across a parameter grid.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "lkstab/benchmarks.hpp"
#include "lkstab/oracle.hpp"

using namespace lkstab;

namespace {

/// Characteristic determinant magnitude, written out longhand so the test
/// does not reuse the library's own residual plumbing.
double char_det_mag(const DelaySystem& sys, std::complex<double> lambda) {
  const int n = sys.n();
  Eigen::MatrixXcd M =
      lambda * Eigen::MatrixXcd::Identity(n, n) - sys.A(0).cast<std::complex<double>>();
  for (int i = 1; i <= sys.K(); ++i)
    M -= std::exp(-lambda * sys.tau(i)) * sys.A(i).cast<std::complex<double>>();
  return std::abs(M.determinant());
}

Eigen::VectorXd ones_history(double) { return Eigen::VectorXd::Ones(1); }

}  // namespace

TEST_CASE("spectral abscissa of a delay-free system is the matrix abscissa") {
  Eigen::MatrixXd A0(1, 1);
  A0 << -1.0;
  const SpectrumResult r = spectral_abscissa(DelaySystem({A0}, {}));
  REQUIRE(r.converged);
  REQUIRE(r.abscissa() == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("pure delayed feedback at tau = pi/2 sits exactly on the boundary") {
  // x'(t) = -x(t - pi/2) has characteristic roots +-i: abscissa zero.
  Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd A1(1, 1);
  A1 << -1.0;
  const SpectrumResult r = spectral_abscissa(DelaySystem({A0, A1}, {M_PI / 2}));
  REQUIRE(r.converged);
  REQUIRE(std::abs(r.abscissa()) < 1e-6);
  // The rightmost pair is +-i.
  REQUIRE(r.roots.size() >= 2);
  REQUIRE(std::abs(r.roots[0].imag()) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("two-delay scalar system is on the boundary at b = 3") {
  // x' = -2x + 3x(t-1) - x(t-2): lambda = 0 is a root (-2 + 3 - 1 = 0).
  const SpectrumResult r = spectral_abscissa(benchmark_scalar_2delay(3.0));
  REQUIRE(r.converged);
  REQUIRE(std::abs(r.abscissa()) < 1e-5);
}

TEST_CASE("reported roots verify against the characteristic function") {
  for (const DelaySystem& sys :
       {benchmark_scalar_1d(1.3), benchmark_scalar_2delay(2.5),
        benchmark_oscillator_2delay(1.3)}) {
    const SpectrumResult r = spectral_abscissa(sys);
    REQUIRE_FALSE(r.roots.empty());
    for (std::size_t k = 0; k < r.roots.size(); ++k) {
      // Scale reference: term magnitudes at this root.
      double scale = std::abs(r.roots[k]) + sys.A(0).norm();
      for (int i = 1; i <= sys.K(); ++i)
        scale += sys.A(i).norm() * std::exp(-r.roots[k].real() * sys.tau(i));
      REQUIRE(char_det_mag(sys, r.roots[k]) <
              1e-6 * std::pow(scale, sys.n()));
      if (k > 0) REQUIRE(r.roots[k - 1].real() >= r.roots[k].real());
    }
  }
}

TEST_CASE("abscissa is stable under mesh refinement") {
  for (const DelaySystem& sys :
       {benchmark_scalar_1d(1.0), benchmark_scalar_2delay(2.0),
        benchmark_oscillator_2d(1.2)}) {
    const SpectrumResult coarse = spectral_abscissa(sys, 24);
    const SpectrumResult fine = spectral_abscissa(sys, 40);
    REQUIRE(coarse.converged);
    REQUIRE(fine.converged);
    REQUIRE(std::abs(coarse.abscissa() - fine.abscissa()) < 1e-6);
  }
}

TEST_CASE("simulated scalar system decays when stable, grows when not") {
  const Trajectory stable = simulate(benchmark_scalar_1d(1.0), ones_history,
                                     40.0, 0.05);
  REQUIRE(stable.decay_rate < 0.0);
  const Trajectory unstable = simulate(benchmark_scalar_1d(2.0), ones_history,
                                       40.0, 0.05);
  REQUIRE(unstable.decay_rate > 0.0);
  // The tail regression should land near the true abscissa.
  const double abscissa = spectral_abscissa(benchmark_scalar_1d(1.0)).abscissa();
  REQUIRE(stable.decay_rate == Catch::Approx(abscissa).margin(5e-2));
}

TEST_CASE("zero history stays exactly zero") {
  const Trajectory tr = simulate(
      benchmark_scalar_1d(1.0), [](double) { return Eigen::VectorXd::Zero(1); },
      10.0, 0.05);
  for (const Eigen::VectorXd& x : tr.x) REQUIRE(x.norm() == 0.0);
  REQUIRE(tr.decay_rate == 0.0);
}

TEST_CASE("simulator rejects steps too coarse for the delay grid") {
  REQUIRE_THROWS_AS(
      simulate(benchmark_scalar_1d(1.0), ones_history, 10.0, 0.3),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      simulate(benchmark_scalar_1d(1.0), ones_history, -1.0, 0.05),
      std::invalid_argument);
}

TEST_CASE("oracle and simulator agree on stability across a grid") {
  std::vector<DelaySystem> grid;
  for (double tau : {0.5, 1.0, 1.3, 1.6, 1.9})
    grid.push_back(benchmark_scalar_1d(tau));
  for (double b : {1.0, 2.0, 2.9, 3.2})
    grid.push_back(benchmark_scalar_2delay(b));
  for (double tau : {1.0, 1.3, 1.5})
    grid.push_back(benchmark_oscillator_2delay(tau));
  REQUIRE(grid.size() == 12);
  for (const DelaySystem& sys : grid) {
    const SpectrumResult r = spectral_abscissa(sys);
    REQUIRE(r.converged);
    const Trajectory tr = simulate(
        sys, [&](double) { return Eigen::VectorXd::Ones(sys.n()); }, 60.0,
        0.02);
    CAPTURE(r.abscissa(), tr.decay_rate);
    REQUIRE((r.abscissa() < 0.0) == (tr.decay_rate < 0.0));
  }
}
