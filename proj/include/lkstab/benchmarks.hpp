// SPDX-License-Identifier: MIT

/// \file lkstab/benchmarks.hpp
/// \brief Standard time-delay benchmark systems from the stability
/// literature, parameterized the way their published margin searches are.
///
/// Each factory returns the system at one parameter value; the margin
/// drivers sweep the parameter. The known margins (used as test oracles
/// elsewhere) are:
///   - scalar one-delay x' = -x(t-tau): stable iff tau < pi/2;
///   - damped oscillator with delayed restoring force: stable for
///     tau in about (0.10017, 1.7178);
///   - scalar two-delay x' = -2x + b x(t-1) - x(t-2): stable up to b = 3;
///   - oscillator with two delayed forces at tau/2 and tau: stable up to
///     tau of about 1.372.

#pragma once

#include <Eigen/Dense>

#include "lkstab/delay_system.hpp"

namespace lkstab {

/// x'(t) = -x(t - tau).
inline DelaySystem benchmark_scalar_1d(double tau) {
  Eigen::MatrixXd a0(1, 1), a1(1, 1);
  a0 << 0.0;
  a1 << -1.0;
  return DelaySystem({a0, a1}, {tau});
}

/// Lightly anti-damped oscillator with a delayed restoring force:
/// x'(t) = [[0,1],[-2,0.1]] x(t) + [[0,0],[1,0]] x(t - tau).
inline DelaySystem benchmark_oscillator_2d(double tau) {
  Eigen::MatrixXd a0(2, 2), a1(2, 2);
  a0 << 0.0, 1.0, -2.0, 0.1;
  a1 << 0.0, 0.0, 1.0, 0.0;
  return DelaySystem({a0, a1}, {tau});
}

/// Scalar two-delay system x'(t) = -2 x(t) + b x(t-1) - x(t-2) with the
/// delay pair fixed at (1, 2); the searched parameter is b.
inline DelaySystem benchmark_scalar_2delay(double b) {
  Eigen::MatrixXd a0(1, 1), a1(1, 1), a2(1, 1);
  a0 << -2.0;
  a1 << b;
  a2 << -1.0;
  return DelaySystem({a0, a1, a2}, {1.0, 2.0});
}

/// Oscillator with two delayed forces at tau/2 and tau:
/// x'(t) = [[0,1],[-1,0.1]] x(t) + [[0,0],[-1,0]] x(t - tau/2)
///         + [[0,0],[1,0]] x(t - tau).
inline DelaySystem benchmark_oscillator_2delay(double tau) {
  Eigen::MatrixXd a0(2, 2), a1(2, 2), a2(2, 2);
  a0 << 0.0, 1.0, -1.0, 0.1;
  a1 << 0.0, 0.0, -1.0, 0.0;
  a2 << 0.0, 0.0, 1.0, 0.0;
  return DelaySystem({a0, a1, a2}, {0.5 * tau, tau});
}

}  // namespace lkstab
