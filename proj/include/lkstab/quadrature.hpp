// SPDX-License-Identifier: MIT

/// \file lkstab/quadrature.hpp
/// \brief Gauss-Legendre quadrature rules, used as an independent numerical
/// oracle against the exact symbolic integration paths.

#pragma once

#include <cmath>
#include <vector>

namespace lkstab {

struct QuadratureRule {
  std::vector<double> nodes;    ///< on [-1, 1]
  std::vector<double> weights;  ///< sum to 2
};

/// n-point Gauss-Legendre rule on [-1, 1]; nodes are the Legendre roots
/// computed by Newton iteration from the Chebyshev initial guess. Exact for
/// polynomials of degree 2n - 1, accurate to machine precision.
inline const QuadratureRule& gauss_legendre(int n = 32) {
  static thread_local std::vector<QuadratureRule> cache;
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  QuadratureRule& rule = cache[n];
  if (!rule.nodes.empty()) return rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
  return rule;
}

/// Integrates \p f over [a, b] with an n-point Gauss-Legendre rule.
template <class Fn>
double integrate(Fn&& f, double a, double b, int n = 32) {
  const QuadratureRule& r = gauss_legendre(n);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += r.weights[i] * f(mid + half * r.nodes[i]);
  return half * acc;
}

}  // namespace lkstab
