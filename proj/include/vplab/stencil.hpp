#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace vplab::stencil {

/// Finite-difference weights on arbitrary nodes (Fornberg 1988).
/// Returns w[k][j]: weight of node j for the k-th derivative at x0, k <= max_order.
/// Order 0 gives Lagrange interpolation weights.
inline std::vector<std::vector<double>> fornberg(double x0, std::span<const double> x,
                                                 int max_order) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

/// Weights w_j such that sum_j w_j f(x_j) = integral of the interpolating polynomial
/// through (x_j, f(x_j)) over [a, b].
inline std::vector<double> integration_weights(std::span<const double> x, double a, double b) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    // coefficients of l_j(x) in the monomial basis
    std::vector<double> poly{1.0};
    double denom = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t m = 0; m < poly.size(); ++m) {
        next[m + 1] += poly[m];
        next[m] -= x[k] * poly[m];
      }
      poly = std::move(next);
      denom *= x[j] - x[k];
    }
    double pa = 0.0, pb = 0.0, pow_a = a, pow_b = b;
    for (std::size_t m = 0; m < poly.size(); ++m) {
      pa += poly[m] * pow_a / static_cast<double>(m + 1);
      pb += poly[m] * pow_b / static_cast<double>(m + 1);
      pow_a *= a;
      pow_b *= b;
    }
    w[j] = (pb - pa) / denom;
  }
  return w;
}

}  // namespace vplab::stencil
