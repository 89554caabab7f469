#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kplate/error.hpp"

namespace kplate {

template <typename Scalar = double>
struct GaussRule {
  std::vector<Scalar> points;   // on [-1, 1]
  std::vector<Scalar> weights;

  int size() const { return static_cast<int>(points.size()); }

  /// Points and weights mapped to [a, b].
  void map_to(Scalar a, Scalar b, std::vector<Scalar>& x, std::vector<Scalar>& w) const {
    const Scalar half = (b - a) / 2, mid = (a + b) / 2;
    x.resize(points.size());
    w.resize(points.size());
    for (std::size_t q = 0; q < points.size(); ++q) {
      x[q] = mid + half * points[q];
      w[q] = half * weights[q];
    }
  }
};

/// n-point Gauss-Legendre rule, Newton iteration on P_n from the Chebyshev guess.
template <typename Scalar = double>
GaussRule<Scalar> gauss_legendre(int n) {
  ensure(n >= 1, ErrorKind::Parameter, "gauss_legendre: need at least one point");
  GaussRule<Scalar> rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    Scalar z = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const Scalar pk = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1;
      dp = n * (z * p1 - p0) / (z * z - 1);
      const Scalar dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 8 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    // final derivative at converged node
    Scalar p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const Scalar pk = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = (n == 1) ? Scalar(1) : n * (z * p1 - p0) / (z * z - 1);
    const Scalar w = 2 / ((1 - z * z) * dp * dp);
    rule.points[i] = -z;
    rule.points[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0;
  return rule;
}

}  // namespace kplate
