#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <utility>
#include <numbers>
#include <stdexcept>

namespace cip {

/// Nodes and weights of a quadrature rule on an interval.
template <typename Scalar>
struct QuadratureRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with `points` nodes on [-1, 1], found by Newton
/// iteration on the three-term Legendre recurrence.
template <typename Scalar>
QuadratureRule<Scalar> gauss_legendre(int points) {
  if (points < 1) throw std::invalid_argument("gauss_legendre: points must be >= 1");
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  // (P_n, P_n') at x from the recurrence.
  const auto legendre = [points](Scalar x) {
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= points; ++k) {
      const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return std::pair<Scalar, Scalar>{p1, points * (x * p1 - p0) / (x * x - 1)};
  };
  for (int i = 0; i < (points + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(points) + Scalar(0.5)));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const Scalar dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    const Scalar dp = legendre(x).second;
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes(i) = -x;
    rule.nodes(points - 1 - i) = x;
    rule.weights(i) = w;
    rule.weights(points - 1 - i) = w;
  }
  if (points % 2 == 1) rule.nodes(points / 2) = 0;
  return rule;
}

/// Composite Gauss-Legendre rule over `panels` uniform subintervals of [a, b].
template <typename Scalar>
QuadratureRule<Scalar> composite_gauss_legendre(Scalar a, Scalar b, int points_per_panel,
                                                int panels) {
  if (!(b > a)) throw std::invalid_argument("composite_gauss_legendre: empty interval");
  if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: panels must be >= 1");
  const auto ref = gauss_legendre<Scalar>(points_per_panel);
  const Scalar h = (b - a) / panels;
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(Eigen::Index(points_per_panel) * panels);
  rule.weights.resize(rule.nodes.size());
  for (int p = 0; p < panels; ++p) {
    const Scalar left = a + h * p;
    for (int q = 0; q < points_per_panel; ++q) {
      const Eigen::Index k = Eigen::Index(p) * points_per_panel + q;
      rule.nodes(k) = left + h * (ref.nodes(q) + 1) / 2;
      rule.weights(k) = h * ref.weights(q) / 2;
    }
  }
  return rule;
}

}  // namespace cip
