#pragma once

// One-dimensional polynomial helpers: Legendre evaluation, Gauss-Legendre
// and Gauss-Lobatto point sets, and nodal Lagrange bases.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "homog/types.hpp"

namespace homog::poly {

/// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
inline std::pair<double, double> legendre(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  // derivative from P_n and P_{n-1}; valid away from x = +-1
  double dp;
  if (std::abs(std::abs(x) - 1.0) < 1e-15) {
    dp = 0.5 * n * (n + 1.0) * std::pow(x, n + 1);
  } else {
    dp = n * (x * p1 - p0) / (x * x - 1.0);
  }
  return {p1, dp};
}

struct PointSet {
  std::vector<double> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], exact to degree 2n - 1.
inline PointSet gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  PointSet rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

/// Maps a Gauss-Legendre rule to [a, b].
inline PointSet gauss_legendre(int n, double a, double b) {
  PointSet rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    rule.points[i] = mid + half * rule.points[i];
    rule.weights[i] *= half;
  }
  return rule;
}

/// p + 1 Gauss-Lobatto points on [-1, 1] in increasing order.
inline std::vector<double> gauss_lobatto_points(int p) {
  if (p < 1) throw std::invalid_argument("gauss_lobatto_points: p must be >= 1");
  std::vector<double> x(p + 1);
  for (int j = 0; j <= p; ++j) x[j] = -std::cos(pi * j / p);
  if (p == 1) return x;
  // Newton on (x P_p - P_{p-1}) with the Chebyshev-Gauss-Lobatto start
  for (int j = 1; j < p; ++j) {
    double xi = x[j];
    for (int it = 0; it < 100; ++it) {
      const double pp = legendre(p, xi).first;
      const double pm = legendre(p - 1, xi).first;
      const double dx = (xi * pp - pm) / ((p + 1) * pp);
      xi -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    x[j] = xi;
  }
  return x;
}

/// Nodal Lagrange basis on an arbitrary set of distinct nodes.
class LagrangeBasis {
 public:
  LagrangeBasis() = default;
  explicit LagrangeBasis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    if (n == 0) throw std::invalid_argument("LagrangeBasis: empty node set");
    denom_.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) {
          const double d = nodes_[i] - nodes_[j];
          if (d == 0.0) throw std::invalid_argument("LagrangeBasis: repeated node");
          denom_[i] *= d;
        }
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }

  double value(std::size_t i, double x) const {
    double v = 1.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j)
      if (j != i) v *= x - nodes_[j];
    return v / denom_[i];
  }

  double derivative(std::size_t i, double x) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (k == i) continue;
      double prod = 1.0;
      for (std::size_t j = 0; j < nodes_.size(); ++j)
        if (j != i && j != k) prod *= x - nodes_[j];
      sum += prod;
    }
    return sum / denom_[i];
  }

  void values(double x, std::vector<double>& out) const {
    out.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) out[i] = value(i, x);
  }

  void derivatives(double x, std::vector<double>& out) const {
    out.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) out[i] = derivative(i, x);
  }

  /// D(k, j) = l_j'(nodes[k]).
  Eigen::MatrixXd differentiation_matrix() const {
    const auto n = static_cast<Eigen::Index>(nodes_.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index j = 0; j < n; ++j) d(k, j) = derivative(j, nodes_[k]);
    return d;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> denom_;
};

}  // namespace homog::poly
