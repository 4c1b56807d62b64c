#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracrt/errors.hpp"

namespace fracrt::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Returns (P_n(x), P_{n-1}(x)) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(std::size_t n, double x) {
  double prev = 1.0;
  double cur = x;
  if (n == 0) return {1.0, 0.0};
  for (std::size_t k = 2; k <= n; ++k) {
    const double dk = static_cast<double>(k);
    const double next = ((2.0 * dk - 1.0) * x * cur - (dk - 1.0) * prev) / dk;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

}  // namespace detail

/// Gauss-Legendre rule with n points on [-1, 1] (Newton iteration on P_n).
inline Rule gauss_legendre(std::size_t n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double dn = static_cast<double>(n);
  auto derivative = [&](double x) {
    const auto [p, q] = detail::legendre_pair(n, x);
    return std::pair{p, dn * (x * p - q) / (x * x - 1.0)};
  };
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = derivative(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = derivative(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

inline const Rule& gauss_legendre_64() {
  static const Rule rule = gauss_legendre(64);
  return rule;
}

/// Fixed-order rule mapped to [a, b].
template <class F>
double fixed(const Rule& rule, F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

namespace detail {

template <class F>
double adaptive_step(F& f, double a, double b, double whole, double tol, double floor, int depth, int max_depth) {
  const double mid = 0.5 * (a + b);
  const double left = fixed(gauss_legendre_64(), f, a, mid);
  const double right = fixed(gauss_legendre_64(), f, mid, b);
  const double sum = left + right;
  // floor is roundoff relative to the whole integral; halving tol alone would chase noise.
  if (std::abs(sum - whole) <= std::max(tol, floor)) return sum;
  if (depth >= max_depth) {
    throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "], estimate difference " + std::to_string(std::abs(sum - whole)));
  }
  return adaptive_step(f, a, mid, left, 0.5 * tol, floor, depth + 1, max_depth) +
         adaptive_step(f, mid, b, right, 0.5 * tol, floor, depth + 1, max_depth);
}

}  // namespace detail

/// 64-point Gauss-Legendre with adaptive bisection until halves agree with the parent estimate.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13, double abs_tol = 1e-300, int max_depth = 40) {
  if (a == b) return 0.0;
  const double whole = fixed(gauss_legendre_64(), f, a, b);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(whole);
  return detail::adaptive_step(f, a, b, whole, tol, floor, 0, max_depth);
}

/// Roots of the Jacobi polynomial P_m^{(a,b)} by the Golub-Welsch eigenvalue method, ascending.
inline std::vector<double> jacobi_roots(std::size_t m, double a, double b) {
  if (m == 0) return {};
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  const double ab = a + b;
  for (std::size_t k = 0; k < m; ++k) {
    const double dk = static_cast<double>(k);
    const double diag =
        k == 0 ? (b - a) / (ab + 2.0) : (b * b - a * a) / ((2.0 * dk + ab) * (2.0 * dk + ab + 2.0));
    J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = diag;
    if (k + 1 < m) {
      const double j = dk + 1.0;
      const double s = 2.0 * j + ab;
      const double off = std::sqrt(4.0 * j * (j + a) * (j + b) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0)));
      J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k + 1)) = off;
      J(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k)) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J, Eigen::EigenvaluesOnly);
  std::vector<double> roots(m);
  for (std::size_t k = 0; k < m; ++k) roots[k] = solver.eigenvalues()(static_cast<Eigen::Index>(k));
  return roots;
}

/// Gauss-Lobatto-Jacobi abscissae on [-1, 1] for weight (1-x)^a (1+x)^b: both endpoints plus the
/// n-2 roots of P_{n-2}^{(a+1, b+1)}.
inline std::vector<double> gauss_lobatto_jacobi_nodes(std::size_t n, double a, double b) {
  if (n < 2) throw ConfigError("Gauss-Lobatto-Jacobi rule needs at least 2 nodes");
  std::vector<double> nodes;
  nodes.reserve(n);
  nodes.push_back(-1.0);
  for (double r : jacobi_roots(n - 2, a + 1.0, b + 1.0)) nodes.push_back(r);
  nodes.push_back(1.0);
  return nodes;
}

}  // namespace fracrt::quad
