#include <cmath>
#include <numbers>
#include <set>

#include <boost/math/special_functions/jacobi.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "fracrt/quadrature.hpp"
#include "fracrt/rng.hpp"

using namespace fracrt;

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  const auto rule = quad::gauss_legendre(8);
  // Degree 15 is the highest exactly integrated degree for 8 nodes.
  const double got = quad::fixed(rule, [](double x) { return std::pow(x, 14) + std::pow(x, 15); }, -1.0, 1.0);
  EXPECT_NEAR(got, 2.0 / 15.0, 1e-15);
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  EXPECT_NEAR(wsum, 2.0, 1e-15);
}

TEST(Quadrature, AdaptiveMatchesKronrod) {
  auto f = [](double x) { return std::sqrt(x) * std::exp(-x); };
  const double ours = quad::integrate(f, 0.0, 5.0, 1e-12);
  const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 5.0, 15, 1e-14);
  EXPECT_NEAR(ours, ref, 1e-11);
}

TEST(Quadrature, AdaptiveSurvivesRoundoffNoise) {
  // 1 - cos x for tiny x suffers cancellation; must converge rather than throw.
  auto f = [](double x) { return (1.0 - std::cos(x)) / (x * x + 1e-300); };
  EXPECT_NO_THROW(quad::integrate(f, 0.0, 1e-3, 1e-13));
}

TEST(Quadrature, JacobiRootsAreZeros) {
  for (auto [a, b] : {std::pair{0.0, 0.0}, std::pair{1.0, 0.5}, std::pair{0.5, -0.5}}) {
    const auto roots = quad::jacobi_roots(9, a, b);
    ASSERT_EQ(roots.size(), 9u);
    for (double r : roots) EXPECT_NEAR(boost::math::jacobi(9u, a, b, r), 0.0, 1e-10) << a << " " << b;
    for (std::size_t i = 1; i < roots.size(); ++i) EXPECT_LT(roots[i - 1], roots[i]);
  }
}

TEST(Quadrature, LobattoNodesIncludeEndpoints) {
  const auto n = quad::gauss_lobatto_jacobi_nodes(10, 0.0, -0.5);
  ASSERT_EQ(n.size(), 10u);
  EXPECT_EQ(n.front(), -1.0);
  EXPECT_EQ(n.back(), 1.0);
  EXPECT_THROW(quad::gauss_lobatto_jacobi_nodes(1, 0.0, 0.0), ConfigError);
}

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswers) {
  using B = Philox4x32::Block;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::bijection(B{0, 0, 0, 0}, K{0, 0}), (B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
            (B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
            (B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream c(42, 8);
  RngStream d(43, 7);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
  }
}

TEST(Rng, MomentsOfVariates) {
  RngStream r(1, 0);
  const int n = 400000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double g = r.normal();
    sn += g;
    sn2 += g * g;
    se += r.exponential(2.0);
  }
  EXPECT_NEAR(su / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sn / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(se / n, 0.5, 4.0 * 0.5 / std::sqrt(n));
}

TEST(Rng, OpenZeroUniformNeverZero) {
  RngStream r(5, 5);
  for (int i = 0; i < 100000; ++i) ASSERT_GT(r.uniform_open_zero(), 0.0);
}
