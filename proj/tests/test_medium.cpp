#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "fracrt/medium.hpp"
#include "fracrt/scattering.hpp"

using namespace fracrt;
using boost::math::quadrature::gauss_kronrod;

TEST(Cutoff, CapRadius) {
  const auto c = CutoffParams::from_eps(0.1);
  EXPECT_NEAR(c.r_prime_eps, std::sqrt(1.0 - 0.81) / 1.9, 1e-15);
  EXPECT_THROW(CutoffParams::from_eps(0.0), ConfigError);
  EXPECT_THROW(CutoffParams::from_eps(1.0), ConfigError);
}

TEST(Kernel, RhoValuesAndDomain) {
  const auto a = Amplitude::constant(0.002);
  EXPECT_NEAR(rho(a, 1.0, 0.0), 0.002, 1e-18);
  EXPECT_NEAR(rho(a, 1.0, 0.75), 0.002 * std::pow(0.25, -1.5), 1e-15);
  EXPECT_THROW(rho(a, 1.0, 1.0), DomainError);
  EXPECT_THROW(rho(a, 1.0, -1.5), DomainError);
}

TEST(Kernel, JumpIntensityClosedFormForConstantAmplitude) {
  for (double alpha : {0.3, 1.0, 5.0 / 3.0, 1.9}) {
    for (double eps : {0.001, 0.01, 0.1}) {
      const auto cut = CutoffParams::from_eps(eps);
      const double a0 = 0.002;
      const double exact = 2.0 * std::numbers::pi * a0 * (2.0 / alpha) *
                           (std::pow(eps, -0.5 * alpha) - std::pow(2.0, -0.5 * alpha)) * std::pow(2.0, -1.0 - 0.5 * alpha);
      EXPECT_NEAR(jump_intensity(alpha, 1.0, Amplitude::constant(a0), cut), exact, 1e-12 * exact);
    }
  }
}

TEST(Kernel, JumpIntensityMatchesDirectIntegralOfRho) {
  // Lambda_eps = 2 pi lambda int_{-1}^{1-eps} rho(s) ds in the (1 - s)^{-1-alpha/2} normalization
  // scaled by 2^{-1-alpha/2}; check the Gaussian amplitude through an independent tanh-sinh rule.
  const auto a = Amplitude::gaussian(0.002, 0.8);
  const double alpha = 5.0 / 3.0;
  const double eps = 0.01;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double direct = ts.integrate([&](double s) { return rho(a, alpha, s); }, -1.0, 1.0 - eps);
  const double expected = 2.0 * std::numbers::pi * std::pow(2.0, -1.0 - 0.5 * alpha) * direct;
  const double got = jump_intensity(alpha, 1.0, a, CutoffParams::from_eps(eps));
  EXPECT_NEAR(got, expected, 1e-9 * expected);
}

TEST(Kernel, SigmaFormula) {
  const auto cut = CutoffParams::from_eps(0.1);
  const double r = cut.r_prime_eps;
  EXPECT_NEAR(sigma_eps_sq(1.0, 1.0, 0.002, cut), 0.002 * std::numbers::pi * r, 1e-18);
  EXPECT_EQ(sigma_eps_sq(1.0, 0.0, 0.002, cut), 0.0);
}

TEST(Kernel, ThinningBoundDominatesIntensity) {
  for (double eps : {0.001, 0.01, 0.1}) {
    const auto cut = CutoffParams::from_eps(eps);
    for (auto medium : {presets::constant(1.0, 1.0, 0.002), presets::sphere_defect(0.3, 0.002),
                        presets::nk_turbulence()}) {
      const double bar = bar_lambda(medium, cut);
      for (double z : {-10.0, 0.0, 1.0, 5.0, 20.0, 39.0}) {
        const Vec3 x{0.5, -0.3, z};
        const double p = acceptance_prob(medium, x, cut);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        EXPECT_LE(jump_intensity(medium, x, cut), bar);
      }
    }
  }
}

TEST(Kernel, HgKernelIsNormalized) {
  for (double g : {0.0, 0.3, 0.9, -0.5}) {
    const double total =
        2.0 * std::numbers::pi *
        gauss_kronrod<double, 61>::integrate([&](double s) { return henyey_greenstein(g, s); }, -1.0, 1.0, 20, 1e-13);
    EXPECT_NEAR(total, 1.0, 1e-10) << g;
  }
}

TEST(Medium, PresetRegions) {
  const auto slab = presets::slab(1.0, 0.002);
  EXPECT_EQ(slab.lambda({0, 0, -6}), 0.0);
  EXPECT_EQ(slab.lambda({0, 0, 10}), 1.0);
  EXPECT_EQ(slab.lambda({0, 0, 40}), 0.0);

  const auto sphere = presets::sphere_defect(0.3, 0.002);
  EXPECT_EQ(sphere.alpha({0, 0, 1}), 0.3);
  EXPECT_EQ(sphere.alpha({0, 0, 10}), 1.0);

  const auto nk = presets::nk_turbulence();
  EXPECT_DOUBLE_EQ(nk.alpha({0, 0, 1}), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(nk.alpha({0, 0, 2}), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(nk.alpha({0, 0, 5}), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(nk.alpha({0, 0, 30}), 1.9);
  EXPECT_NEAR(nk.amplitude()(0.8), 0.002 * std::exp(-0.5), 1e-15);
}

TEST(Medium, ScatteringModelSwitchesCorrectionOnlyInSigma) {
  const auto medium = presets::constant(1.0, 1.0, 0.002);
  const ScatteringModel on(medium, CutoffParams::from_eps(0.1), true);
  const ScatteringModel off(medium, CutoffParams::from_eps(0.1), false);
  const Vec3 x{0, 0, 0};
  EXPECT_GT(on.sigma_sq(x), 0.0);
  EXPECT_EQ(off.sigma_sq(x), 0.0);
  EXPECT_EQ(on.intensity(x), off.intensity(x));
  EXPECT_EQ(on.bar_lambda(), off.bar_lambda());
}
