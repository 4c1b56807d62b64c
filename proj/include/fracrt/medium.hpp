#pragma once

// Scattering medium (alpha, lambda, a), the singular kernel rho, the small-jump diffusion
// coefficient, the large-jump intensity with its global bound, and the Henyey-Greenstein /
// Gegenbauer comparator kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fracrt/errors.hpp"
#include "fracrt/quadrature.hpp"
#include "fracrt/vec3.hpp"

namespace fracrt {

/// Smooth amplitude a(r) on chord lengths r in [0, 2].
class Amplitude {
 public:
  using Function = std::function<double(double)>;

  Amplitude(std::string name, Function fn, double sup, bool is_constant)
      : name_(std::move(name)), fn_(std::move(fn)), a0_(fn_(0.0)), sup_(sup), constant_(is_constant) {
    if (!(a0_ > 0.0)) throw ConfigError("amplitude a(0) must be positive");
    if (!(sup_ >= a0_)) throw ConfigError("declared sup a is below a(0)");
    for (int i = 0; i <= 200; ++i) {
      const double r = 2.0 * i / 200.0;
      const double v = fn_(r);
      if (!(v > 0.0) || v > sup_ || (constant_ && v != a0_)) {
        throw ConfigError("amplitude a(" + std::to_string(r) + ") = " + std::to_string(v) +
                          " violates the declared range (0, a_sup]");
      }
    }
  }

  static Amplitude constant(double a0) {
    return Amplitude("constant(" + format(a0) + ")", [a0](double) { return a0; }, a0, true);
  }

  /// a(r) = a0 exp(-r^2 / (2 length^2)).
  static Amplitude gaussian(double a0, double length) {
    const double inv = 1.0 / (2.0 * length * length);
    return Amplitude("gaussian(" + format(a0) + "," + format(length) + ")",
                     [a0, inv](double r) { return a0 * std::exp(-r * r * inv); }, a0, false);
  }

  double operator()(double r) const { return constant_ ? a0_ : fn_(r); }
  double at_zero() const { return a0_; }
  double sup() const { return sup_; }
  bool is_constant() const { return constant_; }
  const std::string& name() const { return name_; }

 private:
  static std::string format(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  std::string name_;
  Function fn_;
  double a0_;
  double sup_;
  bool constant_;
};

/// Declared (not sampled) bounds on the medium coefficients.
struct MediumBounds {
  double alpha_min = 1.0;
  double alpha_max = 1.0;
  double lambda_sup = 1.0;
};

/// Constant coefficients of one spatial region.
struct Region {
  double alpha = 1.0;
  double lambda = 1.0;
};

using ScalarField = std::function<double(const Vec3&)>;

/// Medium coefficients alpha(x), lambda(x) and amplitude a(r).
///
/// Piecewise-constant media carry a region locator so kernel-derived quantities can be tabulated
/// once per region; generic media evaluate the coefficient fields directly.
class MediumModel {
 public:
  using Locator = std::function<std::size_t(const Vec3&)>;

  MediumModel(std::vector<Region> regions, Locator locate, Amplitude amplitude, MediumBounds bounds)
      : regions_(std::move(regions)), locate_(std::move(locate)), amplitude_(std::move(amplitude)), bounds_(bounds) {
    check_bounds();
    if (regions_.empty()) throw ConfigError("piecewise medium needs at least one region");
    for (std::size_t i = 0; i < regions_.size(); ++i) check_values(regions_[i].alpha, regions_[i].lambda, i);
  }

  MediumModel(ScalarField alpha, ScalarField lambda, Amplitude amplitude, MediumBounds bounds)
      : alpha_field_(std::move(alpha)),
        lambda_field_(std::move(lambda)),
        amplitude_(std::move(amplitude)),
        bounds_(bounds) {
    check_bounds();
  }

  static MediumModel homogeneous(double alpha, double lambda, Amplitude amplitude) {
    return {std::vector<Region>{{alpha, lambda}}, [](const Vec3&) { return std::size_t{0}; }, std::move(amplitude),
            MediumBounds{alpha, alpha, lambda}};
  }

  bool piecewise_constant() const { return !regions_.empty(); }
  std::span<const Region> regions() const { return regions_; }
  std::optional<std::size_t> region_of(const Vec3& x) const {
    if (!piecewise_constant()) return std::nullopt;
    return locate_(x);
  }

  double alpha(const Vec3& x) const { return piecewise_constant() ? regions_[locate_(x)].alpha : alpha_field_(x); }
  double lambda(const Vec3& x) const { return piecewise_constant() ? regions_[locate_(x)].lambda : lambda_field_(x); }

  const Amplitude& amplitude() const { return amplitude_; }
  const MediumBounds& bounds() const { return bounds_; }

  /// Checks the declared bounds against the coefficients at the given points.
  void validate_on(std::span<const Vec3> points) const {
    for (std::size_t i = 0; i < points.size(); ++i) check_values(alpha(points[i]), lambda(points[i]), i);
  }

 private:
  void check_bounds() const {
    const auto& b = bounds_;
    if (!(0.0 <= b.alpha_min && b.alpha_min <= b.alpha_max && b.alpha_max < 2.0)) {
      throw ConfigError("declared alpha bounds must satisfy 0 <= alpha_min <= alpha_max < 2");
    }
    if (!(b.lambda_sup >= 0.0)) throw ConfigError("declared lambda_sup must be nonnegative");
  }

  void check_values(double a, double l, std::size_t where) const {
    if (!(a >= bounds_.alpha_min && a <= bounds_.alpha_max)) {
      throw ConfigError("alpha = " + std::to_string(a) + " at sample " + std::to_string(where) +
                        " outside declared [" + std::to_string(bounds_.alpha_min) + ", " +
                        std::to_string(bounds_.alpha_max) + "]");
    }
    if (!(l >= 0.0 && l <= bounds_.lambda_sup)) {
      throw ConfigError("lambda = " + std::to_string(l) + " at sample " + std::to_string(where) +
                        " outside declared [0, " + std::to_string(bounds_.lambda_sup) + "]");
    }
  }

  std::vector<Region> regions_;
  Locator locate_;
  ScalarField alpha_field_;
  ScalarField lambda_field_;
  Amplitude amplitude_;
  MediumBounds bounds_;
};

/// Small-jump cutoff eps and the associated cap radius r'_eps = sqrt(1 - (1-eps)^2) / (2 - eps).
struct CutoffParams {
  double eps;
  double r_prime_eps;

  static CutoffParams from_eps(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("cutoff eps must lie in (0, 1), got " + std::to_string(eps));
    const double one_minus = 1.0 - eps;
    return {eps, std::sqrt(1.0 - one_minus * one_minus) / (2.0 - eps)};
  }
};

/// rho(x, s) = a(sqrt(2(1-s))) / (1-s)^{1 + alpha(x)/2}.
inline double rho(const Amplitude& a, double alpha, double s) {
  if (!(s >= -1.0 && s < 1.0)) throw DomainError("rho: cosine must lie in [-1, 1), got " + std::to_string(s));
  const double v = 1.0 - s;
  return a(std::sqrt(2.0 * v)) * std::pow(v, -1.0 - 0.5 * alpha);
}

inline double rho(const MediumModel& medium, const Vec3& x, double s) {
  return rho(medium.amplitude(), medium.alpha(x), s);
}

inline double sigma_eps_sq(double alpha, double lambda, double a0, const CutoffParams& cut) {
  return std::pow(2.0, 1.0 - alpha) * a0 * std::numbers::pi * lambda * std::pow(cut.r_prime_eps, 2.0 - alpha) /
         (2.0 - alpha);
}

/// Diffusion coefficient replacing the truncated small jumps.
inline double sigma_eps_sq(const MediumModel& medium, const Vec3& x, const CutoffParams& cut) {
  return sigma_eps_sq(medium.alpha(x), medium.lambda(x), medium.amplitude().at_zero(), cut);
}

/// Integral of rho(s) over s in [-1, 1-eps], i.e. of a(sqrt(2v)) v^{-1-alpha/2} over v in [eps, 2].
///
/// The substitution w = v^{-alpha/2} turns the integrand into (2/alpha) a(sqrt(2) w^{-1/alpha}),
/// bounded and smooth on [2^{-alpha/2}, eps^{-alpha/2}].
inline double truncated_kernel_integral(const Amplitude& a, double alpha, double eps, double upper = 2.0) {
  if (!(alpha > 0.0)) throw ConfigError("truncated kernel integral requires alpha > 0");
  const double inv_alpha = 1.0 / alpha;
  const double w_lo = std::pow(upper, -0.5 * alpha);
  const double w_hi = std::pow(eps, -0.5 * alpha);
  auto integrand = [&](double w) { return a(std::sqrt(2.0) * std::pow(w, -inv_alpha)); };
  return 2.0 * inv_alpha * quad::integrate(integrand, w_lo, w_hi, 1e-14);
}

inline double jump_intensity(double alpha, double lambda, const Amplitude& a, const CutoffParams& cut) {
  if (lambda == 0.0) return 0.0;
  return lambda * 2.0 * std::numbers::pi * std::pow(2.0, -1.0 - 0.5 * alpha) *
         truncated_kernel_integral(a, alpha, cut.eps);
}

/// Large-jump intensity Lambda_eps at x; independent of the direction by rotational symmetry.
inline double jump_intensity(const MediumModel& medium, const Vec3& x, const CutoffParams& cut) {
  return jump_intensity(medium.alpha(x), medium.lambda(x), medium.amplitude(), cut);
}

inline double jump_intensity(const MediumModel& medium, const Vec3& x, const Vec3& /*direction*/,
                             const CutoffParams& cut) {
  return jump_intensity(medium, x, cut);
}

/// Global thinning rate 2 pi lambda_sup a_sup / (alpha_min eps^{alpha_max/2}).
inline double bar_lambda(const MediumModel& medium, const CutoffParams& cut) {
  const auto& b = medium.bounds();
  if (b.lambda_sup == 0.0) return 0.0;
  if (!(b.alpha_min > 0.0)) throw ConfigError("thinning bound undefined for alpha_min = 0");
  return 2.0 * std::numbers::pi * b.lambda_sup * medium.amplitude().sup() /
         (b.alpha_min * std::pow(cut.eps, 0.5 * b.alpha_max));
}

/// Thinning acceptance probability Lambda_eps(x) / bar_lambda.
inline double acceptance_prob(const MediumModel& medium, const Vec3& x, const CutoffParams& cut) {
  const double bound = bar_lambda(medium, cut);
  if (!(bound > 0.0)) throw ConfigError("acceptance probability needs a positive thinning bound");
  return jump_intensity(medium, x, cut) / bound;
}

/// Gegenbauer kernel; alpha = 1 gives Henyey-Greenstein. g = 0 is the isotropic limit 1/(4 pi).
inline double hg_kernel(double g, double alpha, double s) {
  if (!(g > -1.0 && g < 1.0)) throw DomainError("anisotropy factor must lie in (-1, 1)");
  if (!(s >= -1.0 && s <= 1.0)) throw DomainError("cosine must lie in [-1, 1]");
  if (g == 0.0) return 0.25 / std::numbers::pi;
  const double base = 1.0 + g * g - 2.0 * g * s;
  return alpha * g * std::pow(base, -1.0 - 0.5 * alpha) /
         (2.0 * std::numbers::pi * (std::pow(1.0 - g, -alpha) - std::pow(1.0 + g, -alpha)));
}

inline double henyey_greenstein(double g, double s) {
  if (!(s >= -1.0 && s <= 1.0)) throw DomainError("cosine must lie in [-1, 1]");
  return 0.25 / std::numbers::pi * (1.0 - g * g) / std::pow(1.0 + g * g - 2.0 * g * s, 1.5);
}

// Scenario presets.
namespace presets {

struct Slab {
  double lo = -5.0;
  double hi = 40.0;
  bool contains(const Vec3& x) const { return x.z > lo && x.z < hi; }
};

/// Homogeneous medium filling all space.
inline MediumModel constant(double alpha, double lambda, double a0) {
  return MediumModel::homogeneous(alpha, lambda, Amplitude::constant(a0));
}

/// Scattering layer with intensity lambda (1 by default) on lo < x3 < hi, free transport outside.
inline MediumModel slab(double alpha, double a0, Slab geometry = {}, double lambda = 1.0) {
  std::vector<Region> regions{{alpha, 0.0}, {alpha, lambda}};
  return {std::move(regions), [geometry](const Vec3& x) { return geometry.contains(x) ? std::size_t{1} : 0; },
          Amplitude::constant(a0), MediumBounds{alpha, alpha, lambda}};
}

/// Slab with a ball of radius `radius` at the origin where alpha = alpha_inside; alpha = 1 elsewhere.
inline MediumModel sphere_defect(double alpha_inside, double a0, double radius = 3.0, Slab geometry = {}) {
  std::vector<Region> regions{{1.0, 0.0}, {1.0, 1.0}, {alpha_inside, 1.0}};
  const double r2 = radius * radius;
  auto locate = [geometry, r2](const Vec3& x) -> std::size_t {
    if (!geometry.contains(x)) return 0;
    return dot(x, x) < r2 ? 2 : 1;
  };
  return {std::move(regions), locate, Amplitude::constant(a0),
          MediumBounds{std::min(1.0, alpha_inside), std::max(1.0, alpha_inside), 1.0}};
}

/// Three-layer non-Kolmogorov profile alpha(x3) = 5/3 (x3 <= 2), 4/3 (2 < x3 <= 8), 1.9 (x3 > 8)
/// with Gaussian amplitude a(r) = a0 exp(-r^2 / (2 length^2)).
inline MediumModel nk_turbulence(double a0 = 0.002, double length = 0.8, Slab geometry = {}) {
  constexpr double kLayers[3] = {5.0 / 3.0, 4.0 / 3.0, 1.9};
  std::vector<Region> regions{{kLayers[0], 0.0}, {kLayers[0], 1.0}, {kLayers[1], 1.0}, {kLayers[2], 1.0}};
  auto locate = [geometry](const Vec3& x) -> std::size_t {
    if (!geometry.contains(x)) return 0;
    if (x.z <= 2.0) return 1;
    return x.z <= 8.0 ? 2 : 3;
  };
  return {std::move(regions), locate, Amplitude::gaussian(a0, length), MediumBounds{4.0 / 3.0, 1.9, 1.0}};
}

}  // namespace presets

}  // namespace fracrt
