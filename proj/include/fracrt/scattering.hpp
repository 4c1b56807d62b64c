#pragma once

// Per-run scattering data: the medium bound to a cutoff, with sigma^2, Lambda_eps, the thinning
// acceptance probability and the chi sampler tabulated once per region.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracrt/errors.hpp"
#include "fracrt/medium.hpp"
#include "fracrt/rng.hpp"
#include "fracrt/sampling.hpp"
#include "fracrt/vec3.hpp"

namespace fracrt {

class ScatteringModel {
 public:
  struct RegionData {
    double sigma_sq = 0.0;
    double sigma = 0.0;
    double intensity = 0.0;
    double acceptance = 0.0;
    std::optional<ChiSampler> sampler;
  };

  /// `correction = false` drops the small-jump diffusion while keeping the jump part unchanged.
  ScatteringModel(MediumModel medium, CutoffParams cut, bool correction = true, std::size_t degree = 10)
      : medium_(std::move(medium)), cut_(cut), correction_(correction), degree_(degree) {
    bar_lambda_ = fracrt::bar_lambda(medium_, cut_);
    if (medium_.piecewise_constant()) {
      for (const Region& r : medium_.regions()) regions_.push_back(tabulate(r.alpha, r.lambda));
    }
  }

  const MediumModel& medium() const { return medium_; }
  const CutoffParams& cut() const { return cut_; }
  bool correction() const { return correction_; }
  std::size_t degree() const { return degree_; }
  double bar_lambda() const { return bar_lambda_; }
  std::span<const RegionData> region_data() const { return regions_; }

  double sigma_sq(const Vec3& x) const {
    if (!correction_) return 0.0;
    if (auto r = medium_.region_of(x)) return regions_[*r].sigma_sq;
    return sigma_eps_sq(medium_, x, cut_);
  }

  double intensity(const Vec3& x) const {
    if (auto r = medium_.region_of(x)) return regions_[*r].intensity;
    return jump_intensity(medium_, x, cut_);
  }

  double acceptance(const Vec3& x) const {
    if (bar_lambda_ == 0.0) return 0.0;
    if (auto r = medium_.region_of(x)) return regions_[*r].acceptance;
    return std::min(1.0, jump_intensity(medium_, x, cut_) / bar_lambda_);
  }

  /// Upper bound on sigma^2 over space from the declared bounds (r'_eps < 1).
  double sup_sigma_sq() const {
    if (!correction_) return 0.0;
    if (medium_.piecewise_constant()) {
      double m = 0.0;
      for (const auto& r : regions_) m = std::max(m, r.sigma_sq);
      return m;
    }
    const auto& b = medium_.bounds();
    return std::pow(2.0, 1.0 - b.alpha_min) * medium_.amplitude().at_zero() * std::numbers::pi * b.lambda_sup *
           std::pow(cut_.r_prime_eps, 2.0 - b.alpha_max) / (2.0 - b.alpha_max);
  }

  /// Direction after an accepted jump at x; the position is untouched.
  template <RandomStream R>
  Vec3 jump_direction(const Vec3& x, const Vec3& k, R& rng) const {
    if (auto r = medium_.region_of(x)) {
      const auto& data = regions_[*r];
      if (!data.sampler) throw DomainError("jump requested in a region with lambda = 0");
      return sample_jump_direction(*data.sampler, k, rng);
    }
    const ChiSampler sampler = make_chi_sampler(medium_.amplitude(), medium_.alpha(x), cut_.eps, degree_);
    return sample_jump_direction(sampler, k, rng);
  }

 private:
  RegionData tabulate(double alpha, double lambda) const {
    RegionData d;
    if (correction_) d.sigma_sq = sigma_eps_sq(alpha, lambda, medium_.amplitude().at_zero(), cut_);
    d.sigma = std::sqrt(d.sigma_sq);
    d.intensity = jump_intensity(alpha, lambda, medium_.amplitude(), cut_);
    if (bar_lambda_ > 0.0) {
      if (d.intensity > bar_lambda_) {
        throw ConfigError("jump intensity " + std::to_string(d.intensity) + " exceeds the thinning bound " +
                          std::to_string(bar_lambda_));
      }
      d.acceptance = d.intensity / bar_lambda_;
    }
    if (lambda > 0.0) d.sampler = make_chi_sampler(medium_.amplitude(), alpha, cut_.eps, degree_);
    return d;
  }

  MediumModel medium_;
  CutoffParams cut_;
  bool correction_;
  std::size_t degree_;
  double bar_lambda_ = 0.0;
  std::vector<RegionData> regions_;
};

}  // namespace fracrt
