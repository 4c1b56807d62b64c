#pragma once

// Random-variate generation for the jump part: truncated Pareto inverse transform, stochastic
// collocation for non-constant amplitudes, and rotations on the sphere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracrt/errors.hpp"
#include "fracrt/medium.hpp"
#include "fracrt/quadrature.hpp"
#include "fracrt/rng.hpp"
#include "fracrt/vec3.hpp"

namespace fracrt {

/// CDF of the truncated Pareto law with density proportional to v^{-1-alpha/2} on (eps, 2).
inline double pareto_cdf(double chi, double eps, double alpha) {
  if (chi <= eps) return 0.0;
  if (chi >= 2.0) return 1.0;
  const double h = 0.5 * alpha;
  return (1.0 - std::pow(eps / chi, h)) / (1.0 - std::pow(0.5 * eps, h));
}

/// Inverse of pareto_cdf: eps (1 - (1 - (eps/2)^{alpha/2}) u)^{-2/alpha}.
inline double pareto_inverse(double u, double eps, double alpha) {
  const double h = 0.5 * alpha;
  const double chi = eps * std::pow(1.0 - (1.0 - std::pow(0.5 * eps, h)) * u, -1.0 / h);
  return std::clamp(chi, eps, 2.0);
}

/// CDF of chi with density proportional to a(sqrt(2 chi)) chi^{-1-alpha/2} on (eps, 2).
class TargetCdf {
 public:
  TargetCdf(Amplitude amplitude, double alpha, double eps)
      : amplitude_(std::move(amplitude)),
        alpha_(alpha),
        eps_(eps),
        total_(truncated_kernel_integral(amplitude_, alpha, eps)) {}

  double operator()(double chi) const {
    if (chi <= eps_) return 0.0;
    if (chi >= 2.0) return 1.0;
    // Mass above chi, integrated over the short tail piece, keeps full relative accuracy near 1.
    const double tail = truncated_kernel_integral(amplitude_, alpha_, chi);
    return 1.0 - tail / total_;
  }

  /// Bisection on chi to an absolute tolerance.
  double inverse(double u, double tol = 1e-12) const {
    if (u <= 0.0) return eps_;
    if (u >= 1.0) return 2.0;
    double lo = eps_;
    double hi = 2.0;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if ((*this)(mid) < u) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  double eps() const { return eps_; }
  double alpha() const { return alpha_; }

 private:
  Amplitude amplitude_;
  double alpha_;
  double eps_;
  double total_;
};

/// Interpolation table for G = F_W^{-1} o F_V on [eps, 2].
///
/// G is interpolated by barycentric Lagrange in the coordinate y = log(v / (2 + offset - v)),
/// which stretches both the Pareto end at eps and the truncation layer at 2. The nodes are
/// Gauss-Lobatto-Jacobi abscissae in y.
class CollocationTable {
 public:
  struct Node {
    double v;
    double g;
  };

  static constexpr double kRightOffset = 0.02;
  static constexpr double kJacobiA = 0.0;
  static constexpr double kJacobiB = -0.5;

  CollocationTable(std::vector<Node> nodes, double eps, double alpha, std::string amplitude_id)
      : nodes_(std::move(nodes)), eps_(eps), alpha_(alpha), amplitude_id_(std::move(amplitude_id)) {
    if (nodes_.size() < 2) throw ConfigError("collocation table needs at least 2 nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i].v > nodes_[i - 1].v)) throw NumericalError("collocation nodes are not increasing");
      if (nodes_[i].g < nodes_[i - 1].g) {
        throw NumericalError("collocation table is not monotone at node " + std::to_string(i));
      }
    }
    coords_.reserve(nodes_.size());
    for (const auto& n : nodes_) coords_.push_back(coordinate(n.v));
    weights_.assign(nodes_.size(), 1.0);
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (k != j) weights_[j] /= coords_[j] - coords_[k];
      }
    }
  }

  static double coordinate(double v) { return std::log(v / (2.0 + kRightOffset - v)); }
  static double from_coordinate(double y) {
    const double e = std::exp(y);
    return (2.0 + kRightOffset) * e / (1.0 + e);
  }

  /// Interpolated G(v), clamped to [eps, 2].
  double operator()(double v) const {
    const double y = coordinate(v);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      const double d = y - coords_[j];
      if (d == 0.0) return nodes_[j].g;
      const double t = weights_[j] / d;
      num += t * nodes_[j].g;
      den += t;
    }
    return std::clamp(num / den, eps_, 2.0);
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t degree() const { return nodes_.size(); }
  double eps() const { return eps_; }
  double alpha() const { return alpha_; }
  const std::string& amplitude_id() const { return amplitude_id_; }

 private:
  std::vector<Node> nodes_;
  std::vector<double> coords_;
  std::vector<double> weights_;
  double eps_;
  double alpha_;
  std::string amplitude_id_;
};

/// Builds the collocation table: nodes v_i, u_i = F_V(v_i) in closed form, g_i = F_W^{-1}(u_i).
inline CollocationTable build_collocation(const Amplitude& amplitude, double alpha, double eps,
                                          std::size_t degree) {
  if (degree < 2) throw ConfigError("collocation degree must be at least 2");
  const TargetCdf target(amplitude, alpha, eps);
  const double y_lo = CollocationTable::coordinate(eps);
  const double y_hi = CollocationTable::coordinate(2.0);
  const auto xs = quad::gauss_lobatto_jacobi_nodes(degree, CollocationTable::kJacobiA, CollocationTable::kJacobiB);
  std::vector<CollocationTable::Node> nodes;
  nodes.reserve(degree);
  for (std::size_t i = 0; i < degree; ++i) {
    double v = CollocationTable::from_coordinate(y_lo + 0.5 * (xs[i] + 1.0) * (y_hi - y_lo));
    if (i == 0) v = eps;
    if (i + 1 == degree) v = 2.0;
    const double u = pareto_cdf(v, eps, alpha);
    double g = target.inverse(u);
    if (i == 0) g = eps;
    if (i + 1 == degree) g = 2.0;
    nodes.push_back({v, g});
  }
  return {std::move(nodes), eps, alpha, amplitude.name()};
}

inline CollocationTable build_collocation(const MediumModel& medium, const Vec3& x, double eps, std::size_t degree) {
  return build_collocation(medium.amplitude(), medium.alpha(x), eps, degree);
}

/// Draws chi on [eps, 2]: directly from the truncated Pareto law for constant amplitude,
/// through the collocation map otherwise.
class ChiSampler {
 public:
  static ChiSampler pareto(double eps, double alpha) { return ChiSampler(eps, alpha, std::nullopt); }
  static ChiSampler collocated(CollocationTable table) {
    const double eps = table.eps();
    const double alpha = table.alpha();
    return ChiSampler(eps, alpha, std::move(table));
  }

  /// Maps a surrogate draw v ~ V to chi.
  double transform(double v) const { return table_ ? (*table_)(v) : v; }

  template <RandomStream R>
  double operator()(R& rng) const {
    return transform(pareto_inverse(rng.uniform(), eps_, alpha_));
  }

  double eps() const { return eps_; }
  double alpha() const { return alpha_; }
  const std::optional<CollocationTable>& table() const { return table_; }

 private:
  ChiSampler(double eps, double alpha, std::optional<CollocationTable> table)
      : eps_(eps), alpha_(alpha), table_(std::move(table)) {}

  double eps_;
  double alpha_;
  std::optional<CollocationTable> table_;
};

inline ChiSampler make_chi_sampler(const Amplitude& amplitude, double alpha, double eps, std::size_t degree) {
  if (amplitude.is_constant()) return ChiSampler::pareto(eps, alpha);
  return ChiSampler::collocated(build_collocation(amplitude, alpha, eps, degree));
}

/// Unit vector orthogonal to k: k x e3 away from the poles, k x e1 near them.
inline Vec3 perpendicular(const Vec3& k) {
  return std::abs(k.z) < 0.9 ? normalized(cross(k, kE3)) : normalized(cross(k, kE1));
}

/// Rotation of k to polar angle theta (cos/sin given) and azimuth phi about k, renormalized.
inline Vec3 rotate(double cos_theta, double sin_theta, double phi, const Vec3& k) {
  const Vec3 perp = perpendicular(k);
  const Vec3 side = cross(k, perp);
  const Vec3 ring = std::cos(phi) * perp + std::sin(phi) * side;
  return normalized(cos_theta * k + sin_theta * ring);
}

inline Vec3 rotate(double theta, double phi, const Vec3& k) {
  return rotate(std::cos(theta), std::sin(theta), phi, k);
}

/// New direction after a large jump: chi from the sampler, theta = arccos(1 - chi), phi uniform.
template <RandomStream R>
Vec3 sample_jump_direction(const ChiSampler& sampler, const Vec3& k, R& rng) {
  const double chi = sampler(rng);
  const double cos_theta = 1.0 - chi;
  const double sin_theta = std::sqrt(chi * (2.0 - chi));
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  return rotate(cos_theta, sin_theta, phi, k);
}

/// Henyey-Greenstein inverse CDF for the scattering cosine; g = 0 is isotropic.
inline double hg_cosine(double g, double u) {
  if (std::abs(g) < 1e-8) return 2.0 * u - 1.0;
  const double t = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
  return std::clamp((1.0 + g * g - t * t) / (2.0 * g), -1.0, 1.0);
}

template <RandomStream R>
Vec3 sample_hg(double g, R& rng, const Vec3& k) {
  if (!(g > -1.0 && g < 1.0)) throw DomainError("anisotropy factor must lie in (-1, 1)");
  const double c = hg_cosine(g, rng.uniform());
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return rotate(c, s, 2.0 * std::numbers::pi * rng.uniform(), k);
}

template <RandomStream R>
Vec3 sample_isotropic(R& rng) {
  const double c = 2.0 * rng.uniform() - 1.0;
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  return {s * std::cos(phi), s * std::sin(phi), c};
}

}  // namespace fracrt
