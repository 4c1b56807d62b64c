#pragma once

// Binned estimators. Tallies are kept in integers (counts, or fixed-point for real-valued
// scores) so that merging partials is exact and the result does not depend on how particles
// were split between workers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fracrt/errors.hpp"
#include "fracrt/transport.hpp"
#include "fracrt/vec3.hpp"

namespace fracrt {

namespace fixed_point {

inline std::int64_t encode(double v, double scale) { return std::llround(v * scale); }
inline double decode(std::int64_t v, double scale) { return static_cast<double>(v) / scale; }

}  // namespace fixed_point

/// Uniform 1D binning of [lo, hi] into n cells.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 1;

  double width() const { return (hi - lo) / static_cast<double>(n); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }
  double edge(std::size_t i) const { return lo + static_cast<double>(i) * width(); }

  /// Cell index of v, or -1 below / n above the range. Cells are [e_i, e_{i+1}), the last one closed.
  std::ptrdiff_t locate(double v) const {
    if (!(v >= lo)) return -1;
    if (v > hi) return static_cast<std::ptrdiff_t>(n);
    const auto i = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width()));
    return std::min(i, static_cast<std::ptrdiff_t>(n) - 1);
  }

  bool operator==(const Axis&) const = default;
};

inline void require_same(const Axis& a, const Axis& b, const char* what) {
  if (!(a == b)) throw ConfigError(std::string("cannot merge ") + what + " tallies on different grids");
}

/// Transverse position X_perp(tau) of particles leaving through one face, on a square detector.
class TransverseMap {
 public:
  TransverseMap(ExitSide side, double half_width, std::size_t cells = 128)
      : side_(side), axis_{-half_width, half_width, cells}, counts_(cells * cells, 0) {}

  void record(const ParticleState& z) {
    ++n_particles_;
    if (z.exit != side_) return;
    ++exits_;
    const auto i = axis_.locate(z.exit_position.x);
    const auto j = axis_.locate(z.exit_position.y);
    const auto n = static_cast<std::ptrdiff_t>(axis_.n);
    if (i < 0 || j < 0 || i >= n || j >= n) {
      ++overflow_;
      return;
    }
    ++counts_[static_cast<std::size_t>(i) * axis_.n + static_cast<std::size_t>(j)];
  }

  void merge(const TransverseMap& o) {
    require_same(axis_, o.axis_, "transverse");
    if (side_ != o.side_) throw ConfigError("cannot merge transverse maps of different faces");
    for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] += o.counts_[c];
    overflow_ += o.overflow_;
    exits_ += o.exits_;
    n_particles_ += o.n_particles_;
  }

  double cell_area() const { return axis_.width() * axis_.width(); }
  std::uint64_t count(std::size_t i, std::size_t j) const { return counts_[i * axis_.n + j]; }

  /// count / (cell area * N).
  double estimate(std::size_t i, std::size_t j) const {
    if (n_particles_ == 0) return 0.0;
    return static_cast<double>(count(i, j)) / (cell_area() * static_cast<double>(n_particles_));
  }

  double exit_fraction() const {
    return n_particles_ == 0 ? 0.0 : static_cast<double>(exits_) / static_cast<double>(n_particles_);
  }

  ExitSide side() const { return side_; }
  const Axis& axis() const { return axis_; }
  std::uint64_t overflow() const { return overflow_; }
  std::uint64_t exits() const { return exits_; }
  std::uint64_t n_particles() const { return n_particles_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  void write_csv(std::ostream& os) const {
    os << "x1,x2,estimate,count\n";
    for (std::size_t i = 0; i < axis_.n; ++i) {
      for (std::size_t j = 0; j < axis_.n; ++j) {
        os << axis_.center(i) << ',' << axis_.center(j) << ',' << estimate(i, j) << ',' << count(i, j) << '\n';
      }
    }
  }

 private:
  ExitSide side_;
  Axis axis_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t overflow_ = 0;
  std::uint64_t exits_ = 0;
  std::uint64_t n_particles_ = 0;
};

/// Exit-time histogram on bins (t_n, t_{n+1}] for one face, with under- and overflow.
///
/// Exit times within 1e-9 dt of a bin edge are snapped to it, and the first bin also takes its
/// left edge, so a ballistic arrival computed as 40 - 1ulp still lands in the bin starting at 40.
class TimeFlux {
 public:
  TimeFlux(ExitSide side, double t0, double t1, double dt)
      : side_(side), t0_(t0), dt_(dt), n_(static_cast<std::size_t>(std::llround((t1 - t0) / dt))), counts_(n_, 0) {
    if (!(dt > 0.0) || n_ == 0) throw ConfigError("time-flux grid needs dt > 0 and at least one bin");
  }

  std::ptrdiff_t locate(double tau) const {
    constexpr double kSnap = 1e-9;
    const double r = (tau - t0_) / dt_;
    if (r < -kSnap) return -1;
    const auto i = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(r - kSnap)) - 1);
    return std::min(i, static_cast<std::ptrdiff_t>(n_));
  }

  void record(const ParticleState& z) {
    ++n_particles_;
    if (z.exit != side_) return;
    const auto i = locate(z.exit_time);
    if (i < 0) {
      ++underflow_;
    } else if (i >= static_cast<std::ptrdiff_t>(n_)) {
      ++overflow_;
    } else {
      ++counts_[static_cast<std::size_t>(i)];
    }
  }

  void merge(const TimeFlux& o) {
    if (side_ != o.side_ || t0_ != o.t0_ || dt_ != o.dt_ || n_ != o.n_) {
      throw ConfigError("cannot merge time-flux tallies on different grids");
    }
    for (std::size_t i = 0; i < n_; ++i) counts_[i] += o.counts_[i];
    underflow_ += o.underflow_;
    overflow_ += o.overflow_;
    n_particles_ += o.n_particles_;
  }

  /// count / (dt * N).
  double estimate(std::size_t i) const {
    if (n_particles_ == 0) return 0.0;
    return static_cast<double>(counts_[i]) / (dt_ * static_cast<double>(n_particles_));
  }

  double bin_start(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
  std::size_t bins() const { return n_; }
  double dt() const { return dt_; }
  ExitSide side() const { return side_; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  std::uint64_t underflow() const { return underflow_; }
  std::uint64_t overflow() const { return overflow_; }
  std::uint64_t n_particles() const { return n_particles_; }
  std::uint64_t total() const {
    std::uint64_t s = underflow_ + overflow_;
    for (auto c : counts_) s += c;
    return s;
  }

  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
  }

  void write_csv(std::ostream& os) const {
    os << "t_lo,t_hi,estimate,count\n";
    for (std::size_t i = 0; i < n_; ++i) {
      os << bin_start(i) << ',' << bin_start(i + 1) << ',' << estimate(i) << ',' << counts_[i] << '\n';
    }
  }

 private:
  ExitSide side_;
  double t0_;
  double dt_;
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t underflow_ = 0;
  std::uint64_t overflow_ = 0;
  std::uint64_t n_particles_ = 0;
};

/// Fourier transform in x3 of the angular density: e^{-i xi X3(T)} summed into the (theta, phi)
/// cell of k(T), for every xi on the grid.
class FourierAngular {
 public:
  static constexpr double kScale = 0x1p30;

  /// Cell counts are round(pi / dtheta) and round(2 pi / dphi); widths are then adjusted so the
  /// cells tile the sphere exactly.
  FourierAngular(std::vector<double> xi, double dtheta = 0.05, double dphi = 0.05)
      : xi_(std::move(xi)),
        theta_{0.0, std::numbers::pi, static_cast<std::size_t>(std::llround(std::numbers::pi / dtheta))},
        phi_{0.0, 2.0 * std::numbers::pi, static_cast<std::size_t>(std::llround(2.0 * std::numbers::pi / dphi))},
        re_(xi_.size() * theta_.n * phi_.n, 0),
        im_(re_.size(), 0) {}

  static std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
  }

  std::size_t cell_of(const Vec3& k) const {
    const double theta = std::acos(std::clamp(k.z, -1.0, 1.0));
    double phi = std::atan2(k.y, k.x);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    const auto i = std::clamp<std::ptrdiff_t>(theta_.locate(theta), 0, static_cast<std::ptrdiff_t>(theta_.n) - 1);
    const auto j = std::clamp<std::ptrdiff_t>(phi_.locate(phi), 0, static_cast<std::ptrdiff_t>(phi_.n) - 1);
    return static_cast<std::size_t>(i) * phi_.n + static_cast<std::size_t>(j);
  }

  void record(const ParticleState& z) {
    ++n_particles_;
    const std::size_t cell = cell_of(z.k);
    const std::size_t stride = theta_.n * phi_.n;
    for (std::size_t q = 0; q < xi_.size(); ++q) {
      const double arg = xi_[q] * z.x.z;
      re_[q * stride + cell] += fixed_point::encode(std::cos(arg), kScale);
      im_[q * stride + cell] -= fixed_point::encode(std::sin(arg), kScale);
    }
  }

  void merge(const FourierAngular& o) {
    require_same(theta_, o.theta_, "Fourier");
    require_same(phi_, o.phi_, "Fourier");
    if (xi_ != o.xi_) throw ConfigError("cannot merge Fourier tallies on different xi grids");
    for (std::size_t c = 0; c < re_.size(); ++c) {
      re_[c] += o.re_[c];
      im_[c] += o.im_[c];
    }
    n_particles_ += o.n_particles_;
  }

  /// Cell estimate sum / (dtheta dphi N).
  std::complex<double> estimate(std::size_t q, std::size_t i, std::size_t j) const {
    const std::size_t c = q * theta_.n * phi_.n + i * phi_.n + j;
    const double norm = theta_.width() * phi_.width() * static_cast<double>(n_particles_);
    if (norm == 0.0) return {};
    return {fixed_point::decode(re_[c], kScale) / norm, fixed_point::decode(im_[c], kScale) / norm};
  }

  /// Sum over all cells times dtheta dphi: the empirical mean of e^{-i xi X3}.
  std::complex<double> angular_total(std::size_t q) const {
    const std::size_t stride = theta_.n * phi_.n;
    std::int64_t re = 0;
    std::int64_t im = 0;
    for (std::size_t c = q * stride; c < (q + 1) * stride; ++c) {
      re += re_[c];
      im += im_[c];
    }
    if (n_particles_ == 0) return {};
    const double n = static_cast<double>(n_particles_);
    return {fixed_point::decode(re, kScale) / n, fixed_point::decode(im, kScale) / n};
  }

  /// Mass-scaled angular integral, comparable with the spectral u1 when `mass` is the initial total.
  std::complex<double> u1(std::size_t q, double mass) const { return mass * angular_total(q); }

  /// Phi-integrated profile per theta cell: the cell average in theta of sin(theta) times the
  /// phi integral, scaled by `mass`.
  std::vector<std::complex<double>> u2(std::size_t q, double mass) const {
    std::vector<std::complex<double>> out(theta_.n);
    for (std::size_t i = 0; i < theta_.n; ++i) {
      std::complex<double> s;
      for (std::size_t j = 0; j < phi_.n; ++j) s += estimate(q, i, j);
      out[i] = mass * phi_.width() * s;
    }
    return out;
  }

  const std::vector<double>& xi() const { return xi_; }
  const Axis& theta_axis() const { return theta_; }
  const Axis& phi_axis() const { return phi_; }
  std::uint64_t n_particles() const { return n_particles_; }

  void write_u1_csv(std::ostream& os, double mass) const {
    os << "xi,re,im\n";
    for (std::size_t q = 0; q < xi_.size(); ++q) {
      const auto v = u1(q, mass);
      os << xi_[q] << ',' << v.real() << ',' << v.imag() << '\n';
    }
  }

 private:
  std::vector<double> xi_;
  Axis theta_;
  Axis phi_;
  std::vector<std::int64_t> re_;
  std::vector<std::int64_t> im_;
  std::uint64_t n_particles_ = 0;
};

/// Time-integrated occupancy of x3 cells along the piecewise-linear path. Each path segment puts
/// into every cell exactly the time it spends there.
class DepthProfile : public NullObserver {
 public:
  static constexpr double kScale = 0x1p24;

  explicit DepthProfile(Axis axis = {-300.0, 300.0, 256}) : axis_(axis), occupancy_(axis.n, 0) {}

  void on_segment(double t0, const Vec3& x0, double t1, const Vec3& x1) {
    const double dt = t1 - t0;
    if (!(dt > 0.0)) return;
    const double z0 = x0.z;
    const double z1 = x1.z;
    if (z0 == z1) {
      deposit(axis_.locate(z0), dt);
      return;
    }
    const double a = std::min(z0, z1);
    const double b = std::max(z0, z1);
    const double rate = dt / (b - a);
    if (a < axis_.lo) outside_ += fixed_point::encode((std::min(b, axis_.lo) - a) * rate, kScale);
    if (b > axis_.hi) outside_ += fixed_point::encode((b - std::max(a, axis_.hi)) * rate, kScale);
    const double lo = std::max(a, axis_.lo);
    const double hi = std::min(b, axis_.hi);
    if (!(hi > lo)) return;
    const auto first = std::clamp<std::ptrdiff_t>(axis_.locate(lo), 0, static_cast<std::ptrdiff_t>(axis_.n) - 1);
    const auto last = std::clamp<std::ptrdiff_t>(axis_.locate(hi), 0, static_cast<std::ptrdiff_t>(axis_.n) - 1);
    for (auto i = first; i <= last; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const double len = std::min(hi, axis_.edge(u + 1)) - std::max(lo, axis_.edge(u));
      if (len > 0.0) occupancy_[u] += fixed_point::encode(len * rate, kScale);
    }
  }

  void record(const ParticleState&) { ++n_particles_; }

  void merge(const DepthProfile& o) {
    require_same(axis_, o.axis_, "depth-profile");
    for (std::size_t i = 0; i < occupancy_.size(); ++i) occupancy_[i] += o.occupancy_[i];
    outside_ += o.outside_;
    n_particles_ += o.n_particles_;
  }

  /// mass * occupancy / (N dx).
  std::vector<double> estimate(double mass) const {
    std::vector<double> out(axis_.n, 0.0);
    if (n_particles_ == 0) return out;
    const double norm = mass / (static_cast<double>(n_particles_) * axis_.width());
    for (std::size_t i = 0; i < axis_.n; ++i) out[i] = fixed_point::decode(occupancy_[i], kScale) * norm;
    return out;
  }

  /// Total occupancy per particle, inside plus outside the grid.
  double mean_time() const {
    if (n_particles_ == 0) return 0.0;
    std::int64_t s = outside_;
    for (auto v : occupancy_) s += v;
    return fixed_point::decode(s, kScale) / static_cast<double>(n_particles_);
  }

  const Axis& axis() const { return axis_; }
  std::uint64_t n_particles() const { return n_particles_; }
  const std::vector<std::int64_t>& raw() const { return occupancy_; }

 private:
  void deposit(std::ptrdiff_t i, double dt) {
    if (i < 0 || i >= static_cast<std::ptrdiff_t>(axis_.n)) {
      outside_ += fixed_point::encode(dt, kScale);
    } else {
      occupancy_[static_cast<std::size_t>(i)] += fixed_point::encode(dt, kScale);
    }
  }

  Axis axis_;
  std::vector<std::int64_t> occupancy_;
  std::int64_t outside_ = 0;
  std::uint64_t n_particles_ = 0;
};

/// max |mc - ref| / max |ref|.
inline double relative_error(std::span<const double> mc, std::span<const double> ref) {
  if (mc.size() != ref.size()) throw ConfigError("relative error needs profiles on the same grid");
  double diff = 0.0;
  double peak = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    diff = std::max(diff, std::abs(mc[i] - ref[i]));
    peak = std::max(peak, std::abs(ref[i]));
  }
  if (!(peak > 0.0)) throw DomainError("relative error undefined for an all-zero reference");
  return diff / peak;
}

inline void write_profile_csv(std::ostream& os, const Axis& axis, std::span<const double> values) {
  os << "x3,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) os << axis.center(i) << ',' << values[i] << '\n';
}

}  // namespace fracrt
