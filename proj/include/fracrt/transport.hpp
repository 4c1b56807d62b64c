#pragma once

// Particle engine: explicit sphere-diffusion scheme between jumps, fictitious-jump thinning,
// trajectory assembly and slab exit detection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>

#include "fracrt/errors.hpp"
#include "fracrt/medium.hpp"
#include "fracrt/rng.hpp"
#include "fracrt/sampling.hpp"
#include "fracrt/scattering.hpp"
#include "fracrt/vec3.hpp"

namespace fracrt {

enum class ExitSide { none, plus, minus };

inline const char* to_string(ExitSide s) {
  switch (s) {
    case ExitSide::plus: return "plus";
    case ExitSide::minus: return "minus";
    default: return "none";
  }
}

struct ParticleState {
  Vec3 x;
  Vec3 k = kE3;
  double t = 0.0;
  ExitSide exit = ExitSide::none;
  double exit_time = std::numeric_limits<double>::infinity();
  Vec3 exit_position;
};

using Slab = presets::Slab;

/// Base diffusion step h = h0 / bar_lambda; infinite when there are no jumps to clock.
struct StepPlan {
  double base_h = std::numeric_limits<double>::infinity();

  static StepPlan from_h0(double h0, double bar_lambda) {
    if (!(h0 > 0.0)) throw ConfigError("step factor h0 must be positive");
    return {bar_lambda > 0.0 ? h0 / bar_lambda : std::numeric_limits<double>::infinity()};
  }

  static StepPlan fixed(double h) {
    if (!(h > 0.0)) throw ConfigError("step size must be positive");
    return {h};
  }

  /// 4 h sup sigma^2 <= 1.
  void validate(double sup_sigma_sq) const {
    if (sup_sigma_sq > 0.0 && !(4.0 * base_h * sup_sigma_sq <= 1.0)) {
      throw ConfigError("step size " + std::to_string(base_h) + " violates 4 h sigma^2 <= 1 (sigma^2 = " +
                        std::to_string(sup_sigma_sq) + ")");
    }
  }
};

/// Unnormalized direction update k - 2 h sigma^2 k + sqrt(2h) sigma (k x w).
inline Vec3 scheme_direction(const Vec3& k, const Vec3& w, double h, double sigma_sq) {
  return (1.0 - 2.0 * h * sigma_sq) * k + std::sqrt(2.0 * h * sigma_sq) * cross(k, w);
}

/// One explicit step with sigma frozen at the pre-step position.
inline ParticleState diffusion_step(ParticleState z, const Vec3& w, double h, double sigma_sq) {
  z.x += h * z.k;
  const Vec3 kk = scheme_direction(z.k, w, h, sigma_sq);
  const double n = norm(kk);
  if (!(n > 0.0)) throw NumericalError("direction update vanished; step size too large");
  z.k = kk * (1.0 / n);
  z.t += h;
  return z;
}

inline ParticleState diffusion_step(const ParticleState& z, const Vec3& w, double h, const ScatteringModel& model) {
  return diffusion_step(z, w, h, model.sigma_sq(z.x));
}

struct TrajectoryStats {
  std::uint64_t fictitious = 0;
  std::uint64_t accepted = 0;
  std::uint64_t steps = 0;

  TrajectoryStats& operator+=(const TrajectoryStats& o) {
    fictitious += o.fictitious;
    accepted += o.accepted;
    steps += o.steps;
    return *this;
  }
};

/// Observer with no-op hooks; observers derive from it and shadow what they need.
struct NullObserver {
  void on_segment(double, const Vec3&, double, const Vec3&) {}
  void on_jump(double, const Vec3&, const Vec3&, const Vec3&) {}
  void on_exit(const ParticleState&) {}
  void on_observation(std::size_t, const ParticleState&) {}
};

/// Writes one line per accepted jump: t x1 x2 x3 k_old(3) k_new(3).
class EventLog : public NullObserver {
 public:
  explicit EventLog(std::ostream& os) : os_(&os) {}
  void on_jump(double t, const Vec3& x, const Vec3& k_old, const Vec3& k_new) {
    *os_ << t << ' ' << x.x << ' ' << x.y << ' ' << x.z << ' ' << k_old.x << ' ' << k_old.y << ' ' << k_old.z << ' '
         << k_new.x << ' ' << k_new.y << ' ' << k_new.z << '\n';
  }

 private:
  std::ostream* os_;
};

class Engine {
 public:
  Engine(const ScatteringModel& model, StepPlan plan, std::optional<Slab> slab = std::nullopt)
      : model_(&model), plan_(plan), slab_(slab), free_(model.sup_sigma_sq() == 0.0) {
    plan_.validate(model.sup_sigma_sq());
  }

  const ScatteringModel& model() const { return *model_; }
  const StepPlan& plan() const { return plan_; }
  const std::optional<Slab>& slab() const { return slab_; }

  /// floor(dt/h) full steps and one remainder step. Stops at the end of the step that leaves the slab.
  template <RandomStream R, class Obs = NullObserver>
  void diffuse(ParticleState& z, double duration, R& rng, Obs& obs, TrajectoryStats& stats) const {
    if (!(duration > 0.0)) return;
    const double t_end = z.t + duration;
    if (free_) {
      // No diffusion anywhere: straight flight composes exactly.
      advance(z, duration, Vec3{}, 0.0, obs);
      ++stats.steps;
      if (z.exit == ExitSide::none) z.t = t_end;
      return;
    }
    const double h = plan_.base_h;
    const double full = std::floor(duration / h);
    const auto n = static_cast<std::uint64_t>(full);
    for (std::uint64_t i = 0; i <= n; ++i) {
      const double step = i < n ? h : duration - full * h;
      if (step <= 0.0) break;
      const double s2 = model_->sigma_sq(z.x);
      Vec3 w;
      if (s2 > 0.0) w = {rng.normal(), rng.normal(), rng.normal()};
      advance(z, step, w, s2, obs);
      ++stats.steps;
      if (z.exit != ExitSide::none) return;
    }
    z.t = t_end;
  }

  template <RandomStream R>
  void diffuse(ParticleState& z, double duration, R& rng) const {
    NullObserver obs;
    TrajectoryStats stats;
    diffuse(z, duration, rng, obs, stats);
  }

  /// Thinned jump process up to time T. After a slab exit the particle flies freely.
  template <RandomStream R, class Obs = NullObserver>
  void run_until(ParticleState& z, double T, R& rng, Obs& obs, TrajectoryStats& stats) const {
    const double bar = model_->bar_lambda();
    while (z.t < T) {
      if (z.exit != ExitSide::none) {
        const Vec3 x0 = z.x;
        z.x += (T - z.t) * z.k;
        obs.on_segment(z.t, x0, T, z.x);
        z.t = T;
        break;
      }
      const double wait = bar > 0.0 ? rng.exponential(bar) : std::numeric_limits<double>::infinity();
      if (wait >= T - z.t) {
        diffuse(z, T - z.t, rng, obs, stats);
        if (z.exit == ExitSide::none) break;
        continue;
      }
      diffuse(z, wait, rng, obs, stats);
      if (z.exit != ExitSide::none) continue;
      ++stats.fictitious;
      const double p = model_->acceptance(z.x);
      if (p > 0.0 && rng.uniform() < p) {
        const Vec3 k_old = z.k;
        z.k = model_->jump_direction(z.x, z.k, rng);
        obs.on_jump(z.t, z.x, k_old, z.k);
        ++stats.accepted;
      }
    }
    z.t = T;
  }

  /// State at time T.
  template <RandomStream R, class Obs = NullObserver>
  ParticleState simulate(ParticleState z, double T, R& rng, Obs& obs, TrajectoryStats& stats) const {
    run_until(z, T, rng, obs, stats);
    obs.on_observation(0, z);
    return z;
  }

  template <RandomStream R>
  ParticleState simulate(ParticleState z, double T, R& rng) const {
    NullObserver obs;
    TrajectoryStats stats;
    return simulate(z, T, rng, obs, stats);
  }

  /// Observation times are inserted into the grid; obs.on_observation(i, z) fires at each.
  template <RandomStream R, class Obs = NullObserver>
  ParticleState simulate(ParticleState z, std::span<const double> times, R& rng, Obs& obs,
                         TrajectoryStats& stats) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (i > 0 && times[i] < times[i - 1]) throw ConfigError("observation times must be nondecreasing");
      run_until(z, times[i], rng, obs, stats);
      obs.on_observation(i, z);
    }
    return z;
  }

 private:
  // Moves x linearly over one step, records a slab exit inside it, then updates k.
  template <class Obs>
  void advance(ParticleState& z, double step, const Vec3& w, double sigma_sq, Obs& obs) const {
    const Vec3 x0 = z.x;
    const double t0 = z.t;
    const Vec3 x1 = x0 + step * z.k;
    if (slab_ && z.exit == ExitSide::none) {
      std::optional<double> bound;
      if (x1.z >= slab_->hi) {
        bound = slab_->hi;
        z.exit = ExitSide::plus;
      } else if (x1.z <= slab_->lo) {
        bound = slab_->lo;
        z.exit = ExitSide::minus;
      }
      if (bound) {
        const double dt = std::clamp((*bound - x0.z) / z.k.z, 0.0, step);
        z.exit_time = t0 + dt;
        z.exit_position = x0 + dt * z.k;
        z.exit_position.z = *bound;
        obs.on_exit(z);
      }
    }
    obs.on_segment(t0, x0, t0 + step, x1);
    z.x = x1;
    z.t = t0 + step;
    // Past the boundary there is no scattering, so the crossing direction is kept.
    const bool left_now = slab_ && z.exit != ExitSide::none && z.exit_time >= t0;
    if (sigma_sq > 0.0 && !left_now) {
      const Vec3 kk = scheme_direction(z.k, w, step, sigma_sq);
      const double n = norm(kk);
      if (!(n > 0.0)) throw NumericalError("direction update vanished; step size too large");
      z.k = kk * (1.0 / n);
    }
  }

  const ScatteringModel* model_;
  StepPlan plan_;
  std::optional<Slab> slab_;
  bool free_;
};

// Initial distributions.

/// All particles start at x0 with direction k0.
struct PointSource {
  Vec3 x0;
  Vec3 k0 = kE3;
};

/// Standard Gaussian position, direction with density proportional to 1 + cos(theta) about e3.
struct GaussianCardioidSource {};

using Source = std::variant<PointSource, GaussianCardioidSource>;

/// cos(theta) with density (1 + mu) / 2 on [-1, 1], by inversion.
inline double cardioid_cosine(double u) { return std::clamp(2.0 * std::sqrt(u) - 1.0, -1.0, 1.0); }

template <RandomStream R>
ParticleState sample_source(const Source& source, R& rng) {
  ParticleState z;
  if (const auto* p = std::get_if<PointSource>(&source)) {
    z.x = p->x0;
    z.k = normalized(p->k0);
    return z;
  }
  z.x = {rng.normal(), rng.normal(), rng.normal()};
  const double mu = cardioid_cosine(rng.uniform());
  const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  z.k = {s * std::cos(phi), s * std::sin(phi), mu};
  return z;
}

}  // namespace fracrt
