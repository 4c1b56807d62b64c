#pragma once

// Builds media, engines and accumulators from a configuration and runs a batch.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fracrt/batch.hpp"
#include "fracrt/config.hpp"
#include "fracrt/medium.hpp"
#include "fracrt/observables.hpp"
#include "fracrt/scattering.hpp"
#include "fracrt/spectral.hpp"
#include "fracrt/transport.hpp"

namespace fracrt {

inline MediumModel make_medium(const MediumSpec& m) {
  const Slab slab{m.slab_lo, m.slab_hi};
  if (m.preset == "constant") return presets::constant(m.alpha, m.lambda, m.a0);
  if (m.preset == "slab") return presets::slab(m.alpha, m.a0, slab, m.lambda);
  if (m.preset == "sphere-defect") return presets::sphere_defect(m.alpha_inside, m.a0, m.radius, slab);
  if (m.preset == "nk-turbulence") return presets::nk_turbulence(m.a0, m.length, slab);
  throw ConfigError("unknown medium preset '" + m.preset + "'");
}

inline std::optional<Slab> slab_of(const MediumSpec& m) {
  if (m.preset == "constant") return std::nullopt;
  return Slab{m.slab_lo, m.slab_hi};
}

inline Source make_source(const SourceSpec& s) {
  if (s.type == "gaussian-cardioid") return GaussianCardioidSource{};
  return PointSource{{s.x0[0], s.x0[1], s.x0[2]}, {s.k0[0], s.k0[1], s.k0[2]}};
}

/// Reference time t_c at tc_alpha (or the medium alpha) and the medium a0.
inline double reference_tc(const SimulationConfig& c) {
  return spectral::characteristic_time(c.tc_alpha.value_or(c.medium.alpha), c.medium.a0);
}

/// Total initial mass: 1 for a point source, 4 pi for the (1 + cos theta) test initial condition.
inline double initial_mass(const SourceSpec& s) { return s.type == "gaussian-cardioid" ? 4.0 * std::numbers::pi : 1.0; }

/// All tallies of one run; absent members are disabled.
struct Tallies {
  std::optional<FourierAngular> fourier;
  std::optional<DepthProfile> depth;
  std::optional<TransverseMap> transverse_tr;
  std::optional<TransverseMap> transverse_ref;
  std::optional<TimeFlux> flux_tr;
  std::optional<TimeFlux> flux_ref;
  std::uint64_t n_particles = 0;
  std::uint64_t exits_plus = 0;
  std::uint64_t exits_minus = 0;
  std::uint64_t inside = 0;
  double max_displacement_excess = 0.0;  // max over particles of |x(T) - x(0)| - T
  double max_direction_defect = 0.0;     // max over particles of ||k(T)| - 1|

  void merge(const Tallies& o) {
    auto both = [](auto& a, const auto& b) {
      if (a && b) a->merge(*b);
    };
    both(fourier, o.fourier);
    both(depth, o.depth);
    both(transverse_tr, o.transverse_tr);
    both(transverse_ref, o.transverse_ref);
    both(flux_tr, o.flux_tr);
    both(flux_ref, o.flux_ref);
    n_particles += o.n_particles;
    exits_plus += o.exits_plus;
    exits_minus += o.exits_minus;
    inside += o.inside;
    max_displacement_excess = std::max(max_displacement_excess, o.max_displacement_excess);
    max_direction_defect = std::max(max_direction_defect, o.max_direction_defect);
  }
};

/// Forwards path segments to the depth profile (clipped at its end time) and the observation at
/// the Fourier time to the angular tally.
struct RunObserver : NullObserver {
  DepthProfile* depth = nullptr;
  double depth_end = 0.0;
  FourierAngular* fourier = nullptr;
  std::size_t fourier_index = 0;

  void on_segment(double t0, const Vec3& x0, double t1, const Vec3& x1) {
    if (!depth || !(t0 < depth_end)) return;
    if (t1 > depth_end) {
      const double f = (depth_end - t0) / (t1 - t0);
      depth->on_segment(t0, x0, depth_end, x0 + f * (x1 - x0));
    } else {
      depth->on_segment(t0, x0, t1, x1);
    }
  }

  void on_observation(std::size_t i, const ParticleState& z) {
    if (fourier && i == fourier_index) fourier->record(z);
  }
};

/// Everything derived from a configuration that stays fixed during a run.
class Scenario {
 public:
  explicit Scenario(SimulationConfig config)
      : config_(validated(std::move(config))),
        model_(make_medium(config_.medium), CutoffParams::from_eps(config_.eps), config_.correction,
               config_.collocation_degree),
        engine_(model_, StepPlan::from_h0(config_.h0, model_.bar_lambda()), slab_of(config_.medium)),
        source_(make_source(config_.source)),
        tc_(reference_tc(config_)),
        horizon_(config_.horizon_tc * tc_) {
    if (config_.fourier.enabled) times_.push_back(config_.fourier.time_tc * tc_);
    times_.push_back(horizon_);
    if (times_.size() == 2 && times_[0] >= times_[1]) times_.erase(times_.begin());
  }

  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;

  const SimulationConfig& config() const { return config_; }
  const ScatteringModel& model() const { return model_; }
  const Engine& engine() const { return engine_; }
  double tc() const { return tc_; }
  double horizon() const { return horizon_; }

  Tallies make_tallies() const {
    Tallies t;
    const auto& c = config_;
    if (c.fourier.enabled) {
      t.fourier.emplace(FourierAngular::uniform_grid(c.fourier.xi_lo, c.fourier.xi_hi, c.fourier.n_xi),
                        c.fourier.dtheta, c.fourier.dphi);
    }
    if (c.depth.enabled) t.depth.emplace(Axis{c.depth.lo, c.depth.hi, c.depth.bins});
    if (c.transverse.enabled) {
      t.transverse_tr.emplace(ExitSide::plus, c.transverse.transmitted_half_width, c.transverse.cells);
      t.transverse_ref.emplace(ExitSide::minus, c.transverse.reflected_half_width, c.transverse.cells);
    }
    auto flux = [&](const FluxSpec& f, ExitSide side) {
      return TimeFlux(side, f.t0, f.t1.value_or(f.t1_tc * tc_), f.dt);
    };
    if (c.flux_transmitted.enabled) t.flux_tr.emplace(flux(c.flux_transmitted, ExitSide::plus));
    if (c.flux_reflected.enabled) t.flux_ref.emplace(flux(c.flux_reflected, ExitSide::minus));
    return t;
  }

  /// Simulates one particle into the tallies.
  void simulate_one(RngStream& rng, Tallies& acc, TrajectoryStats& stats) const {
    const ParticleState z0 = sample_source(source_, rng);
    RunObserver obs;
    if (acc.depth) {
      obs.depth = &*acc.depth;
      obs.depth_end = config_.depth.time_tc * tc_;
    }
    if (acc.fourier) obs.fourier = &*acc.fourier;
    const ParticleState z = engine_.simulate(z0, std::span<const double>(times_), rng, obs, stats);
    ++acc.n_particles;
    if (acc.depth) acc.depth->record(z);
    if (acc.transverse_tr) acc.transverse_tr->record(z);
    if (acc.transverse_ref) acc.transverse_ref->record(z);
    if (acc.flux_tr) acc.flux_tr->record(z);
    if (acc.flux_ref) acc.flux_ref->record(z);
    switch (z.exit) {
      case ExitSide::plus: ++acc.exits_plus; break;
      case ExitSide::minus: ++acc.exits_minus; break;
      default: ++acc.inside; break;
    }
    acc.max_displacement_excess = std::max(acc.max_displacement_excess, norm(z.x - z0.x) - z.t);
    acc.max_direction_defect = std::max(acc.max_direction_defect, std::abs(norm(z.k) - 1.0));
  }

  RunReport run(Tallies& out, std::uint64_t n_particles, unsigned workers, std::uint64_t first = 0) const {
    BatchOptions opt{n_particles, config_.seed, workers, 1024, first};
    return run_batch(
        opt, [this] { return make_tallies(); },
        [this](std::uint64_t, RngStream& rng, Tallies& acc, TrajectoryStats& stats) { simulate_one(rng, acc, stats); },
        out);
  }

  RunReport run(Tallies& out) const { return run(out, config_.n_particles, config_.resolved_workers()); }

 private:
  static SimulationConfig validated(SimulationConfig c) {
    c.validate();
    return c;
  }

  SimulationConfig config_;
  ScatteringModel model_;
  Engine engine_;
  Source source_;
  double tc_;
  double horizon_;
  std::vector<double> times_;
};

/// Spectral reference for the depth profile of a constant-coefficient test run.
inline std::vector<double> reference_depth_profile(const SimulationConfig& c) {
  const double tc = spectral::characteristic_time(c.medium.alpha, c.medium.a0);
  return spectral::observable_u4(Axis{c.depth.lo, c.depth.hi, c.depth.bins}, c.depth.time_tc * tc, c.spectral_L,
                                 c.medium.alpha, c.medium.a0);
}

}  // namespace fracrt
