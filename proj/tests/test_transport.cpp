#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "fracrt/batch.hpp"
#include "fracrt/rng.hpp"
#include "fracrt/scattering.hpp"
#include "fracrt/transport.hpp"

using namespace fracrt;

namespace {

// Decay rate of E[k . k0] under the large jumps alone:
// 2 pi lambda 2^{-1-alpha/2} a0 int_eps^2 v^{-alpha/2} dv.
double truncated_rate(double alpha, double a0, double eps) {
  const double p = 1.0 - 0.5 * alpha;
  return 2.0 * std::numbers::pi * std::pow(2.0, -1.0 - 0.5 * alpha) * a0 * (std::pow(2.0, p) - std::pow(eps, p)) / p;
}

struct MeanCosine {
  double mean = 0.0;
  double se = 0.0;
};

MeanCosine mean_cosine(const Engine& engine, double T, std::uint64_t n, std::uint64_t seed) {
  double s = 0.0;
  double s2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    RngStream rng(seed, i);
    ParticleState z;
    const double c = engine.simulate(z, T, rng).k.z;
    s += c;
    s2 += c * c;
  }
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST(Scheme, SecondMomentOfUnnormalizedUpdate) {
  const double h = 0.2;
  const double s2 = 1.0;
  RngStream rng(3, 0);
  const Vec3 k = normalized(Vec3{1, 1, 1});
  const int n = 1000000;
  double s = 0.0;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 kk = scheme_direction(k, {rng.normal(), rng.normal(), rng.normal()}, h, s2);
    const double q = dot(kk, kk);
    s += q;
    ss += q * q;
  }
  const double m = s / n;
  EXPECT_NEAR(m, 1.0 + 4.0 * h * h * s2 * s2, 4.0 * std::sqrt((ss / n - m * m) / n));
}

TEST(Scheme, StepKeepsUnitDirection) {
  ParticleState z;
  z.k = normalized(Vec3{0.3, 0.4, 0.5});
  const auto next = diffusion_step(z, {0.7, -1.2, 2.0}, 0.1, 0.5);
  EXPECT_NEAR(norm(next.k), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(next.t, 0.1);
  EXPECT_NEAR(norm(next.x - 0.1 * z.k), 0.0, 1e-15);
}

TEST(StepPlan, RejectsStepsBeyondStabilityBound) {
  EXPECT_THROW(StepPlan::fixed(10.0).validate(0.1), ConfigError);
  EXPECT_NO_THROW(StepPlan::fixed(2.5).validate(0.1));
  EXPECT_TRUE(std::isinf(StepPlan::from_h0(0.3, 0.0).base_h));
  const ScatteringModel model(presets::constant(1.0, 1.0, 0.5), CutoffParams::from_eps(0.5));
  EXPECT_THROW(Engine(model, StepPlan::fixed(100.0)), ConfigError);
}

TEST(Engine, FreeTransportIsExact) {
  const ScatteringModel model(presets::constant(1.0, 0.0, 0.002), CutoffParams::from_eps(0.1));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()));
  RngStream rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    ParticleState z;
    z.x = {rng.normal(), rng.normal(), rng.normal()};
    z.k = sample_isotropic(rng);
    const auto end = engine.simulate(z, 77.7, rng);
    EXPECT_LE(norm(end.x - (z.x + 77.7 * z.k)), 1e-10);
    EXPECT_EQ(end.t, 77.7);
  }
}

TEST(Engine, ExitTimeIsTheCrossingTime) {
  const ScatteringModel model(presets::slab(1.0, 0.002, {}, 0.0), CutoffParams::from_eps(0.1));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()), Slab{});
  RngStream rng(1, 0);
  ParticleState up;
  up.k = {0.6, 0.0, 0.8};
  auto z = engine.simulate(up, 100.0, rng);
  EXPECT_EQ(z.exit, ExitSide::plus);
  EXPECT_NEAR(z.exit_time, 50.0, 1e-12);
  EXPECT_EQ(z.exit_position.z, 40.0);
  EXPECT_NEAR(z.exit_position.x, 30.0, 1e-12);
  EXPECT_NEAR(z.x.z, 80.0, 1e-12);

  ParticleState down;
  down.k = {0.0, std::sqrt(0.75), -0.5};
  z = engine.simulate(down, 100.0, rng);
  EXPECT_EQ(z.exit, ExitSide::minus);
  EXPECT_NEAR(z.exit_time, 10.0, 1e-12);
}

TEST(Engine, ExitDetectedInsideDiffusionSteps) {
  const ScatteringModel model(presets::slab(1.0, 0.05), CutoffParams::from_eps(0.1));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()), Slab{});
  for (std::uint64_t i = 0; i < 2000; ++i) {
    RngStream rng(5, i);
    ParticleState z0;
    const auto z = engine.simulate(z0, 200.0, rng);
    if (z.exit == ExitSide::none) continue;
    EXPECT_LE(z.exit_time, 200.0);
    EXPECT_GE(z.exit_time, z.exit == ExitSide::plus ? 40.0 : 5.0);
    EXPECT_EQ(z.exit_position.z, z.exit == ExitSide::plus ? 40.0 : -5.0);
    // After the exit the particle keeps its exit direction.
    EXPECT_NEAR(norm(z.x - (z.exit_position + (200.0 - z.exit_time) * z.k)), 0.0, 1e-9);
  }
}

// Without diffusion the thinned process is exact: E[k3(T)] = exp(-gamma_eps T).
TEST(Engine, UncorrectedMeanCosineDecaysAtTruncatedRate) {
  const double alpha = 1.0, a0 = 0.05, eps = 0.1, T = 3.0;
  const ScatteringModel model(presets::constant(alpha, 1.0, a0), CutoffParams::from_eps(eps), false);
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()));
  const auto m = mean_cosine(engine, T, 100000, 11);
  EXPECT_NEAR(m.mean, std::exp(-truncated_rate(alpha, a0, eps) * T), 4.0 * m.se);
}

// The diffusion adds 2 sigma^2 to the decay rate; a fine fixed step keeps the scheme bias small.
TEST(Engine, CorrectedMeanCosineAddsDiffusionRate) {
  const double alpha = 1.5, a0 = 0.05, eps = 0.1, T = 3.0;
  const ScatteringModel model(presets::constant(alpha, 1.0, a0), CutoffParams::from_eps(eps), true);
  const Engine engine(model, StepPlan::fixed(0.01));
  const auto m = mean_cosine(engine, T, 100000, 13);
  const double rate = truncated_rate(alpha, a0, eps) + 2.0 * model.sup_sigma_sq();
  EXPECT_NEAR(m.mean, std::exp(-rate * T), 4.0 * m.se);
}

TEST(Engine, ThinningCountsFollowPoisson) {
  const ScatteringModel model(presets::constant(1.0, 1.0, 0.05), CutoffParams::from_eps(0.1));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()));
  TrajectoryStats stats;
  NullObserver obs;
  const double T = 5.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(17, static_cast<std::uint64_t>(i));
    engine.simulate(ParticleState{}, T, rng, obs, stats);
  }
  const double expect_fict = model.bar_lambda() * T * n;
  EXPECT_NEAR(static_cast<double>(stats.fictitious), expect_fict, 4.0 * std::sqrt(expect_fict));
  const double expect_acc = model.intensity({}) * T * n;
  EXPECT_NEAR(static_cast<double>(stats.accepted), expect_acc, 4.0 * std::sqrt(expect_acc));
}

TEST(Engine, SameStreamSameTrajectory) {
  const ScatteringModel model(presets::sphere_defect(0.3, 0.002), CutoffParams::from_eps(0.01));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()), Slab{});
  RngStream a(99, 4);
  RngStream b(99, 4);
  const auto za = engine.simulate(ParticleState{}, 300.0, a);
  const auto zb = engine.simulate(ParticleState{}, 300.0, b);
  EXPECT_EQ(za.x.x, zb.x.x);
  EXPECT_EQ(za.x.z, zb.x.z);
  EXPECT_EQ(za.exit_time, zb.exit_time);
}

TEST(Engine, CausalityAndUnitDirections) {
  const ScatteringModel model(presets::nk_turbulence(), CutoffParams::from_eps(0.01));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()), Slab{});
  for (std::uint64_t i = 0; i < 500; ++i) {
    RngStream rng(7, i);
    const auto z = engine.simulate(ParticleState{}, 100.0, rng);
    EXPECT_LE(norm(z.x), 100.0 + 1e-9);
    EXPECT_NEAR(norm(z.k), 1.0, 1e-12);
  }
}

TEST(Engine, ObservationTimesFireInOrder) {
  struct Recorder : NullObserver {
    std::vector<double> times;
    void on_observation(std::size_t, const ParticleState& z) { times.push_back(z.t); }
  };
  const ScatteringModel model(presets::constant(1.0, 1.0, 0.002), CutoffParams::from_eps(0.1));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()));
  RngStream rng(1, 1);
  Recorder rec;
  TrajectoryStats stats;
  const std::vector<double> times{10.0, 25.0, 80.0};
  engine.simulate(ParticleState{}, std::span<const double>(times), rng, rec, stats);
  EXPECT_EQ(rec.times, times);
  const std::vector<double> bad{10.0, 5.0};
  EXPECT_THROW(engine.simulate(ParticleState{}, std::span<const double>(bad), rng, rec, stats), ConfigError);
}

TEST(Engine, EventLogRecordsJumps) {
  const ScatteringModel model(presets::constant(1.0, 1.0, 0.05), CutoffParams::from_eps(0.1));
  const Engine engine(model, StepPlan::from_h0(0.3, model.bar_lambda()));
  std::ostringstream os;
  EventLog log(os);
  TrajectoryStats stats;
  RngStream rng(2, 2);
  engine.simulate(ParticleState{}, 50.0, rng, log, stats);
  std::size_t lines = 0;
  for (char c : os.str()) lines += c == '\n';
  EXPECT_EQ(lines, stats.accepted);
}

TEST(Source, CardioidMeanCosine) {
  RngStream rng(8, 0);
  const Source src = GaussianCardioidSource{};
  const int n = 200000;
  double s = 0.0;
  double x = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto z = sample_source(src, rng);
    s += z.k.z;
    x += z.x.z * z.x.z;
  }
  // density (1 + mu)/2: E mu = 1/3, Var mu = 2/9.
  EXPECT_NEAR(s / n, 1.0 / 3.0, 4.0 * std::sqrt(2.0 / 9.0 / n));
  EXPECT_NEAR(x / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Batch, WorkerExceptionsPropagate) {
  struct Acc {
    void merge(const Acc&) {}
  };
  Acc out;
  BatchOptions opt{100, 1, 3, 8, 0};
  EXPECT_THROW(run_batch(
                   opt, [] { return Acc{}; },
                   [](std::uint64_t i, RngStream&, Acc&, TrajectoryStats&) {
                     if (i == 50) throw NumericalError("boom");
                   },
                   out),
               NumericalError);
}
