#pragma once

// Parallel driver: particles are split in fixed-size chunks handed out through an atomic counter;
// each worker fills its own accumulator and the partials are merged at the end.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "fracrt/rng.hpp"
#include "fracrt/transport.hpp"

namespace fracrt {

struct BatchOptions {
  std::uint64_t n_particles = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t chunk = 1024;
  // Particle indices [first, first + n_particles); lets split runs reuse the same streams.
  std::uint64_t first = 0;
};

struct RunReport {
  std::uint64_t n_particles = 0;
  unsigned workers = 1;
  double wall_seconds = 0.0;
  TrajectoryStats stats;

  double acceptance_rate() const {
    return stats.fictitious == 0 ? 0.0 : static_cast<double>(stats.accepted) / static_cast<double>(stats.fictitious);
  }
};

/// Runs body(index, rng, acc, stats) for every particle with RngStream(seed, index).
/// Acc must provide merge(const Acc&); the merged result is added into `out`.
template <class Acc, class MakeAcc, class Body>
RunReport run_batch(const BatchOptions& opt, MakeAcc&& make, Body&& body, Acc& out) {
  const auto start = std::chrono::steady_clock::now();
  const unsigned workers = std::max(1u, opt.workers);
  const std::uint64_t chunk = std::max<std::uint64_t>(1, opt.chunk);
  std::vector<Acc> partials;
  partials.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) partials.push_back(make());
  std::vector<TrajectoryStats> stats(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::atomic<std::uint64_t> next{0};

  auto work = [&](unsigned w) {
    try {
      for (;;) {
        const std::uint64_t begin = next.fetch_add(chunk);
        if (begin >= opt.n_particles) break;
        const std::uint64_t end = std::min(opt.n_particles, begin + chunk);
        for (std::uint64_t i = begin; i < end; ++i) {
          RngStream rng(opt.seed, opt.first + i);
          body(opt.first + i, rng, partials[w], stats[w]);
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
      next.store(opt.n_particles);
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunReport report;
  report.n_particles = opt.n_particles;
  report.workers = workers;
  for (unsigned w = 0; w < workers; ++w) {
    out.merge(partials[w]);
    report.stats += stats[w];
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace fracrt
