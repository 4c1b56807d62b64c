#pragma once

// Run configuration, read from and written to JSON.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fracrt/errors.hpp"

namespace fracrt {

struct MediumSpec {
  std::string preset = "constant";  // constant | slab | sphere-defect | nk-turbulence
  double alpha = 1.0;
  double alpha_inside = 1.0;  // sphere-defect only
  double a0 = 0.002;
  double lambda = 1.0;        // constant and slab
  double length = 0.8;        // nk-turbulence correlation length
  double radius = 3.0;        // sphere-defect
  double slab_lo = -5.0;
  double slab_hi = 40.0;
};

struct SourceSpec {
  std::string type = "point";  // point | gaussian-cardioid
  std::array<double, 3> x0{0.0, 0.0, 0.0};
  std::array<double, 3> k0{0.0, 0.0, 1.0};
};

struct FourierSpec {
  bool enabled = false;
  double xi_lo = -0.2;
  double xi_hi = 0.2;
  std::size_t n_xi = 100;
  double dtheta = 0.05;
  double dphi = 0.05;
  double time_tc = 1.0;
};

struct DepthSpec {
  bool enabled = false;
  double lo = -300.0;
  double hi = 300.0;
  std::size_t bins = 256;
  double time_tc = 3.0;
};

struct TransverseSpec {
  bool enabled = false;
  double transmitted_half_width = 10.0;
  double reflected_half_width = 50.0;
  std::size_t cells = 128;
};

/// Exit-time grid from t0 to t1 (or t1_tc multiples of t_c when t1 is absent) with step dt.
struct FluxSpec {
  bool enabled = false;
  double t0 = 0.0;
  std::optional<double> t1;
  double t1_tc = 0.0;
  double dt = 0.02;
};

struct CompareSpec {
  std::vector<double> alphas{1.0};
  std::vector<double> eps{0.1};
  std::vector<bool> corrections{true, false};
};

struct SimulationConfig {
  std::string name = "run";
  MediumSpec medium;
  double eps = 0.1;
  double h0 = 0.3;
  bool correction = true;
  std::size_t collocation_degree = 10;
  std::uint64_t n_particles = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  SourceSpec source;
  // Horizon in units of t_c; t_c is taken at tc_alpha (medium alpha when absent) and medium a0.
  double horizon_tc = 1.0;
  std::optional<double> tc_alpha;
  FourierSpec fourier;
  DepthSpec depth;
  TransverseSpec transverse;
  FluxSpec flux_transmitted{false, 40.0, 45.0, 0.0, 0.02};
  FluxSpec flux_reflected{false, 0.0, std::nullopt, 4.0, 0.4};
  int spectral_L = 40;
  CompareSpec compare;
  std::string out_dir = "out";

  unsigned resolved_workers() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
  }

  void validate() const {
    static const std::array<std::string, 4> presets{"constant", "slab", "sphere-defect", "nk-turbulence"};
    if (std::find(presets.begin(), presets.end(), medium.preset) == presets.end()) {
      throw ConfigError("unknown medium preset '" + medium.preset + "'");
    }
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
    if (!(h0 > 0.0)) throw ConfigError("h0 must be positive");
    if (!(medium.a0 > 0.0)) throw ConfigError("a0 must be positive");
    if (!(medium.lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    if (!(medium.alpha > 0.0 && medium.alpha < 2.0)) throw ConfigError("alpha must lie in (0, 2)");
    if (!(medium.slab_lo < medium.slab_hi)) throw ConfigError("slab bounds must satisfy lo < hi");
    if (source.type != "point" && source.type != "gaussian-cardioid") {
      throw ConfigError("unknown source type '" + source.type + "'");
    }
    if (!(horizon_tc > 0.0)) throw ConfigError("horizon_tc must be positive");
    if (collocation_degree < 2) throw ConfigError("collocation degree must be at least 2");
    if (spectral_L < 1) throw ConfigError("spectral truncation must be at least 1");
    if (fourier.enabled && (fourier.n_xi == 0 || !(fourier.time_tc > 0.0) || fourier.time_tc > horizon_tc)) {
      throw ConfigError("Fourier observation time must lie in (0, horizon]");
    }
    if (depth.enabled && (depth.bins == 0 || !(depth.lo < depth.hi) || depth.time_tc > horizon_tc)) {
      throw ConfigError("depth profile needs bins > 0, lo < hi and time_tc <= horizon_tc");
    }
    for (const auto* f : {&flux_transmitted, &flux_reflected}) {
      if (f->enabled && !(f->dt > 0.0)) throw ConfigError("time-flux dt must be positive");
    }
  }
};

// JSON mapping. Missing keys keep their defaults.

inline void to_json(nlohmann::json& j, const MediumSpec& m) {
  j = {{"preset", m.preset}, {"alpha", m.alpha},   {"alpha_inside", m.alpha_inside},
       {"a0", m.a0},         {"lambda", m.lambda}, {"length", m.length},
       {"radius", m.radius}, {"slab_lo", m.slab_lo}, {"slab_hi", m.slab_hi}};
}

inline void from_json(const nlohmann::json& j, MediumSpec& m) {
  m.preset = j.value("preset", m.preset);
  m.alpha = j.value("alpha", m.alpha);
  m.alpha_inside = j.value("alpha_inside", m.alpha_inside);
  m.a0 = j.value("a0", m.a0);
  m.lambda = j.value("lambda", m.lambda);
  m.length = j.value("length", m.length);
  m.radius = j.value("radius", m.radius);
  m.slab_lo = j.value("slab_lo", m.slab_lo);
  m.slab_hi = j.value("slab_hi", m.slab_hi);
}

inline void to_json(nlohmann::json& j, const SourceSpec& s) { j = {{"type", s.type}, {"x0", s.x0}, {"k0", s.k0}}; }

inline void from_json(const nlohmann::json& j, SourceSpec& s) {
  s.type = j.value("type", s.type);
  s.x0 = j.value("x0", s.x0);
  s.k0 = j.value("k0", s.k0);
}

inline void to_json(nlohmann::json& j, const FourierSpec& f) {
  j = {{"enabled", f.enabled}, {"xi_lo", f.xi_lo},   {"xi_hi", f.xi_hi},  {"n_xi", f.n_xi},
       {"dtheta", f.dtheta},   {"dphi", f.dphi},     {"time_tc", f.time_tc}};
}

inline void from_json(const nlohmann::json& j, FourierSpec& f) {
  f.enabled = j.value("enabled", true);
  f.xi_lo = j.value("xi_lo", f.xi_lo);
  f.xi_hi = j.value("xi_hi", f.xi_hi);
  f.n_xi = j.value("n_xi", f.n_xi);
  f.dtheta = j.value("dtheta", f.dtheta);
  f.dphi = j.value("dphi", f.dphi);
  f.time_tc = j.value("time_tc", f.time_tc);
}

inline void to_json(nlohmann::json& j, const DepthSpec& d) {
  j = {{"enabled", d.enabled}, {"lo", d.lo}, {"hi", d.hi}, {"bins", d.bins}, {"time_tc", d.time_tc}};
}

inline void from_json(const nlohmann::json& j, DepthSpec& d) {
  d.enabled = j.value("enabled", true);
  d.lo = j.value("lo", d.lo);
  d.hi = j.value("hi", d.hi);
  d.bins = j.value("bins", d.bins);
  d.time_tc = j.value("time_tc", d.time_tc);
}

inline void to_json(nlohmann::json& j, const TransverseSpec& t) {
  j = {{"enabled", t.enabled},
       {"transmitted_half_width", t.transmitted_half_width},
       {"reflected_half_width", t.reflected_half_width},
       {"cells", t.cells}};
}

inline void from_json(const nlohmann::json& j, TransverseSpec& t) {
  t.enabled = j.value("enabled", true);
  t.transmitted_half_width = j.value("transmitted_half_width", t.transmitted_half_width);
  t.reflected_half_width = j.value("reflected_half_width", t.reflected_half_width);
  t.cells = j.value("cells", t.cells);
}

inline void to_json(nlohmann::json& j, const FluxSpec& f) {
  j = {{"enabled", f.enabled}, {"t0", f.t0}, {"dt", f.dt}};
  if (f.t1) {
    j["t1"] = *f.t1;
  } else {
    j["t1_tc"] = f.t1_tc;
  }
}

inline void from_json(const nlohmann::json& j, FluxSpec& f) {
  f.enabled = j.value("enabled", true);
  f.t0 = j.value("t0", f.t0);
  f.dt = j.value("dt", f.dt);
  if (j.contains("t1")) {
    f.t1 = j.at("t1").get<double>();
  } else if (j.contains("t1_tc")) {
    f.t1.reset();
    f.t1_tc = j.at("t1_tc").get<double>();
  }
}

inline void to_json(nlohmann::json& j, const CompareSpec& c) {
  j = {{"alphas", c.alphas}, {"eps", c.eps}, {"corrections", c.corrections}};
}

inline void from_json(const nlohmann::json& j, CompareSpec& c) {
  c.alphas = j.value("alphas", c.alphas);
  c.eps = j.value("eps", c.eps);
  c.corrections = j.value("corrections", c.corrections);
}

inline void to_json(nlohmann::json& j, const SimulationConfig& c) {
  j = {{"name", c.name},
       {"medium", c.medium},
       {"eps", c.eps},
       {"h0", c.h0},
       {"correction", c.correction},
       {"collocation_degree", c.collocation_degree},
       {"n_particles", c.n_particles},
       {"seed", c.seed},
       {"workers", c.workers},
       {"source", c.source},
       {"horizon_tc", c.horizon_tc},
       {"fourier", c.fourier},
       {"depth", c.depth},
       {"transverse", c.transverse},
       {"flux_transmitted", c.flux_transmitted},
       {"flux_reflected", c.flux_reflected},
       {"spectral_L", c.spectral_L},
       {"compare", c.compare},
       {"out_dir", c.out_dir}};
  if (c.tc_alpha) j["tc_alpha"] = *c.tc_alpha;
}

inline void from_json(const nlohmann::json& j, SimulationConfig& c) {
  c.name = j.value("name", c.name);
  if (j.contains("medium")) j.at("medium").get_to(c.medium);
  c.eps = j.value("eps", c.eps);
  c.h0 = j.value("h0", c.h0);
  c.correction = j.value("correction", c.correction);
  c.collocation_degree = j.value("collocation_degree", c.collocation_degree);
  c.n_particles = j.value("n_particles", c.n_particles);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  if (j.contains("source")) j.at("source").get_to(c.source);
  c.horizon_tc = j.value("horizon_tc", c.horizon_tc);
  if (j.contains("tc_alpha")) c.tc_alpha = j.at("tc_alpha").get<double>();
  if (j.contains("fourier")) j.at("fourier").get_to(c.fourier);
  if (j.contains("depth")) j.at("depth").get_to(c.depth);
  if (j.contains("transverse")) j.at("transverse").get_to(c.transverse);
  if (j.contains("flux_transmitted")) j.at("flux_transmitted").get_to(c.flux_transmitted);
  if (j.contains("flux_reflected")) j.at("flux_reflected").get_to(c.flux_reflected);
  c.spectral_L = j.value("spectral_L", c.spectral_L);
  if (j.contains("compare")) j.at("compare").get_to(c.compare);
  c.out_dir = j.value("out_dir", c.out_dir);
}

inline SimulationConfig parse_config(const std::string& text) {
  SimulationConfig c;
  try {
    nlohmann::json::parse(text).get_to(c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  c.validate();
  return c;
}

inline SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize(const SimulationConfig& c) { return nlohmann::json(c).dump(2); }

}  // namespace fracrt
