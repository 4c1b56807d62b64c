// fracrt command-line driver: validate | simulate | compare | sample-test.
//
// Exit codes: 0 ok, 1 configuration error, 2 invariant or acceptance failure.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracrt/config.hpp"
#include "fracrt/errors.hpp"
#include "fracrt/medium.hpp"
#include "fracrt/observables.hpp"
#include "fracrt/rng.hpp"
#include "fracrt/sampling.hpp"
#include "fracrt/scenario.hpp"
#include "fracrt/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracrt;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out;
  std::optional<std::uint64_t> n_particles;
  bool no_correction = false;
};

SimulationConfig load(const Overrides& o) {
  SimulationConfig c = o.config.empty() ? SimulationConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.out_dir = *o.out;
  if (o.n_particles) c.n_particles = *o.n_particles;
  if (o.no_correction) c.correction = false;
  c.validate();
  return c;
}

fs::path prepare_out(const SimulationConfig& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_csv(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  os.precision(17);
  return os;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

// Collects named checks; any failure makes the command exit with 2.
struct Checks {
  json items = json::array();
  bool ok = true;

  void add(const std::string& name, bool pass, json detail = json::object()) {
    detail["name"] = name;
    detail["pass"] = pass;
    items.push_back(std::move(detail));
    ok = ok && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << '\n';
  }
};

int cmd_validate(const Overrides& o) {
  const SimulationConfig c = load(o);
  if (c.medium.preset != "constant") throw ConfigError("validate needs a constant-coefficient medium");
  const double alpha = c.medium.alpha;
  const double a0 = c.medium.a0;
  const int L = c.spectral_L;
  Checks checks;
  json report;

  const double tc = spectral::characteristic_time(alpha, a0);
  report["t_c"] = tc;
  checks.add("t_c finite and positive", std::isfinite(tc) && tc > 0.0, {{"t_c", tc}});
  const double lam0 = spectral::eigenvalue(0, alpha, a0);
  checks.add("lambda_0 vanishes", std::abs(lam0) <= 1e-12, {{"lambda_0", lam0}});

  bool decreasing = true;
  for (int l = 1; l < 50; ++l) decreasing = decreasing && spectral::eigenvalue(l + 1, alpha, a0) < spectral::eigenvalue(l, alpha, a0);
  checks.add("eigenvalues strictly decreasing for l <= 50", decreasing);

  double fh_err = 0.0;
  for (int l = 1; l <= 8; ++l) {
    const double exact = spectral::eigenvalue(l, alpha, 1.0);
    fh_err = std::max(fh_err, std::abs(exact - spectral::funk_hecke_quadrature(l, alpha)) / std::abs(exact));
  }
  checks.add("Funk-Hecke quadrature agrees to 1e-8", fh_err < 1e-8, {{"max_rel_err", fh_err}});

  bool coupling_ok = true;
  for (int l = 0; l < 50; ++l) {
    for (int m = -l; m <= l; ++m) coupling_ok = coupling_ok && spectral::coupling_minus(l + 1, m) == spectral::coupling_plus(l, m);
  }
  checks.add("d-(l+1,m) = d+(l,m)", coupling_ok);

  const double xi = c.fourier.xi_hi;
  const auto sys = spectral::assemble(L, xi, alpha, a0);
  const Eigen::SparseMatrix<double> At = sys.A.transpose();
  checks.add("A symmetric", (Eigen::MatrixXd(sys.A) - Eigen::MatrixXd(At)).cwiseAbs().maxCoeff() == 0.0);
  checks.add("A has 2 L^2 nonzeros", sys.A.nonZeros() == 2 * L * L, {{"nonzeros", sys.A.nonZeros()}});

  const Eigen::VectorXcd u0 = spectral::initial_coefficients(L, xi);
  double prev = u0.norm();
  bool contraction = true;
  for (int i = 1; i <= 20; ++i) {
    const double n = spectral::evolve(sys, u0, 0.2 * i * tc).norm();
    contraction = contraction && n <= prev * (1.0 + 1e-12);
    prev = n;
  }
  checks.add("coefficient norm nonincreasing", contraction);

  const auto sys0 = spectral::assemble(L, 0.0, alpha, a0);
  const auto u00 = spectral::initial_coefficients(L, 0.0);
  const double mass0 = spectral::u1_from(u00).real();
  const double mass1 = spectral::u1_from(spectral::evolve(sys0, u00, 3.0 * tc)).real();
  checks.add("mass conserved at xi = 0", std::abs(mass1 - mass0) <= 1e-10 * mass0, {{"u1_0", mass0}, {"u1_3tc", mass1}});

  double trunc = 0.0;
  for (double x : {c.fourier.xi_lo, 0.5 * c.fourier.xi_lo, 0.0, 0.5 * c.fourier.xi_hi, c.fourier.xi_hi}) {
    const auto a = spectral::observable_u1(tc, x, L, alpha, a0);
    const auto b = spectral::observable_u1(tc, x, L + 10, alpha, a0);
    trunc = std::max(trunc, std::abs(a - b) / std::abs(b));
  }
  checks.add("truncation stable from L to L+10", trunc < 1e-6, {{"max_rel_change", trunc}});

  const ScatteringModel model(make_medium(c.medium), CutoffParams::from_eps(c.eps), c.correction, c.collocation_degree);
  report["bar_lambda"] = model.bar_lambda();
  report["half_over_bar_lambda"] = 0.5 / model.bar_lambda();
  report["sigma_eps_sq"] = model.sup_sigma_sq();
  report["checks"] = checks.items;
  report["pass"] = checks.ok;
  std::cout << "t_c = " << tc << ", 0.5/bar_lambda = " << 0.5 / model.bar_lambda() << '\n';
  write_json(prepare_out(c) / "validate.json", report);
  return checks.ok ? 0 : 2;
}

json run_summary(const Scenario& s, const Tallies& t, const RunReport& r) {
  json j;
  j["name"] = s.config().name;
  j["n_particles"] = r.n_particles;
  j["workers"] = r.workers;
  j["wall_seconds"] = r.wall_seconds;
  j["fictitious_jumps"] = r.stats.fictitious;
  j["accepted_jumps"] = r.stats.accepted;
  j["diffusion_steps"] = r.stats.steps;
  j["acceptance_rate"] = r.acceptance_rate();
  j["bar_lambda"] = s.model().bar_lambda();
  j["step"] = s.engine().plan().base_h;
  j["t_c"] = s.tc();
  j["horizon"] = s.horizon();
  j["correction"] = s.config().correction;
  j["eps"] = s.config().eps;
  j["seed"] = s.config().seed;
  j["exits_plus"] = t.exits_plus;
  j["exits_minus"] = t.exits_minus;
  j["inside"] = t.inside;
  j["max_displacement_excess"] = t.max_displacement_excess;
  j["max_direction_defect"] = t.max_direction_defect;
  return j;
}

void write_tallies(const fs::path& dir, const Scenario& s, const Tallies& t) {
  const double mass = initial_mass(s.config().source);
  if (t.fourier) {
    auto os = open_csv(dir / "fourier_u1.csv");
    t.fourier->write_u1_csv(os, mass);
    auto os2 = open_csv(dir / "fourier_u2.csv");
    os2 << "xi,theta_lo,theta_hi,re,im\n";
    const auto& ax = t.fourier->theta_axis();
    for (std::size_t q = 0; q < t.fourier->xi().size(); ++q) {
      const auto u2 = t.fourier->u2(q, mass);
      for (std::size_t i = 0; i < ax.n; ++i) {
        os2 << t.fourier->xi()[q] << ',' << ax.edge(i) << ',' << ax.edge(i + 1) << ',' << u2[i].real() << ','
            << u2[i].imag() << '\n';
      }
    }
  }
  if (t.depth) {
    auto os = open_csv(dir / "depth_profile.csv");
    const auto v = t.depth->estimate(mass);
    write_profile_csv(os, t.depth->axis(), v);
  }
  if (t.transverse_tr) {
    auto os = open_csv(dir / "transverse_transmitted.csv");
    t.transverse_tr->write_csv(os);
  }
  if (t.transverse_ref) {
    auto os = open_csv(dir / "transverse_reflected.csv");
    t.transverse_ref->write_csv(os);
  }
  if (t.flux_tr) {
    auto os = open_csv(dir / "flux_transmitted.csv");
    t.flux_tr->write_csv(os);
  }
  if (t.flux_ref) {
    auto os = open_csv(dir / "flux_reflected.csv");
    t.flux_ref->write_csv(os);
  }
}

int cmd_simulate(const Overrides& o) {
  const SimulationConfig c = load(o);
  const Scenario scenario(c);
  Tallies tallies = scenario.make_tallies();
  const RunReport report = scenario.run(tallies);
  const fs::path dir = prepare_out(c);
  write_tallies(dir, scenario, tallies);

  Checks checks;
  const std::uint64_t total = tallies.exits_plus + tallies.exits_minus + tallies.inside;
  checks.add("conservation: exits + interior = N", total == report.n_particles);
  checks.add("speed-1 causality", tallies.max_displacement_excess <= 1e-9,
             {{"max_excess", tallies.max_displacement_excess}});
  checks.add("direction stays on the sphere", tallies.max_direction_defect < 1e-12,
             {{"max_defect", tallies.max_direction_defect}});
  json j = run_summary(scenario, tallies, report);
  if (tallies.flux_tr) {
    j["flux_transmitted"] = {{"underflow", tallies.flux_tr->underflow()},
                             {"overflow", tallies.flux_tr->overflow()},
                             {"peak_bin_start", tallies.flux_tr->bin_start(tallies.flux_tr->argmax())}};
  }
  if (tallies.transverse_tr) {
    j["transmitted_fraction"] = tallies.transverse_tr->exit_fraction();
    j["reflected_fraction"] = tallies.transverse_ref->exit_fraction();
    j["transmitted_overflow"] = tallies.transverse_tr->overflow();
    j["reflected_overflow"] = tallies.transverse_ref->overflow();
  }
  j["checks"] = checks.items;
  j["pass"] = checks.ok;
  write_json(dir / "report.json", j);
  std::cout << "simulated " << report.n_particles << " particles in " << report.wall_seconds << " s, acceptance rate "
            << report.acceptance_rate() << '\n';
  return checks.ok ? 0 : 2;
}

struct Profile {
  std::vector<double> coord;
  std::vector<double> value;
};

// Reads a CSV whose first column is the coordinate; the value column is "value", else the second.
Profile read_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + " is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2) throw ConfigError(path + " needs at least two columns");
  std::size_t col = 1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "value") col = i;
  }
  Profile p;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != header.size()) throw ConfigError("ragged row in " + path);
    p.coord.push_back(row[0]);
    p.value.push_back(row[col]);
  }
  return p;
}

double compare_files(const std::string& ref_path, const std::string& cand_path) {
  const Profile ref = read_profile(ref_path);
  const Profile cand = read_profile(cand_path);
  if (ref.coord.size() != cand.coord.size()) throw ConfigError("grid mismatch: different bin counts");
  for (std::size_t i = 0; i < ref.coord.size(); ++i) {
    if (std::abs(ref.coord[i] - cand.coord[i]) > 1e-9 * std::max(1.0, std::abs(ref.coord[i]))) {
      throw ConfigError("grid mismatch at row " + std::to_string(i));
    }
  }
  return relative_error(cand.value, ref.value);
}

int cmd_compare(const Overrides& o, const std::string& reference, const std::string& candidate) {
  if (!reference.empty() || !candidate.empty()) {
    if (reference.empty() || candidate.empty()) throw ConfigError("--reference and --candidate go together");
    const double err = compare_files(reference, candidate);
    std::cout << "err = " << err << '\n';
    if (o.out) {
      fs::create_directories(*o.out);
      write_json(fs::path(*o.out) / "compare.json", {{"reference", reference}, {"candidate", candidate}, {"err", err}});
    }
    return 0;
  }

  const SimulationConfig base = load(o);
  if (base.medium.preset != "constant") throw ConfigError("compare needs a constant-coefficient medium");
  const fs::path dir = prepare_out(base);
  auto table = open_csv(dir / "err_table.csv");
  table << "alpha,eps,corrected,n_particles,err_u4,err_u1_re,wall_seconds\n";
  json rows = json::array();
  for (double alpha : base.compare.alphas) {
    SimulationConfig ca = base;
    ca.medium.alpha = alpha;
    ca.depth.enabled = true;
    ca.horizon_tc = std::max(ca.horizon_tc, ca.depth.time_tc);
    const auto ref_u4 = reference_depth_profile(ca);
    std::ostringstream tag;
    tag << "alpha" << alpha;
    {
      auto os = open_csv(dir / ("reference_u4_" + tag.str() + ".csv"));
      write_profile_csv(os, Axis{ca.depth.lo, ca.depth.hi, ca.depth.bins}, ref_u4);
    }
    for (double eps : base.compare.eps) {
      for (bool corrected : base.compare.corrections) {
        SimulationConfig c = ca;
        c.eps = eps;
        c.correction = corrected;
        const Scenario scenario(c);
        Tallies t = scenario.make_tallies();
        const RunReport r = scenario.run(t);
        const double mass = initial_mass(c.source);
        const auto mc = t.depth->estimate(mass);
        const double err_u4 = relative_error(mc, ref_u4);
        std::optional<double> err_u1;
        if (t.fourier) {
          const double tf = c.fourier.time_tc * scenario.tc();
          std::vector<double> a;
          std::vector<double> b;
          for (std::size_t q = 0; q < t.fourier->xi().size(); ++q) {
            a.push_back(t.fourier->u1(q, mass).real());
            b.push_back(spectral::observable_u1(tf, t.fourier->xi()[q], c.spectral_L, alpha, c.medium.a0).real());
          }
          err_u1 = relative_error(a, b);
        }
        std::ostringstream name;
        name << tag.str() << "_eps" << eps << (corrected ? "_corrected" : "_uncorrected");
        {
          auto os = open_csv(dir / ("mc_u4_" + name.str() + ".csv"));
          write_profile_csv(os, t.depth->axis(), mc);
        }
        table << alpha << ',' << eps << ',' << (corrected ? 1 : 0) << ',' << r.n_particles << ',' << err_u4 << ','
              << (err_u1 ? *err_u1 : std::nan("")) << ',' << r.wall_seconds << '\n';
        json row = run_summary(scenario, t, r);
        row["alpha"] = alpha;
        row["err_u4"] = err_u4;
        if (err_u1) row["err_u1_re"] = *err_u1;
        rows.push_back(row);
        std::cout << name.str() << ": Err = " << err_u4 << '\n';
      }
    }
  }
  write_json(dir / "compare.json", {{"runs", rows}});
  return 0;
}

int cmd_sample_test(const Overrides& o) {
  const SimulationConfig c = load(o);
  const std::uint64_t n = o.n_particles ? *o.n_particles : 100000;
  const double eps = c.eps;
  const double alpha = c.medium.alpha;
  Checks checks;
  json report;

  // Constant amplitude: KS distance against the truncated Pareto CDF.
  {
    const ChiSampler sampler = ChiSampler::pareto(eps, alpha);
    RngStream rng(c.seed, 0);
    std::vector<double> xs(n);
    for (auto& x : xs) x = sampler(rng);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = pareto_cdf(xs[i], eps, alpha);
      d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double bound = 1.63 / std::sqrt(static_cast<double>(n));
    checks.add("truncated Pareto KS", d < bound, {{"ks", d}, {"bound", bound}});
  }

  // Gaussian amplitude: collocation map against bisection on the quadrature CDF.
  {
    const Amplitude amp = Amplitude::gaussian(c.medium.a0, c.medium.length);
    const double a_coll = 5.0 / 3.0;
    const double e_coll = 0.01;
    const CollocationTable table = build_collocation(amp, a_coll, e_coll, c.collocation_degree);
    const TargetCdf target(amp, a_coll, e_coll);
    double err = 0.0;
    const int grid = 10000;
    for (int i = 0; i <= grid; ++i) {
      const double v = e_coll + (2.0 - e_coll) * i / grid;
      err = std::max(err, std::abs(table(v) - target.inverse(pareto_cdf(v, e_coll, a_coll))));
    }
    checks.add("collocation sup error < 1e-3", err < 1e-3, {{"sup_err", err}, {"degree", c.collocation_degree}});
  }

  // Rotation fidelity.
  {
    RngStream rng(c.seed, 1);
    double norm_err = 0.0;
    double angle_err = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const Vec3 k = sample_isotropic(rng);
      const double theta = std::numbers::pi * rng.uniform();
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      const Vec3 p = rotate(theta, phi, k);
      norm_err = std::max(norm_err, std::abs(norm(p) - 1.0));
      angle_err = std::max(angle_err, std::abs(dot(p, k) - std::cos(theta)));
    }
    checks.add("rotation keeps unit norm", norm_err <= 1e-14, {{"max_err", norm_err}});
    checks.add("rotation angle fidelity", angle_err <= 1e-12, {{"max_err", angle_err}});
  }

  // Henyey-Greenstein mean cosine.
  {
    const double g = 0.9;
    RngStream rng(c.seed, 2);
    double s = 0.0;
    double s2 = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double mu = dot(sample_hg(g, rng, kE3), kE3);
      s += mu;
      s2 += mu * mu;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    checks.add("HG mean cosine within 4 SE", std::abs(mean - g) < 4.0 * se, {{"mean", mean}, {"se", se}});
  }

  report["checks"] = checks.items;
  report["pass"] = checks.ok;
  write_json(prepare_out(c) / "sample_test.json", report);
  return checks.ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo transport with singular scattering kernels"};
  app.require_subcommand(1);
  Overrides o;
  std::string reference;
  std::string candidate;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--workers", o.workers, "worker threads");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--no-correction", o.no_correction, "drop the small-jump diffusion term");
    sub->add_option("--n-particles", o.n_particles, "particle count override");
  };
  auto* validate = app.add_subcommand("validate", "spectral self-tests");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run");
  auto* compare = app.add_subcommand("compare", "Monte Carlo against the spectral reference");
  auto* sample = app.add_subcommand("sample-test", "sampler diagnostics");
  for (auto* s : {validate, simulate, compare, sample}) add_common(s);
  compare->add_option("--reference", reference, "reference profile CSV");
  compare->add_option("--candidate", candidate, "candidate profile CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*simulate) return cmd_simulate(o);
    if (*compare) return cmd_compare(o, reference, candidate);
    if (*sample) return cmd_sample_test(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
