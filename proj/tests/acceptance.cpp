// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "stochmech/classical.hpp"
#include "stochmech/ensemble.hpp"
#include "stochmech/madelung.hpp"
#include "stochmech/scenario.hpp"
#include "stochmech/schrodinger.hpp"

using namespace stochmech;
using nlohmann::json;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScenarioConfig free_packet(std::size_t n_grid, double dt, std::optional<std::size_t> particles, double t_end,
                           std::vector<double> snapshots) {
  json j{{"name", "free_packet"},
         {"grid", {{"dim", 1}, {"extents", {{-12.0, 12.0}}}, {"n", {n_grid}}, {"dt", dt}}},
         {"physics", {{"m", 1.0}, {"hbar", 1.0}}},
         {"potential", {{"kind", "free"}}},
         {"initial", {{"kind", "gaussian"}, {"x0", {0.0}}, {"p0", {0.0}}, {"sigma0", 1.0}}},
         {"schedule", {{"t_end", t_end}, {"snapshots", snapshots}}},
         {"outputs", {{"directory", "unused"}, {"formats", {"csv"}}}}};
  if (particles) j["ensemble"] = {{"n", *particles}, {"seed", 20240601}, {"bandwidth", 0.0}};
  return ScenarioConfig::from_json(j);
}

RunOptions quiet_dry(RunMode mode) {
  RunOptions o;
  o.mode = mode;
  o.quiet = true;
  o.dry = true;
  return o;
}

// 1 and 2 share one run.
std::optional<RunReport> g_free_run;
double g_free_seconds = 0.0;

const RunReport& free_run() {
  if (!g_free_run) {
    const auto t0 = std::chrono::steady_clock::now();
    g_free_run = run_scenario(free_packet(512, 1e-3, 200000, 1.0, {0.5, 1.0}), quiet_dry(RunMode::ensemble));
    g_free_seconds = seconds_since(t0);
  }
  return *g_free_run;
}

Outcome criterion1() {
  Outcome o;
  const RunReport& r = free_run();
  const ComparisonReport& c = *r.snapshots.back().comparison;
  o.require(c.kl < 5e-3, "KL " + fmt("%.2e", c.kl) + " < 5e-3");
  o.require(c.w1 < 0.02, "W1 " + fmt("%.2e", c.w1) + " < 0.02");
  o.require(g_free_seconds < 60.0, "runtime " + fmt("%.1f", g_free_seconds) + " s < 60 s");
  o.require(static_cast<double>(r.escaped) / static_cast<double>(r.particles) < 1e-4, "escaped " + std::to_string(r.escaped));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const RunReport& r = free_run();
  const auto p = PhysicalParams::from_hbar(1.0, 1.0);
  for (const auto& s : r.snapshots) {
    const double expected = gaussian_packet_variance(1.0, s.t, p);
    const double rel = std::abs(s.sample_variance[0] - expected) / expected;
    o.require(rel < 0.02, "t=" + fmt("%.1f", s.t) + " var " + fmt("%.4f", s.sample_variance[0]) + " vs " +
                              fmt("%.4f", expected) + " (" + fmt("%.2f", 100 * rel) + "%)");
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::vector<double> snaps;
  for (int k = 0; k <= 10; ++k) snaps.push_back(std::round(2.0 * pi * k / 0.01) * 0.01);
  json j{{"name", "harmonic_ground"},
         {"grid", {{"dim", 1}, {"extents", {{-8.0, 8.0}}}, {"n", {256}}, {"dt", 0.01}}},
         {"physics", {{"m", 1.0}, {"D", 0.5}}},
         {"potential", {{"kind", "harmonic"}, {"k", 1.0}}},
         {"initial", {{"kind", "ground_state"}}},
         {"ensemble", {{"n", 100000}, {"seed", 7}, {"bandwidth", 0.0}}},
         {"schedule", {{"t_end", snaps.back()}, {"snapshots", snaps}}},
         {"outputs", {{"directory", "unused"}, {"formats", {"csv"}}}}};
  const RunReport r = run_scenario(ScenarioConfig::from_json(j), quiet_dry(RunMode::ensemble));
  // T_mean is the density-weighted integral of the kinetic field; the particle
  // average of the same field is reported alongside for information.
  double kl_max = 0.0, tmin = 1e300, tmax = -1e300, pmin = 1e300, pmax = -1e300;
  for (const auto& s : r.snapshots) {
    kl_max = std::max(kl_max, s.comparison->kl);
    tmin = std::min(tmin, *s.kinetic_mean);
    tmax = std::max(tmax, *s.kinetic_mean);
    pmin = std::min(pmin, *s.kinetic_mean_particles);
    pmax = std::max(pmax, *s.kinetic_mean_particles);
  }
  const double t0 = *r.snapshots.front().kinetic_mean;
  const double spread = (tmax - tmin) / std::abs(t0);
  o.require(kl_max < 1e-2, "max KL over 11 snapshots " + fmt("%.2e", kl_max) + " < 1e-2");
  o.require(spread < 0.01, "T_mean " + fmt("%.6f", t0) + " spread " + fmt("%.1e", 100 * spread) + "% < 1%");
  o.detail += "; particle average in [" + fmt("%.4f", pmin) + ", " + fmt("%.4f", pmax) + "]";
  return o;
}

Outcome criterion4() {
  Outcome o;
  double cont[2], hj[2];
  const std::size_t ns[2] = {512, 1023};
  const double dts[2] = {1e-3, 5e-4};
  for (int level = 0; level < 2; ++level) {
    const RunReport r = run_scenario(free_packet(ns[level], dts[level], std::nullopt, 0.5, {0.5}), quiet_dry(RunMode::solve));
    cont[level] = *r.snapshots[0].continuity_max;
    hj[level] = *r.snapshots[0].hj_max;
  }
  const double rc = cont[0] / cont[1], rh = hj[0] / hj[1];
  o.require(rc >= 3.5 && rc <= 4.5, "continuity " + fmt("%.2e", cont[0]) + " -> " + fmt("%.2e", cont[1]) +
                                        " ratio " + fmt("%.2f", rc));
  o.require(rh >= 3.5 && rh <= 4.5,
            "HJ " + fmt("%.2e", hj[0]) + " -> " + fmt("%.2e", hj[1]) + " ratio " + fmt("%.2f", rh));
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  ComDiffusionConfig cfg;
  cfg.diffusion = 0.5;
  cfg.ensembles = 200;
  cfg.steps = 500;
  cfg.dt = 0.01;
  cfg.seed = 1;
  double prev = 0.0;
  bool monotone = true;
  std::string fits;
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    cfg.n_particles = n;
    const ComDiffusionResult r = com_diffusion_experiment(cfg);
    const double expected = 0.5 / static_cast<double>(n);
    const double rel = std::abs(r.d_com_fit - expected) / expected;
    o.require(rel < 0.05, "n=" + std::to_string(n) + " D_com " + fmt("%.4f", r.d_com_fit) + " (" +
                              fmt("%.1f", 100 * rel) + "%)");
    if (n > 1) monotone = monotone && r.d_com_fit < prev;
    prev = r.d_com_fit;
  }
  o.require(monotone, "decreasing in n");
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime " + fmt("%.2f", secs) + " s < 30 s");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const Potential u = Potential::harmonic(1.0);
  const auto b = integrate_characteristics(u, 1.0, {{{1.0, 0.0}, {0.0, 0.0}}}, 10.0, 1e-3);
  const double dx = std::abs(b.x(0, b.times.size() - 1) - std::cos(10.0));
  o.require(dx < 1e-6, "|x(10) - cos 10| " + fmt("%.1e", dx));

  const double dt = 1.0 / 1024.0, t = 0.5;
  const Grid g = Grid::line(-2, 2, 801, dt);
  const InitialAction s0{[](double) { return 0.0; }, [](double) { return 0.0; }};
  auto s_at = [&](double time) { return action_from_characteristics(u, 1.0, s0, g, time, 1e-3, -4.0, 4.0); };
  const ScalarField sb = s_at(t - dt), sn = s_at(t), sa = s_at(t + dt);
  const Residual rc = classical_hj_residual(sb, sn, sa, dt, u, 1.0);
  o.require(rc.max_abs() < 1e-4, "classical HJ residual " + fmt("%.1e", rc.max_abs()));

  const auto p = PhysicalParams::classical(1.0);
  ScalarField rho(g);
  for (std::size_t i = 0; i < g.size(); ++i) rho[i] = std::exp(-g.point(i)[0] * g.point(i)[0]);
  const Residual rq = hj_residual(from_density_and_action(rho, sb, p, t - dt), from_density_and_action(rho, sn, p, t),
                                  from_density_and_action(rho, sa, p, t + dt), u, p);
  double diff = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (rq.mask[i] && rc.mask[i]) {
      diff = std::max(diff, std::abs(rq.values[i] - rc.values[i]));
      ++n;
    }
  }
  o.require(n > 700 && diff <= 1e-15, "quantum(D=0) vs classical max diff " + fmt("%.1e", diff));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto p = PhysicalParams::from_hbar(1.0, 1.0);
  const Grid g2 = Grid::plane({-3, 3, 61}, {-3, 3, 61}, 0.01);
  ComplexField vortex(g2);
  for (std::size_t i = 0; i < g2.size(); ++i) {
    const auto x = g2.point(i);
    vortex[i] = Complex(x[0], x[1]) * std::exp(-(x[0] * x[0] + x[1] * x[1]));
  }
  normalize(vortex);
  const auto loop = circle_loop(g2, 0.0, 0.0, 1.0);
  const int w = winding_number(vortex, loop);
  bool multivalued = false;
  try {
    (void)unwrap_phase(vortex);
  } catch (const MultivaluedPhase& e) {
    multivalued = e.winding() == 1;
  }
  o.require(w == 1 && multivalued, "vortex winding " + std::to_string(w) + ", unwrap MultivaluedPhase");
  const int wg = winding_number(analytic_gaussian_packet({0.0, 0.0}, {1.0, 0.5}, 1.0, 0.3, p, g2), loop);
  o.require(wg == 0, "Gaussian winding " + std::to_string(wg));

  // Two-level superposition sampled at the grid time step.
  const double h = 1.0 / (32.0 * std::sqrt(2.0));
  const Grid g = Grid::line(-256.0 * h, 256.0 * h, 513, 0.01);
  auto superposition = [&](double t) {
    ComplexField psi(g);
    const double c = std::pow(pi, -0.25) / std::sqrt(2.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.point(i)[0], e = std::exp(-x * x / 2.0);
      psi[i] = c * (std::polar(1.0, -0.5 * t) * e + std::polar(1.0, -1.5 * t) * std::sqrt(2.0) * x * e);
    }
    return psi;
  };
  NodalReport rep;
  double t_found = -1.0;
  for (int k = 1; k <= 700 && t_found < 0; ++k) {
    rep = detect_nodal_regions(decompose(superposition(k * g.dt()), p, k * g.dt()), 5e-5);
    if (rep.count > 0) t_found = k * g.dt();
  }
  // Zero instants are t = m pi; at t = 0 itself psi is real and carries no current.
  const double zero_instant = std::round(t_found / pi) * pi;
  o.require(rep.flagged == 1 && std::abs(t_found - zero_instant) <= 1.000001 * g.dt(),
            "superposition node at t=" + fmt("%.2f", t_found) + " flagged " + std::to_string(rep.flagged) +
                (rep.count ? " (speed " + fmt("%.1f", rep.regions[0].speed_max) + " > " +
                                 fmt("%.1f", rep.speed_threshold) + ")"
                           : ""));

  // First excited state, node at x = 0, real.
  const Grid g1 = Grid::line(-6, 6, 241, 0.01);
  ComplexField psi1(g1);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    const double x = g1.point(i)[0];
    psi1[i] = x * std::exp(-x * x / 2.0);
  }
  normalize(psi1);
  const NodalReport r1 = detect_nodal_regions(decompose(psi1, p), 1e-6);
  o.require(r1.count == 1 && r1.flagged == 0, "first excited: " + std::to_string(r1.count) + " node, " +
                                                  std::to_string(r1.flagged) + " flagged");
  return o;
}

Outcome criterion8() {
  Outcome o;
  json ja{{"name", "identity"},
          {"grid", {{"dim", 1}, {"extents", {{-10.0, 10.0}}}, {"n", {300}}, {"dt", 0.005}}},
          {"physics", {{"m", 2.0}, {"D", 0.25}}},
          {"potential", {{"kind", "harmonic"}, {"k", 0.5}}},
          {"initial", {{"kind", "gaussian"}, {"x0", {1.0}}, {"p0", {-0.5}}, {"sigma0", 0.8}}},
          {"schedule", {{"t_end", 1.0}, {"snapshots", {0.25, 0.5, 0.75, 1.0}}}},
          {"outputs", {{"directory", "unused"}, {"formats", {"csv"}}}}};
  json jb = ja;
  jb["physics"] = {{"m", 2.0}, {"hbar", 2.0 * 2.0 * 0.25}};
  const ScenarioConfig a = ScenarioConfig::from_json(ja), b = ScenarioConfig::from_json(jb);
  const PhysicalParams pa = a.physics.params(), pb = b.physics.params();
  o.require(pa == pb, "derived (m, D, hbar) identical");
  RunOptions opts = quiet_dry(RunMode::solve);
  opts.keep_states = true;
  const RunReport ra = run_scenario(a, opts), rb = run_scenario(b, opts);
  double diff = 0.0;
  for (std::size_t s = 0; s < ra.snapshots.size(); ++s) {
    const auto& x = *ra.snapshots[s].psi;
    const auto& y = *rb.snapshots[s].psi;
    for (std::size_t i = 0; i < x.size(); ++i) diff = std::max(diff, std::abs(x[i] - y[i]));
  }
  o.require(diff <= 1e-12, "max |psi_D - psi_hbar| " + fmt("%.1e", diff));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "stochmech_acceptance_determinism";
  fs::remove_all(root);
  const unsigned threads[3] = {1, 1, 4};
  for (int k = 0; k < 3; ++k) {
    ScenarioConfig cfg = free_packet(512, 1e-3, 50000, 0.2, {0.0, 0.1, 0.2});
    cfg.schedule.checkpoint_every = 100;
    cfg.outputs.formats = {"csv", "ndjson"};
    cfg.outputs.directory = (root / std::to_string(k)).string();
    RunOptions opts;
    opts.quiet = true;
    opts.exec.threads = threads[k];
    (void)run_scenario(cfg, opts);
  }
  std::size_t files = 0, same = 0;
  for (const auto& e : fs::directory_iterator(root / "0")) {
    ++files;
    const std::string a = slurp(e.path());
    same += a == slurp(root / "1" / e.path().filename()) && a == slurp(root / "2" / e.path().filename());
  }
  o.require(files > 5 && same == files, std::to_string(same) + "/" + std::to_string(files) +
                                            " files byte-identical across repeat and 1 vs 4 threads");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"ensemble density matches |psi|^2 (free packet)", criterion1},
      {"spreading law of the sample variance", criterion2},
      {"harmonic ground state stays stationary", criterion3},
      {"Madelung residuals converge at second order", criterion4},
      {"center-of-mass diffusion D/n", criterion5},
      {"classical limit D = 0", criterion6},
      {"winding and nodal diagnostics", criterion7},
      {"(m, D) and (m, hbar) give identical runs", criterion8},
      {"determinism across repeats and threads", criterion9},
  };
  int failed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed;
}
