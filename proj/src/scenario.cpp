#include "stochmech/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "stochmech/ensemble.hpp"
#include "stochmech/field_io.hpp"
#include "stochmech/madelung.hpp"
#include "stochmech/schrodinger.hpp"

namespace stochmech {

using nlohmann::json;
namespace fs = std::filesystem;

PhysicalParams PhysicsSpec::params() const {
  if (diffusion.has_value() == hbar.has_value()) throw ConfigInvalid({"physics: give exactly one of D or hbar"});
  return diffusion ? PhysicalParams::from_diffusion(mass, *diffusion) : PhysicalParams::from_hbar(mass, *hbar);
}

// -- configuration ---------------------------------------------------------

namespace {

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  const json* section(const char* name, bool required = true) {
    if (!root_.contains(name)) {
      if (required) problems.push_back(std::string(name) + ": missing");
      return nullptr;
    }
    if (!root_.at(name).is_object()) {
      problems.push_back(std::string(name) + ": must be an object");
      return nullptr;
    }
    return &root_.at(name);
  }

  template <class T>
  std::optional<T> get(const json* obj, const std::string& where, const char* key, bool required = true) {
    if (obj == nullptr) return std::nullopt;
    if (!obj->contains(key)) {
      if (required) problems.push_back(where + "." + key + ": missing");
      return std::nullopt;
    }
    try {
      return obj->at(key).get<T>();
    } catch (const json::exception&) {
      problems.push_back(where + "." + key + ": wrong type");
      return std::nullopt;
    }
  }

  void check(bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  }

  std::vector<std::string> problems;

 private:
  const json& root_;
};

std::array<double, 2> to_pair(const std::vector<double>& v) {
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t a = 0; a < v.size() && a < 2; ++a) out[a] = v[a];
  return out;
}

bool is_multiple(double t, double dt) {
  const double k = std::round(t / dt);
  return std::abs(t - k * dt) <= 1e-9 * std::max(1.0, std::abs(t));
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigInvalid({"configuration must be a JSON object"});
  Validator v(j);
  ScenarioConfig c;

  static const char* known[] = {"name", "grid", "physics", "potential", "initial", "ensemble", "schedule", "outputs", "classical", "$schema"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      v.problems.push_back(key + ": unknown section");
    }
  }

  c.name = v.get<std::string>(&j, "config", "name").value_or("");
  v.check(!c.name.empty(), "name: must be a nonempty string");

  int dim = 1;
  if (const json* g = v.section("grid")) {
    dim = v.get<int>(g, "grid", "dim").value_or(1);
    v.check(dim == 1 || dim == 2, "grid.dim: must be 1 or 2");
    dim = std::clamp(dim, 1, 2);
    auto ext = v.get<std::vector<std::vector<double>>>(g, "grid", "extents");
    auto n = v.get<std::vector<std::size_t>>(g, "grid", "n");
    c.grid.dt = v.get<double>(g, "grid", "dt").value_or(0.0);
    v.check(c.grid.dt > 0.0 && std::isfinite(c.grid.dt), "grid.dt: must be positive");
    if (ext && n) {
      if (ext->size() != static_cast<std::size_t>(dim) || n->size() != static_cast<std::size_t>(dim)) {
        v.problems.push_back("grid: extents and n need one entry per dimension");
      } else {
        for (int a = 0; a < dim; ++a) {
          const auto& e = (*ext)[a];
          const std::string where = "grid.extents[" + std::to_string(a) + "]";
          if (e.size() != 2 || !(e[0] < e[1])) {
            v.problems.push_back(where + ": must be [lo, hi] with lo < hi");
            continue;
          }
          v.check((*n)[a] >= 8, "grid.n[" + std::to_string(a) + "]: must be at least 8");
          c.grid.axes.push_back(Axis{e[0], e[1], (*n)[a]});
        }
      }
    }
  }

  if (const json* p = v.section("physics")) {
    c.physics.mass = v.get<double>(p, "physics", "m").value_or(0.0);
    v.check(c.physics.mass > 0.0, "physics.m: must be positive");
    c.physics.diffusion = v.get<double>(p, "physics", "D", false);
    c.physics.hbar = v.get<double>(p, "physics", "hbar", false);
    if (c.physics.diffusion.has_value() == c.physics.hbar.has_value()) {
      v.problems.push_back("physics: give exactly one of D or hbar");
    } else if (c.physics.diffusion) {
      v.check(*c.physics.diffusion > 0.0, "physics.D: must be positive");
    } else {
      v.check(*c.physics.hbar > 0.0, "physics.hbar: must be positive");
    }
  }

  if (const json* p = v.section("potential")) {
    try {
      c.potential = Potential::from_json(*p);
    } catch (const std::exception& e) {
      v.problems.push_back(std::string("potential: ") + e.what());
    }
  }

  if (const json* in = v.section("initial")) {
    c.initial.kind = v.get<std::string>(in, "initial", "kind").value_or("");
    const std::string& k = c.initial.kind;
    if (k == "gaussian") {
      auto x0 = v.get<std::vector<double>>(in, "initial", "x0");
      auto p0 = v.get<std::vector<double>>(in, "initial", "p0");
      if (x0) v.check(x0->size() == static_cast<std::size_t>(dim), "initial.x0: needs one entry per dimension");
      if (p0) v.check(p0->size() == static_cast<std::size_t>(dim), "initial.p0: needs one entry per dimension");
      c.initial.x0 = to_pair(x0.value_or(std::vector<double>{}));
      c.initial.p0 = to_pair(p0.value_or(std::vector<double>{}));
      c.initial.sigma0 = v.get<double>(in, "initial", "sigma0").value_or(0.0);
      v.check(c.initial.sigma0 > 0.0, "initial.sigma0: must be positive");
    } else if (k == "ground_state") {
    } else if (k == "vortex") {
      v.check(dim == 2, "initial: vortex needs a 2D grid");
      c.initial.x0 = to_pair(v.get<std::vector<double>>(in, "initial", "x0", false).value_or(std::vector<double>{}));
      c.initial.charge = v.get<int>(in, "initial", "charge", false).value_or(1);
      c.initial.width = v.get<double>(in, "initial", "width", false).value_or(1.0);
      v.check(c.initial.charge != 0, "initial.charge: must be nonzero");
      v.check(c.initial.width > 0.0, "initial.width: must be positive");
    } else if (k == "file") {
      c.initial.file = v.get<std::string>(in, "initial", "file").value_or("");
      v.check(!c.initial.file.empty(), "initial.file: must name a field file");
    } else {
      v.problems.push_back("initial.kind: must be one of gaussian, ground_state, vortex, file");
    }
  }

  if (const json* e = v.section("ensemble", false)) {
    EnsembleSpec es;
    es.n = v.get<std::size_t>(e, "ensemble", "n").value_or(0);
    es.seed = v.get<std::uint64_t>(e, "ensemble", "seed").value_or(0);
    es.bandwidth = v.get<double>(e, "ensemble", "bandwidth", false).value_or(0.0);
    v.check(es.n >= 1, "ensemble.n: must be at least 1");
    v.check(es.bandwidth >= 0.0, "ensemble.bandwidth: must be nonnegative");
    c.ensemble = es;
  }

  if (const json* s = v.section("schedule")) {
    c.schedule.t_end = v.get<double>(s, "schedule", "t_end").value_or(0.0);
    c.schedule.snapshots = v.get<std::vector<double>>(s, "schedule", "snapshots", false).value_or(std::vector<double>{});
    c.schedule.checkpoint_every = v.get<std::size_t>(s, "schedule", "checkpoint_every", false).value_or(0);
    v.check(c.schedule.t_end > 0.0, "schedule.t_end: must be positive");
    if (c.grid.dt > 0.0) {
      v.check(is_multiple(c.schedule.t_end, c.grid.dt), "schedule.t_end: must be a multiple of grid.dt");
      for (double t : c.schedule.snapshots) {
        v.check(t >= 0.0 && t <= c.schedule.t_end * (1.0 + 1e-12), "schedule.snapshots: " + format_double(t) + " outside [0, t_end]");
        v.check(is_multiple(t, c.grid.dt), "schedule.snapshots: " + format_double(t) + " is not a multiple of grid.dt");
      }
    }
  }

  if (const json* o = v.section("outputs")) {
    c.outputs.directory = v.get<std::string>(o, "outputs", "directory").value_or("");
    v.check(!c.outputs.directory.empty(), "outputs.directory: must be nonempty");
    c.outputs.formats = v.get<std::vector<std::string>>(o, "outputs", "formats", false).value_or(std::vector<std::string>{"csv"});
    for (const auto& f : c.outputs.formats) v.check(f == "csv" || f == "ndjson", "outputs.formats: unknown format '" + f + "'");
  }

  if (const json* cl = v.section("classical", false)) {
    ClassicalSpec cs;
    auto init = v.get<std::vector<std::vector<double>>>(cl, "classical", "initial");
    if (init) {
      for (const auto& row : *init) {
        if (row.size() != static_cast<std::size_t>(2 * dim)) {
          v.problems.push_back("classical.initial: each entry needs dim positions then dim momenta");
          continue;
        }
        InitialCondition ic;
        for (int a = 0; a < dim; ++a) {
          ic.x[a] = row[a];
          ic.p[a] = row[dim + a];
        }
        cs.initial.push_back(ic);
      }
    }
    cs.t_end = v.get<double>(cl, "classical", "t_end").value_or(0.0);
    cs.dt = v.get<double>(cl, "classical", "dt").value_or(0.0);
    cs.record_every = v.get<std::size_t>(cl, "classical", "record_every", false).value_or(10);
    v.check(cs.t_end > 0.0, "classical.t_end: must be positive");
    v.check(cs.dt > 0.0, "classical.dt: must be positive");
    v.check(cs.record_every >= 1, "classical.record_every: must be at least 1");
    c.classical = cs;
  }

  if (!v.problems.empty()) throw ConfigInvalid(v.problems);
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigInvalid({std::string("not valid JSON: ") + e.what()});
  }
  return from_json(j);
}

json ScenarioConfig::to_json() const {
  json ext = json::array(), ns = json::array();
  for (const auto& ax : grid.axes) {
    ext.push_back({ax.lo, ax.hi});
    ns.push_back(ax.n);
  }
  const auto dim = grid.axes.size();
  auto vec = [&](const std::array<double, 2>& a) { return std::vector<double>(a.begin(), a.begin() + dim); };

  json j;
  j["name"] = name;
  j["grid"] = {{"dim", dim}, {"extents", ext}, {"n", ns}, {"dt", grid.dt}};
  json ph{{"m", physics.mass}};
  if (physics.diffusion) ph["D"] = *physics.diffusion;
  if (physics.hbar) ph["hbar"] = *physics.hbar;
  j["physics"] = ph;
  j["potential"] = potential.to_json();
  json in{{"kind", initial.kind}};
  if (initial.kind == "gaussian") {
    in["x0"] = vec(initial.x0);
    in["p0"] = vec(initial.p0);
    in["sigma0"] = initial.sigma0;
  } else if (initial.kind == "vortex") {
    in["x0"] = vec(initial.x0);
    in["charge"] = initial.charge;
    in["width"] = initial.width;
  } else if (initial.kind == "file") {
    in["file"] = initial.file;
  }
  j["initial"] = in;
  if (ensemble) j["ensemble"] = {{"n", ensemble->n}, {"seed", ensemble->seed}, {"bandwidth", ensemble->bandwidth}};
  j["schedule"] = {{"t_end", schedule.t_end}, {"snapshots", schedule.snapshots}, {"checkpoint_every", schedule.checkpoint_every}};
  j["outputs"] = {{"directory", outputs.directory}, {"formats", outputs.formats}};
  if (classical) {
    json rows = json::array();
    for (const auto& ic : classical->initial) {
      std::vector<double> row = vec(ic.x);
      for (std::size_t a = 0; a < dim; ++a) row.push_back(ic.p[a]);
      rows.push_back(row);
    }
    j["classical"] = {{"initial", rows}, {"t_end", classical->t_end}, {"dt", classical->dt}, {"record_every", classical->record_every}};
  }
  return j;
}

std::size_t ScenarioConfig::step_count() const {
  return static_cast<std::size_t>(std::llround(schedule.t_end / grid.dt));
}

std::vector<std::size_t> ScenarioConfig::snapshot_steps() const {
  std::vector<std::size_t> steps;
  for (double t : schedule.snapshots) steps.push_back(static_cast<std::size_t>(std::llround(t / grid.dt)));
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

ComplexField initial_state(const ScenarioConfig& cfg) {
  const Grid g = cfg.grid.grid();
  const PhysicalParams p = cfg.physics.params();
  const InitialSpec& in = cfg.initial;
  ComplexField psi(g);
  if (in.kind == "gaussian") {
    psi = analytic_gaussian_packet(in.x0, in.p0, in.sigma0, 0.0, p, g);
  } else if (in.kind == "ground_state") {
    psi = ground_state_imaginary_time(cfg.potential, p, g).psi;
  } else if (in.kind == "vortex") {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto x = g.point(i);
      const double dx = x[0] - in.x0[0], dy = x[1] - in.x0[1];
      const Complex z(dx, in.charge > 0 ? dy : -dy);
      psi[i] = std::pow(z, std::abs(in.charge)) * std::exp(-(dx * dx + dy * dy) / (in.width * in.width));
    }
  } else if (in.kind == "file") {
    psi = complex_field_from(read_table_file(in.file));
    if (!(psi.grid.axes() == g.axes())) throw ConfigInvalid({"initial.file: field grid does not match the configured grid"});
    psi = ComplexField(g, psi.values);
  } else {
    throw ConfigInvalid({"initial.kind: unknown '" + in.kind + "'"});
  }
  normalize(psi);
  return psi;
}

// -- reports -----------------------------------------------------------------

json SnapshotReport::to_json() const {
  json j{{"step", step}, {"t", t}, {"norm", norm}, {"energy", energy}};
  if (comparison) j["comparison"] = comparison->to_json();
  if (!sample_mean.empty()) j["sample_moments"] = {{"mean", sample_mean}, {"variance", sample_variance}};
  if (continuity_max) j["continuity_residual_max"] = *continuity_max;
  if (hj_max) j["hj_residual_max"] = *hj_max;
  if (kinetic_mean) j["kinetic_mean"] = *kinetic_mean;
  if (kinetic_mean_particles) j["kinetic_mean_particles"] = *kinetic_mean_particles;
  if (multivalued_winding) j["multivalued_winding"] = *multivalued_winding;
  return j;
}

json RunReport::to_json() const {
  json snaps = json::array();
  for (const auto& s : snapshots) snaps.push_back(s.to_json());
  return {{"name", name},         {"steps", steps},         {"snapshots", snaps},
          {"warnings", warnings}, {"particles", particles}, {"escaped", escaped},
          {"escaped_fraction", particles ? static_cast<double>(escaped) / static_cast<double>(particles) : 0.0}};
}

// -- checkpoints -------------------------------------------------------------

void write_checkpoint(const std::string& path, const ComplexField& psi, const PhysicalParams& p, const Potential& u,
                      double t) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  json meta{{"t", t}, {"params", {{"m", p.mass()}, {"D", p.diffusion()}, {"hbar", p.hbar()}}}, {"potential", u.to_json()}};
  write_field_ndjson(out, psi, meta);
}

Checkpoint read_checkpoint(const std::string& path) {
  FieldTable t = read_table_file(path);
  const json& h = t.header;
  if (!h.contains("params") || !h.contains("t")) throw IoError("'" + path + "' is not a checkpoint (no params/t in header)");
  const auto& pj = h.at("params");
  // Rebuild from whichever of D or hbar was the given one.
  const double m = pj.at("m").get<double>(), d = pj.at("D").get<double>(), hbar = pj.at("hbar").get<double>();
  PhysicalParams p = PhysicalParams::from_diffusion(m, d);
  if (p.hbar() != hbar) p = PhysicalParams::from_hbar(m, hbar);
  if (p.diffusion() != d) throw IoError("'" + path + "': inconsistent D and hbar in checkpoint");
  Potential u = h.contains("potential") ? Potential::from_json(h.at("potential")) : Potential::free();
  return {complex_field_from(t), p, u, h.at("t").get<double>()};
}

// -- diagnostics -------------------------------------------------------------

std::vector<json> diagnose(const ComplexField& psi, const PhysicalParams& p, double t, const DiagnoseOptions& opts) {
  std::vector<json> findings;
  const Grid& g = psi.grid;
  MadelungFields f = decompose(psi, p, t, {opts.eps_rel, true, nullptr});
  if (f.winding != 0) {
    findings.push_back({{"type", "multivalued_phase"}, {"t", t}, {"winding", f.winding}});
  }
  double rho_max = 0.0;
  for (double r : f.rho.values) rho_max = std::max(rho_max, r);
  const double eps = opts.nodal_eps.value_or(1e-6 * rho_max);
  const NodalReport report = detect_nodal_regions(f, eps, opts.speed_threshold);
  for (const auto& region : report.regions) {
    std::array<double, 2> centre{0.0, 0.0};
    for (std::size_t i : region.points) {
      const auto x = g.point(i);
      centre[0] += x[0];
      centre[1] += x[1];
    }
    centre[0] /= static_cast<double>(region.points.size());
    centre[1] /= static_cast<double>(region.points.size());
    json rec{{"type", "nodal_region"},
             {"t", t},
             {"points", region.points.size()},
             {"rho_max", region.rho_max},
             {"speed_min", region.speed_min},
             {"speed_max", region.speed_max},
             {"speed_threshold", report.speed_threshold},
             {"flagged", region.flagged},
             {"center", std::vector<double>(centre.begin(), centre.begin() + g.dim())}};
    if (g.dim() == 2) {
      // Winding on a small circle around the node.
      const double r = 4.0 * g.max_spacing() + std::sqrt(static_cast<double>(region.points.size()) * g.cell_volume());
      try {
        rec["winding"] = winding_number(psi, circle_loop(g, centre[0], centre[1], r), opts.eps_rel);
      } catch (const Error&) {
        rec["winding"] = nullptr;
      }
    }
    findings.push_back(rec);
  }
  return findings;
}

// -- pipeline ----------------------------------------------------------------

namespace {

bool wants(const OutputSpec& o, const char* fmt) {
  return std::find(o.formats.begin(), o.formats.end(), fmt) != o.formats.end();
}

std::string step_tag(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08zu", step);
  return buf;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

double boundary_density(const ComplexField& psi) {
  double m = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi.grid.on_boundary(i)) m = std::max(m, std::norm(psi[i]));
  }
  return m;
}

void write_madelung_csv(const fs::path& path, const MadelungFields& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  std::vector<Column> cols{{"rho", &f.rho.values}, {"S", &f.S.values}, {"v_x", &f.v.components[0]}};
  if (f.v.components.size() > 1) cols.push_back({"v_y", &f.v.components[1]});
  cols.push_back({"qpot", &f.qpot.values});
  write_csv(out, f.rho.grid, cols);
}

const char* kPlotScript = R"(# Plot helper for stochmech outputs. Edit freely; it is regenerated only when missing.
import csv, glob, json, sys

def load(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(l for l in fh if not l.startswith("#"))]
    head, body = rows[0], rows[1:]
    return {h: [float(r[i]) for r in body] for i, h in enumerate(head)}

if __name__ == "__main__":
    import matplotlib.pyplot as plt
    for path in sorted(glob.glob("snapshot_*_density.csv")):
        d = load(path)
        plt.plot(d["x"], d["empirical"], label=path + " ensemble")
        plt.plot(d["x"], d["reference"], "--", label=path + " |psi|^2")
    plt.legend()
    plt.savefig("densities.png")
)";

}  // namespace

RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  const Grid g = cfg.grid.grid();
  const PhysicalParams p = cfg.physics.params();
  const bool with_ensemble = opts.mode == RunMode::ensemble;
  if (with_ensemble && !cfg.ensemble) throw ConfigInvalid({"ensemble: required for the ensemble pipeline"});

  const fs::path outdir = cfg.outputs.directory;
  if (!opts.dry) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create output directory '" + outdir.string() + "': " + ec.message());
  }

  ComplexField psi = initial_state(cfg);
  const CrankNicolson forward(g, cfg.potential, p, g.dt());
  const std::size_t steps = cfg.step_count();
  const std::vector<std::size_t> snaps = cfg.snapshot_steps();
  std::size_t next_snap = 0;

  std::optional<ParticleEnsemble> ens;
  if (with_ensemble) ens = sample_initial(density(psi), cfg.ensemble->n, cfg.ensemble->seed);

  RunReport report{cfg.name, steps, {}, {}, 0, ens ? ens->size() : 0, psi};
  std::vector<json> findings;
  std::optional<ScalarField> gauge;  // S at the previous snapshot
  ComplexField previous = psi;
  bool boundary_warned = false;

  auto warn = [&](const std::string& msg) {
    report.warnings.push_back(msg);
    if (!opts.quiet) std::cerr << "warning: " << msg << '\n';
  };

  for (std::size_t k = 0;; ++k) {
    if (!boundary_warned && boundary_density(psi) > 1e-10) {
      boundary_warned = true;
      warn("|psi|^2 at the grid boundary exceeds 1e-10 at t=" + format_double(static_cast<double>(k) * g.dt()) +
           "; enlarge the grid");
    }
    const bool snapshot = next_snap < snaps.size() && snaps[next_snap] == k;
    const bool last = k == steps;
    ComplexField next = last && !snapshot ? psi : forward.step(psi);

    if (cfg.schedule.checkpoint_every > 0 && k % cfg.schedule.checkpoint_every == 0 && !opts.dry) {
      write_checkpoint((outdir / ("checkpoint_" + step_tag(k) + ".ndjson")).string(), psi, p, cfg.potential,
                       static_cast<double>(k) * g.dt());
    }

    if (snapshot) {
      ++next_snap;
      const double t = static_cast<double>(k) * g.dt();
      SnapshotReport s;
      s.step = k;
      s.t = t;
      s.norm = norm_squared(psi);
      s.energy = energy(psi, cfg.potential, p);
      if (opts.keep_states) s.psi = psi;
      const ScalarField rho = density(psi);

      try {
        const ComplexField before = k == 0 ? CrankNicolson(g, cfg.potential, p, -g.dt()).step(psi) : previous;
        DecomposeOptions dopt;
        if (gauge) dopt.gauge_reference = &*gauge;
        const MadelungFields now = decompose(psi, p, t, dopt);
        const MadelungFields f_before = decompose(before, p, t - g.dt(), {1e-6, false, &now.S});
        const MadelungFields f_after = decompose(next, p, t + g.dt(), {1e-6, false, &now.S});
        s.continuity_max = continuity_residual(f_before, f_after, p).max_abs();
        s.hj_max = hj_residual(f_before, now, f_after, cfg.potential, p).max_abs();
        const KineticEnergyReport ke = kinetic_energy_estimate(now, p);
        s.kinetic_mean = ke.T_mean;
        if (ens) s.kinetic_mean_particles = particle_average(*ens, ke.T_field);
        gauge = now.S;
        if (!opts.dry && wants(cfg.outputs, "csv")) write_madelung_csv(outdir / ("snapshot_" + step_tag(k) + "_fields.csv"), now);
      } catch (const MultivaluedPhase& e) {
        s.multivalued_winding = e.winding();
        findings.push_back({{"type", "multivalued_phase"}, {"t", t}, {"winding", e.winding()}, {"loop_points", e.loop().size()}});
      }
      for (auto& rec : diagnose(psi, p, t)) {
        if (rec["type"] == "nodal_region") findings.push_back(std::move(rec));
      }

      if (!opts.dry && wants(cfg.outputs, "ndjson")) {
        std::ofstream out(outdir / ("snapshot_" + step_tag(k) + "_psi.ndjson"));
        write_field_ndjson(out, psi, {{"t", t}});
      }

      if (ens) {
        const DensityEstimate est = estimate_density(*ens, g, cfg.ensemble->bandwidth);
        s.comparison = compare_densities(est.density, rho, est.counted);
        const SampleMoments mom = sample_moments(*ens);
        s.sample_mean = mom.mean;
        s.sample_variance = mom.variance;
        if (!opts.dry) {
          std::ofstream out(outdir / ("snapshot_" + step_tag(k) + "_density.csv"));
          write_csv(out, g, {{"empirical", &est.density.values}, {"reference", &rho.values}});
          write_json_file(outdir / ("snapshot_" + step_tag(k) + "_comparison.json"), s.comparison->to_json());
        }
      }
      if (!opts.quiet) {
        std::cerr << "t=" << format_double(t) << " norm=" << format_double(s.norm);
        if (s.comparison) std::cerr << " kl=" << s.comparison->kl;
        std::cerr << '\n';
      }
      report.snapshots.push_back(std::move(s));
    }

    if (last) break;
    if (ens) step_ensemble_in_place(*ens, mean_velocity(psi, p), p.diffusion(), g.dt(), opts.exec);
    previous = std::move(psi);
    psi = std::move(next);
  }

  report.final_psi = psi;
  if (ens) {
    report.escaped = ens->escaped;
    if (ens->escaped > 0) {
      warn(std::to_string(ens->escaped) + " particle moves left the grid and were clamped");
    }
  }

  if (!opts.dry) {
    json summary = report.to_json();
    summary["config"] = cfg.to_json();
    // Keep the output relocatable: identical runs in different directories match byte for byte.
    summary["config"]["outputs"].erase("directory");
    write_json_file(outdir / "summary.json", summary);
    std::ofstream diag(outdir / "diagnostics.ndjson");
    for (const auto& f : findings) diag << f.dump() << '\n';
    const fs::path plot = outdir / "plot_snapshots.py";
    if (!fs::exists(plot)) std::ofstream(plot) << kPlotScript;
  }
  return report;
}

// -- classical runs -------------------------------------------------------------

json ClassicalRunReport::to_json() const {
  json traj = json::array();
  for (std::size_t i = 0; i < bundle.trajectories.size(); ++i) {
    const auto& tr = bundle.trajectories[i];
    const std::size_t last = bundle.times.size() - 1;
    traj.push_back({{"id", i},
                    {"x_end", std::vector<double>(tr.x.begin() + last * bundle.dim, tr.x.end())},
                    {"p_end", std::vector<double>(tr.p.begin() + last * bundle.dim, tr.p.end())},
                    {"max_energy_drift", tr.max_energy_drift}});
  }
  json ca = json::array();
  for (const auto& c : caustics) ca.push_back({{"t", c.t}, {"first", c.first}, {"second", c.second}});
  return {{"t_end", bundle.times.back()}, {"trajectories", traj}, {"caustics", ca}};
}

ClassicalRunReport run_classical(const ScenarioConfig& cfg, bool write_outputs) {
  if (!cfg.classical) throw ConfigInvalid({"classical: section required for the classical run"});
  const ClassicalSpec& cs = *cfg.classical;
  const int dim = static_cast<int>(cfg.grid.axes.size());
  ClassicalRunReport r{integrate_characteristics(cfg.potential, cfg.physics.mass, cs.initial, cs.t_end, cs.dt, dim), {}};
  if (dim == 1) r.caustics = detect_caustics(r.bundle);
  if (write_outputs) {
    const fs::path outdir = cfg.outputs.directory;
    fs::create_directories(outdir);
    std::ofstream out(outdir / "trajectories.csv");
    if (!out) throw IoError("cannot write trajectories.csv");
    out << (dim == 1 ? "t,id,x,p\n" : "t,id,x,y,p_x,p_y\n");
    const auto& b = r.bundle;
    for (std::size_t s = 0; s < b.times.size(); ++s) {
      if (s % cs.record_every != 0 && s + 1 != b.times.size()) continue;
      for (std::size_t i = 0; i < b.trajectories.size(); ++i) {
        out << format_double(b.times[s]) << ',' << i;
        for (int a = 0; a < dim; ++a) out << ',' << format_double(b.x(i, s, a));
        for (int a = 0; a < dim; ++a) out << ',' << format_double(b.p(i, s, a));
        out << '\n';
      }
    }
    write_json_file(outdir / "classical_summary.json", r.to_json());
  }
  return r;
}

}  // namespace stochmech
