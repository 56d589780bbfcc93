#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stochmech/field_io.hpp"
#include "stochmech/scenario.hpp"

using namespace stochmech;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) {
  const char* dir = std::getenv("STOCHMECH_SCENARIOS");
  return (fs::path(dir ? dir : "scenarios") / name).string();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "stochmech_test_scenario" / name;
  fs::remove_all(p);
  return p;
}

json small_config() {
  return json::parse(R"({
    "name": "small",
    "grid": {"dim": 1, "extents": [[-10, 10]], "n": [200], "dt": 0.01},
    "physics": {"m": 1.0, "D": 0.5},
    "potential": {"kind": "harmonic", "k": 0.5},
    "initial": {"kind": "gaussian", "x0": [0.5], "p0": [1.0], "sigma0": 1.0},
    "ensemble": {"n": 20000, "seed": 5, "bandwidth": 0.0},
    "schedule": {"t_end": 0.5, "snapshots": [0.0, 0.25, 0.5], "checkpoint_every": 25},
    "outputs": {"directory": "unused", "formats": ["csv", "ndjson"]}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> problems_of(const json& j) {
  try {
    (void)ScenarioConfig::from_json(j);
  } catch (const ConfigInvalid& e) {
    return e.problems();
  }
  return {};
}

}  // namespace

TEST_CASE("bundled scenarios parse and round-trip") {
  for (const char* name : {"free_gaussian_1d.json", "harmonic_ground_1d.json", "vortex_2d.json", "classical_harmonic_1d.json"}) {
    CAPTURE(name);
    const ScenarioConfig a = ScenarioConfig::load(scenario_path(name));
    const json ja = a.to_json();
    const ScenarioConfig b = ScenarioConfig::from_json(ja);
    CHECK(b.to_json() == ja);
    CHECK(ScenarioConfig::from_json(json::parse(ja.dump())).to_json() == ja);
  }
}

TEST_CASE("validation reports every bad field") {
  json j = small_config();
  j["physics"]["hbar"] = 1.0;
  auto p = problems_of(j);
  REQUIRE(p.size() == 1);
  CHECK(p[0].find("exactly one of D or hbar") != std::string::npos);

  j = small_config();
  j["schedule"]["snapshots"] = {0.0, 0.125};
  j["grid"]["n"] = {4};
  j["outputs"]["formats"] = {"csv", "hdf5"};
  j["bogus"] = 1;
  p = problems_of(j);
  CHECK(p.size() == 4);

  j = small_config();
  j["physics"].erase("D");
  CHECK(problems_of(j).size() == 1);
  j = small_config();
  j["initial"]["kind"] = "vortex";
  CHECK(problems_of(j).size() == 1);
  CHECK_THROWS_AS(ScenarioConfig::load("/nonexistent.json"), IoError);
}

TEST_CASE("seed and parameter form do not change the psi trajectory") {
  json ja = small_config(), jb = small_config();
  jb["physics"].erase("D");
  jb["physics"]["hbar"] = 1.0;
  RunOptions opts{RunMode::solve, {}, true, true, true};
  const RunReport a = run_scenario(ScenarioConfig::from_json(ja), opts);
  const RunReport b = run_scenario(ScenarioConfig::from_json(jb), opts);
  CHECK(a.final_psi.values == b.final_psi.values);
  CHECK(ScenarioConfig::from_json(ja).physics.params() == ScenarioConfig::from_json(jb).physics.params());
}

TEST_CASE("ensemble pipeline writes deterministic outputs") {
  std::vector<fs::path> dirs;
  for (unsigned threads : {1u, 1u, 4u}) {
    const fs::path dir = scratch("det_" + std::to_string(dirs.size()));
    json j = small_config();
    j["outputs"]["directory"] = dir.string();
    RunOptions opts;
    opts.quiet = true;
    opts.exec.threads = threads;
    const RunReport r = run_scenario(ScenarioConfig::from_json(j), opts);
    CHECK(r.snapshots.size() == 3);
    CHECK(r.escaped == 0);
    dirs.push_back(dir);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    ++files;
    const auto name = entry.path().filename();
    CAPTURE(name.string());
    CHECK(slurp(entry.path()) == slurp(dirs[1] / name));
    CHECK(slurp(entry.path()) == slurp(dirs[2] / name));
  }
  CHECK(files >= 10);
  CHECK(fs::exists(dirs[0] / "checkpoint_00000025.ndjson"));
  CHECK(fs::exists(dirs[0] / "plot_snapshots.py"));

  const json summary = json::parse(slurp(dirs[0] / "summary.json"));
  CHECK(summary.at("snapshots").size() == 3);
  CHECK(summary.at("snapshots")[2].contains("hj_residual_max"));
}

TEST_CASE("checkpoint round trip and resume") {
  const Grid g = Grid::line(-5, 5, 64, 0.01);
  const auto p = PhysicalParams::from_hbar(1.3, 0.7);
  ComplexField psi(g);
  for (std::size_t i = 0; i < g.size(); ++i) psi[i] = {std::exp(-g.point(i)[0] * g.point(i)[0]), 0.1 * g.point(i)[0]};
  const fs::path dir = scratch("ckpt");
  fs::create_directories(dir);
  write_checkpoint((dir / "c.ndjson").string(), psi, p, Potential::barrier(2.0, 0.5, 0.25), 1.5);
  const Checkpoint c = read_checkpoint((dir / "c.ndjson").string());
  CHECK(c.psi.values == psi.values);
  CHECK(c.psi.grid == g);
  CHECK(c.params == p);
  CHECK(c.t == 1.5);
  CHECK(c.potential.to_json() == Potential::barrier(2.0, 0.5, 0.25).to_json());
}

TEST_CASE("vortex scenario: multivalued finding and diagnose") {
  const ScenarioConfig cfg = ScenarioConfig::load(scenario_path("vortex_2d.json"));
  const ComplexField psi = initial_state(cfg);
  const auto findings = diagnose(psi, cfg.physics.params(), 0.0);
  REQUIRE_FALSE(findings.empty());
  CHECK(findings[0].at("type") == "multivalued_phase");
  CHECK(findings[0].at("winding") == 1);

  RunOptions opts{RunMode::solve, {}, true, true, false};
  const RunReport r = run_scenario(cfg, opts);
  REQUIRE(r.snapshots.size() == 2);
  CHECK(r.snapshots[0].multivalued_winding == 1);
  CHECK(r.snapshots[1].multivalued_winding == 1);
}

TEST_CASE("ground-state scenario reports a stable norm") {
  json j = json::parse(slurp(scenario_path("harmonic_ground_1d.json")));
  j["schedule"] = {{"t_end", 1.0}, {"snapshots", {0.0, 1.0}}};
  j.erase("ensemble");
  RunOptions opts{RunMode::solve, {}, true, true, false};
  const RunReport r = run_scenario(ScenarioConfig::from_json(j), opts);
  CHECK(std::abs(r.snapshots[1].norm - 1.0) < 1e-10);
  CHECK(r.snapshots[1].energy == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(*r.snapshots[1].continuity_max < 1e-6);
  CHECK(r.warnings.empty());
  CHECK_THROWS_AS(run_scenario(ScenarioConfig::from_json(j), {RunMode::ensemble, {}, true, true, false}), ConfigInvalid);
}

TEST_CASE("boundary warning") {
  json j = small_config();
  j["grid"]["extents"] = {{-3, 3}};
  j.erase("ensemble");
  RunOptions opts{RunMode::solve, {}, true, true, false};
  CHECK_FALSE(run_scenario(ScenarioConfig::from_json(j), opts).warnings.empty());
}

TEST_CASE("classical run writes trajectories") {
  ScenarioConfig cfg = ScenarioConfig::load(scenario_path("classical_harmonic_1d.json"));
  cfg.outputs.directory = scratch("classical").string();
  const ClassicalRunReport r = run_classical(cfg);
  CHECK(r.bundle.trajectories.size() == 4);
  CHECK(std::abs(r.bundle.x(0, r.bundle.times.size() - 1) - std::cos(10.0)) < 1e-6);
  CHECK(fs::exists(fs::path(cfg.outputs.directory) / "trajectories.csv"));
  cfg.classical.reset();
  CHECK_THROWS_AS(run_classical(cfg), ConfigInvalid);
}

TEST_CASE("bundled free Gaussian scenario meets the density threshold") {
  ScenarioConfig cfg = ScenarioConfig::load(scenario_path("free_gaussian_1d.json"));
  cfg.outputs.directory = scratch("free").string();
  RunOptions opts;
  opts.quiet = true;
  const RunReport r = run_scenario(cfg, opts);
  const json cmp = json::parse(slurp(fs::path(cfg.outputs.directory) / "snapshot_00001000_comparison.json"));
  CHECK(cmp.at("kl").get<double>() < 5e-3);
  CHECK(cmp.at("w1").get<double>() < 0.02);
  CHECK(static_cast<double>(r.escaped) / static_cast<double>(r.particles) < 1e-4);
}
