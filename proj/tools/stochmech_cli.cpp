// stochmech command-line driver.
//
//   stochmech solve     --config scen.json        psi evolution only
//   stochmech ensemble  --config scen.json        full particle pipeline
//   stochmech diagnose  --checkpoint psi.ndjson   winding and nodal findings
//   stochmech classical --config scen.json        D = 0 characteristics
//   stochmech comdiff   --n 4 --D 0.5             center-of-mass experiment
//   stochmech compare   a.csv b.csv               density comparison
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 numerical, 4 io, 5 physics, 6 other.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "stochmech/ensemble.hpp"
#include "stochmech/field_io.hpp"
#include "stochmech/scenario.hpp"
#include "stochmech/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stochmech;

namespace {

constexpr int kUsage = 1;
constexpr int kOther = 6;

struct Common {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> checkpoint_every;
  bool quiet = false;
  unsigned threads = 0;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, Common& c, bool multi_config) {
  if (multi_config) {
    cmd->add_option("--config", c.configs, "scenario JSON (repeatable)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--jobs", c.jobs, "scenarios run concurrently")->check(CLI::PositiveNumber);
  } else {
    cmd->add_option("--config", c.configs, "scenario JSON")->required()->expected(1)->check(CLI::ExistingFile);
  }
  cmd->add_option("--seed", c.seed, "override the ensemble seed");
  cmd->add_option("--out", c.out, "output directory (overrides outputs.directory)");
  cmd->add_option("--checkpoint-every", c.checkpoint_every, "write psi every N steps (0 = never)");
  cmd->add_flag("--quiet,-q", c.quiet, "no progress output");
  cmd->add_option("--threads", c.threads, "worker threads for particle stepping (0 = all cores)");
}

ScenarioConfig load_with_overrides(const std::string& path, const Common& c, bool several) {
  ScenarioConfig cfg = ScenarioConfig::load(path);
  if (c.seed) {
    if (!cfg.ensemble) cfg.ensemble = EnsembleSpec{};
    cfg.ensemble->seed = *c.seed;
  }
  if (c.checkpoint_every) cfg.schedule.checkpoint_every = *c.checkpoint_every;
  if (!c.out.empty()) cfg.outputs.directory = several ? (fs::path(c.out) / cfg.name).string() : c.out;
  return cfg;
}

int exit_code_for(const Error& e) { return static_cast<int>(e.error_class()); }

void report_error(const std::string& context, const Error& e) {
  std::cerr << "error";
  if (!context.empty()) std::cerr << " [" << context << "]";
  std::cerr << ": " << e.what() << '\n';
}

/// Runs fn on every config, at most `jobs` at a time. Returns the worst exit code.
int run_configs(const Common& c, const std::function<void(const ScenarioConfig&)>& fn) {
  const bool several = c.configs.size() > 1;
  std::vector<ScenarioConfig> cfgs;
  for (const auto& path : c.configs) {
    try {
      cfgs.push_back(load_with_overrides(path, c, several));
    } catch (const Error& e) {
      report_error(path, e);
      return exit_code_for(e);
    }
  }
  if (several) {
    std::set<std::string> dirs;
    for (const auto& cfg : cfgs) {
      if (!dirs.insert(fs::weakly_canonical(cfg.outputs.directory).string()).second) {
        std::cerr << "error: scenarios share the output directory '" << cfg.outputs.directory << "'\n";
        return static_cast<int>(ErrorClass::config);
      }
    }
  }

  std::vector<int> codes(cfgs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cfgs.size();) {
      try {
        fn(cfgs[i]);
      } catch (const Error& e) {
        std::lock_guard lock(err_mutex);
        report_error(cfgs[i].name, e);
        codes[i] = exit_code_for(e);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        std::cerr << "error [" << cfgs[i].name << "]: " << e.what() << '\n';
        codes[i] = kOther;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::min<unsigned>(std::max(1u, c.jobs), static_cast<unsigned>(cfgs.size()));
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  return *std::max_element(codes.begin(), codes.end());
}

void emit(const json& j, const std::string& out_dir, const std::string& file) {
  std::cout << j.dump(2) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / file);
    if (!os) throw IoError("cannot write " + (fs::path(out_dir) / file).string());
    os << j.dump(2) << '\n';
  }
}

ScalarField density_column(const std::string& path, const std::string& column) {
  FieldTable t = read_table_file(path);
  if (!column.empty()) return scalar_field_from(t, column);
  if (t.columns.empty()) throw IoError("'" + path + "' has no value columns");
  return scalar_field_from(t, t.columns.front());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic mechanics toolkit: Schrodinger, Madelung and particle-ensemble pipelines"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;

  auto* solve = app.add_subcommand("solve", "evolve psi with Crank-Nicolson and write snapshots");
  add_common(solve, common, true);
  auto* ensemble = app.add_subcommand("ensemble", "evolve psi and a particle ensemble, compare densities");
  add_common(ensemble, common, true);

  auto* diag = app.add_subcommand("diagnose", "winding and nodal diagnostics of a checkpoint");
  std::string checkpoint, diag_out;
  double eps_rel = 1e-6;
  std::optional<double> nodal_eps, speed_threshold;
  diag->add_option("--checkpoint", checkpoint, "checkpoint NDJSON")->required()->check(CLI::ExistingFile);
  diag->add_option("--out", diag_out, "also write diagnostics.ndjson here");
  diag->add_option("--eps-rel", eps_rel, "node threshold relative to max|psi|");
  diag->add_option("--nodal-eps", nodal_eps, "absolute density threshold for nodal regions");
  diag->add_option("--speed-threshold", speed_threshold, "flag nodes with |j|/rho above this");
  bool diag_quiet = false;
  diag->add_flag("--quiet,-q", diag_quiet);

  auto* classical = app.add_subcommand("classical", "integrate D = 0 characteristics");
  Common ccommon;
  add_common(classical, ccommon, false);

  auto* comdiff = app.add_subcommand("comdiff", "center-of-mass diffusion of n free particles");
  ComDiffusionConfig cd;
  std::string cd_out;
  bool cd_quiet = false;
  comdiff->add_option("--n", cd.n_particles, "particles per system")->check(CLI::PositiveNumber);
  comdiff->add_option("--D", cd.diffusion, "diffusion constant")->check(CLI::PositiveNumber);
  comdiff->add_option("--ensembles", cd.ensembles, "independent systems")->check(CLI::Range(10, 100000000));
  comdiff->add_option("--steps", cd.steps, "time steps per system")->check(CLI::Range(20, 100000000));
  comdiff->add_option("--dt", cd.dt, "time step")->check(CLI::PositiveNumber);
  comdiff->add_option("--seed", cd.seed, "random seed");
  comdiff->add_option("--dim", cd.dim, "spatial dimension")->check(CLI::Range(1, 2));
  comdiff->add_option("--out", cd_out, "also write comdiff.json here");
  comdiff->add_flag("--quiet,-q", cd_quiet);

  auto* compare = app.add_subcommand("compare", "compare two density files (empirical, reference)");
  std::string file_a, file_b, col_a, col_b, cmp_out;
  bool cmp_quiet = false;
  compare->add_option("empirical", file_a, "density file, CSV or NDJSON")->required()->check(CLI::ExistingFile);
  compare->add_option("reference", file_b, "density file, CSV or NDJSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--column-a", col_a, "column in the first file (default: first)");
  compare->add_option("--column-b", col_b, "column in the second file (default: first)");
  compare->add_option("--out", cmp_out, "also write comparison.json here");
  compare->add_flag("--quiet,-q", cmp_quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*solve || *ensemble) {
      const RunMode mode = *solve ? RunMode::solve : RunMode::ensemble;
      return run_configs(common, [&](const ScenarioConfig& cfg) {
        RunOptions opts;
        opts.mode = mode;
        opts.exec.threads = common.threads;
        opts.quiet = common.quiet;
        RunReport r = run_scenario(cfg, opts);
        if (!common.quiet) std::cout << cfg.outputs.directory << "/summary.json\n";
      });
    }
    if (*classical) {
      return run_configs(ccommon, [&](const ScenarioConfig& cfg) {
        ClassicalRunReport r = run_classical(cfg);
        if (!ccommon.quiet) std::cout << r.to_json().dump(2) << '\n';
      });
    }
    if (*diag) {
      Checkpoint cp = read_checkpoint(checkpoint);
      DiagnoseOptions opts{eps_rel, nodal_eps, speed_threshold};
      std::ofstream file;
      if (!diag_out.empty()) {
        fs::create_directories(diag_out);
        file.open(fs::path(diag_out) / "diagnostics.ndjson");
        if (!file) throw IoError("cannot write diagnostics.ndjson");
      }
      for (const auto& rec : diagnose(cp.psi, cp.params, cp.t, opts)) {
        if (!diag_quiet) std::cout << rec.dump() << '\n';
        if (file) file << rec.dump() << '\n';
      }
      return 0;
    }
    if (*comdiff) {
      const ComDiffusionResult r = com_diffusion_experiment(cd);
      json j{{"n", r.n_particles},       {"D", cd.diffusion},          {"D_com", r.d_com_fit},
             {"D_com_expected", cd.diffusion / static_cast<double>(cd.n_particles)},
             {"standard_error", r.standard_error}, {"ensembles", r.ensembles}, {"steps", cd.steps},
             {"dt", cd.dt},              {"dim", cd.dim},              {"seed", r.seed}};
      if (cd_quiet) {
        if (!cd_out.empty()) emit(j, cd_out, "comdiff.json");
      } else {
        emit(j, cd_out, "comdiff.json");
      }
      return 0;
    }
    if (*compare) {
      const ScalarField a = density_column(file_a, col_a);
      const ScalarField b = density_column(file_b, col_b);
      if (!(a.grid.axes() == b.grid.axes())) throw GridMismatch("compare: the two files use different grids");
      const json j = compare_densities(a, b).to_json();
      if (!cmp_quiet) std::cout << j.dump(2) << '\n';
      if (!cmp_out.empty()) {
        fs::create_directories(cmp_out);
        std::ofstream(fs::path(cmp_out) / "comparison.json") << j.dump(2) << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    report_error("", e);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kUsage;
}
