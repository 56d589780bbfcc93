#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stochmech/classical.hpp"
#include "stochmech/field.hpp"
#include "stochmech/parallel.hpp"
#include "stochmech/potential.hpp"
#include "stochmech/stats.hpp"

namespace stochmech {

struct GridSpec {
  std::vector<Axis> axes;
  double dt = 1e-3;

  Grid grid() const { return Grid(axes, dt); }
};

/// Exactly one of diffusion / hbar is given; the other is derived.
struct PhysicsSpec {
  double mass = 1.0;
  std::optional<double> diffusion;
  std::optional<double> hbar;

  PhysicalParams params() const;
};

struct InitialSpec {
  /// gaussian | ground_state | vortex | file
  std::string kind = "gaussian";
  std::array<double, 2> x0{0.0, 0.0};
  std::array<double, 2> p0{0.0, 0.0};
  double sigma0 = 1.0;
  int charge = 1;       ///< vortex winding
  double width = 1.0;   ///< vortex envelope exp(-r^2 / width^2)
  std::string file;     ///< complex field (re, im), CSV or NDJSON
};

struct EnsembleSpec {
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  double bandwidth = 0.0;
};

struct ScheduleSpec {
  double t_end = 1.0;
  std::vector<double> snapshots;
  std::size_t checkpoint_every = 0;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};
};

struct ClassicalSpec {
  std::vector<InitialCondition> initial;
  double t_end = 10.0;
  double dt = 1e-3;
  std::size_t record_every = 10;
};

struct ScenarioConfig {
  std::string name;
  GridSpec grid;
  PhysicsSpec physics;
  Potential potential;
  InitialSpec initial;
  std::optional<EnsembleSpec> ensemble;
  ScheduleSpec schedule;
  OutputSpec outputs;
  std::optional<ClassicalSpec> classical;

  /// Validates everything and throws ConfigInvalid listing each bad field.
  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig load(const std::string& path);
  nlohmann::json to_json() const;

  std::size_t step_count() const;
  /// Step indices of the snapshot times, ascending.
  std::vector<std::size_t> snapshot_steps() const;
};

/// Builds psi(0) from the initial spec (normalized).
ComplexField initial_state(const ScenarioConfig& cfg);

enum class RunMode { solve, ensemble };

struct RunOptions {
  RunMode mode = RunMode::ensemble;
  Execution exec;
  bool quiet = false;
  /// Write nothing to disk; only the returned report.
  bool dry = false;
  /// Keep psi at every snapshot in the report.
  bool keep_states = false;
};

struct SnapshotReport {
  std::size_t step = 0;
  double t = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  std::optional<ComparisonReport> comparison;
  std::vector<double> sample_mean;
  std::vector<double> sample_variance;
  std::optional<double> continuity_max;
  std::optional<double> hj_max;
  std::optional<double> kinetic_mean;            ///< weighted by |psi|^2
  std::optional<double> kinetic_mean_particles;  ///< averaged over particles
  std::optional<int> multivalued_winding;
  std::optional<ComplexField> psi;

  nlohmann::json to_json() const;
};

struct RunReport {
  std::string name;
  std::size_t steps = 0;
  std::vector<SnapshotReport> snapshots;
  std::vector<std::string> warnings;
  std::size_t escaped = 0;
  std::size_t particles = 0;
  ComplexField final_psi;

  nlohmann::json to_json() const;
};

/// Evolves psi with Crank-Nicolson; in ensemble mode each step also moves the
/// particles with the drift v(psi) taken at the start of the step. Writes
/// snapshots, comparisons, residuals and diagnostics under the output dir.
RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

struct Checkpoint {
  ComplexField psi;
  PhysicalParams params;
  Potential potential;
  double t;
};

void write_checkpoint(const std::string& path, const ComplexField& psi, const PhysicalParams& p, const Potential& u,
                      double t);
Checkpoint read_checkpoint(const std::string& path);

/// Winding and nodal findings for one state, as NDJSON-ready records.
struct DiagnoseOptions {
  double eps_rel = 1e-6;
  /// Absolute density threshold for nodal regions; default 1e-6 * max rho.
  std::optional<double> nodal_eps;
  std::optional<double> speed_threshold;
};
std::vector<nlohmann::json> diagnose(const ComplexField& psi, const PhysicalParams& p, double t,
                                     const DiagnoseOptions& opts = {});

struct ClassicalRunReport {
  CharacteristicBundle bundle;
  std::vector<CausticEvent> caustics;
  nlohmann::json to_json() const;
};

ClassicalRunReport run_classical(const ScenarioConfig& cfg, bool write_outputs = true);

}  // namespace stochmech
