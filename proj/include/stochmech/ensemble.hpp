#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stochmech/field.hpp"
#include "stochmech/madelung.hpp"
#include "stochmech/parallel.hpp"
#include "stochmech/potential.hpp"

namespace stochmech {

/// N particles at a common time. Positions are particle-major: particle k
/// occupies positions[k*dim .. k*dim+dim).
struct ParticleEnsemble {
  int dim = 1;
  std::vector<double> positions;
  double t = 0.0;
  std::uint64_t seed = 0;
  /// Steps taken so far; the counter of the stepping substream.
  std::uint64_t steps = 0;
  /// Cumulative count of particles clamped back onto the grid.
  std::size_t escaped = 0;

  std::size_t size() const { return positions.size() / static_cast<std::size_t>(dim); }
  double coord(std::size_t k, int a) const { return positions[k * static_cast<std::size_t>(dim) + a]; }
};

/// i.i.d. draws from rho: inverse CDF over cells (conditional inverse CDF in
/// 2D) with uniform jitter inside the cell. Throws NotNormalized.
ParticleEnsemble sample_initial(const ScalarField& rho, std::size_t n, std::uint64_t seed);

/// One Euler-Maruyama step: x += v(x) dt + N(0, 2 D dt) per axis, with v
/// interpolated multilinearly from `drift`. Particles that leave the grid are
/// clamped to its edge and counted in `escaped`.
void step_ensemble_in_place(ParticleEnsemble& e, const VectorField& drift, double diffusion, double dt,
                            const Execution& exec = {});
ParticleEnsemble step_ensemble(const ParticleEnsemble& e, const VectorField& drift, double diffusion, double dt,
                               const Execution& exec = {});

struct DensityEstimate {
  ScalarField density;
  std::size_t counted = 0;
  std::size_t excluded = 0;
};

/// Normalized histogram on the grid points' cells. bandwidth > 0 spreads each
/// particle with a triangular kernel of that half-width (length units).
DensityEstimate estimate_density(const ParticleEnsemble& e, const Grid& grid, double bandwidth = 0.0);

/// Mean over particles of a field interpolated to their positions.
double particle_average(const ParticleEnsemble& e, const ScalarField& f);

/// Per-axis sample mean and (population) variance of positions.
struct SampleMoments {
  std::vector<double> mean;
  std::vector<double> variance;
};
SampleMoments sample_moments(const ParticleEnsemble& e);

/// Mean kinetic energy at each point, T = m/2 (v^2 - 2 D v . grad(rho)/rho),
/// with the additive constant T0 taken as 0.
struct KineticEnergyReport {
  ScalarField T_field;
  double T_mean = 0.0;
  double T0 = 0.0;
};

KineticEnergyReport kinetic_energy_estimate(const MadelungFields& fields, const PhysicalParams& p);

struct ComDiffusionConfig {
  std::size_t n_particles = 1;
  double diffusion = 0.5;
  std::size_t steps = 500;
  double dt = 0.01;
  std::size_t ensembles = 200;
  std::uint64_t seed = 0;
  int dim = 1;
  /// Lags 1..max_lag (in steps) enter the fit; 0 means steps / 10.
  std::size_t max_lag = 0;
  /// Systems are split into this many batches to estimate the standard error.
  std::size_t batches = 10;
};

struct ComDiffusionResult {
  double d_com_fit = 0.0;
  double standard_error = 0.0;
  std::size_t n_particles = 0;
  std::size_t ensembles = 0;
  std::uint64_t seed = 0;
};

/// Free, drift-less systems of n independent particles; fits the centre of
/// mass mean squared displacement MSD(tau) = 2 D_com tau (per axis, through
/// the origin) using every start time as an origin.
ComDiffusionResult com_diffusion_experiment(const ComDiffusionConfig& cfg);

}  // namespace stochmech
