#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "stochmech/field.hpp"
#include "stochmech/madelung.hpp"
#include "stochmech/potential.hpp"

namespace stochmech {

struct InitialCondition {
  std::array<double, 2> x{0.0, 0.0};
  std::array<double, 2> p{0.0, 0.0};
};

/// One characteristic sampled at the bundle times; x and p are time-major,
/// dim values per sample.
struct Trajectory {
  std::vector<double> x;
  std::vector<double> p;
  /// Running action integral of L = p^2/2m - U.
  std::vector<double> action;
  double max_energy_drift = 0.0;  ///< relative to |T0| + |U0|
};

struct CharacteristicBundle {
  std::vector<double> times;
  std::vector<Trajectory> trajectories;
  Potential potential;
  double mass = 1.0;
  int dim = 1;

  double x(std::size_t traj, std::size_t sample, int a = 0) const {
    return trajectories[traj].x[sample * static_cast<std::size_t>(dim) + a];
  }
  double p(std::size_t traj, std::size_t sample, int a = 0) const {
    return trajectories[traj].p[sample * static_cast<std::size_t>(dim) + a];
  }
};

/// Classic RK4 on x' = p/m, p' = -grad U, A' = p^2/2m - U. The step is
/// adjusted down so that t_end is hit exactly. Throws StepSizeTooLarge when
/// any trajectory's relative energy drift exceeds 1e-6.
CharacteristicBundle integrate_characteristics(const Potential& u, double mass,
                                               const std::vector<InitialCondition>& initial, double t_end, double dt,
                                               int dim = 1);

struct CausticEvent {
  double t;
  std::size_t first;  ///< neighbouring trajectories that crossed
  std::size_t second;
};

/// 1D: neighbouring trajectories (in initial-condition order) whose spatial
/// order flips, i.e. the Jacobian dx/dx0 changes sign. First crossing per pair.
std::vector<CausticEvent> detect_caustics(const CharacteristicBundle& bundle);

/// Initial action S0(x0) and its momentum p0(x0) = S0'(x0), 1D.
struct InitialAction {
  std::function<double(double)> action;
  std::function<double(double)> momentum;
};

/// S(x, t) on a 1D grid built along characteristics: for each grid point the
/// launch point x0 with X(x0, t) = x is root-found (TOMS 748) inside the
/// launch interval, then S = S0(x0) + integral of L dt. Points not reached
/// from the launch interval are NaN. Throws InvalidArgument on a caustic.
ScalarField action_from_characteristics(const Potential& u, double mass, const InitialAction& s0, const Grid& grid,
                                        double t, double dt, double launch_lo, double launch_hi,
                                        std::size_t launch_samples = 257);

/// Classical Hamilton-Jacobi residual |grad S|^2/2m + U + dS/dt at the middle
/// time, dS/dt = (S_after - S_before) / (2 dt). NaN inputs are masked.
Residual classical_hj_residual(const ScalarField& s_before, const ScalarField& s_now, const ScalarField& s_after,
                               double dt, const Potential& u, double mass);

}  // namespace stochmech
