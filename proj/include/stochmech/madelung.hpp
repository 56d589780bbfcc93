#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stochmech/field.hpp"
#include "stochmech/potential.hpp"

namespace stochmech {

/// Hydrodynamic view of psi = sqrt(rho) exp(i S / hbar).
///
/// v = D grad(rho)/rho + grad(S)/m is the mean particle velocity; j = rho v - D grad(rho)
/// is the current including the diffusion correction, which equals rho grad(S)/m.
/// qpot = -2 m D^2 lap(sqrt rho)/sqrt rho. Quantities that divide by rho are set to
/// zero and marked invalid wherever |psi| is at or below the node threshold.
struct MadelungFields {
  ScalarField rho;
  ScalarField S;
  VectorField v;
  VectorField j;
  VectorField grad_rho;
  VectorField grad_S;
  ScalarField qpot;
  std::vector<std::uint8_t> valid;
  double t = 0.0;
  /// Nonzero only when decomposed with allow_multivalued and a loop winds.
  int winding = 0;
};

struct DecomposeOptions {
  double eps_rel = 1e-6;
  bool allow_multivalued = false;
  /// Previous S at an earlier time: each component of the new S is shifted by a
  /// multiple of 2 pi hbar to stay closest to it at the component seed.
  const ScalarField* gauge_reference = nullptr;
};

/// Mean velocity v computed from psi alone (no unwrapping):
/// v = (hbar/m) (Re + Im)(conj(psi) grad psi) / |psi|^2, zero at nodes.
VectorField mean_velocity(const ComplexField& psi, const PhysicalParams& p, double eps_rel = 1e-6);

/// Throws MultivaluedPhase unless allow_multivalued.
MadelungFields decompose(const ComplexField& psi, const PhysicalParams& p, double t = 0.0,
                         const DecomposeOptions& opts = {});

/// Fields from a given (rho, S) pair, with all gradients by finite differences
/// of rho and S. Used for the classical limit and for synthetic checks.
MadelungFields from_density_and_action(const ScalarField& rho, const ScalarField& S, const PhysicalParams& p,
                                       double t = 0.0, double rho_floor = 0.0);

/// Quantum potential in the expanded form (m D^2 / 2)[(grad rho/rho)^2 - 2 lap(rho)/rho].
ScalarField quantum_potential_expanded(const ScalarField& rho, const PhysicalParams& p, double rho_floor);

/// A residual field together with the points where it is meaningful.
struct Residual {
  ScalarField values;
  std::vector<std::uint8_t> mask;

  double max_abs() const;
};

/// Continuity with the S-form current, centred between two snapshots:
/// (rho_after - rho_before)/dt + div(rho_bar grad S_bar)/m.
Residual continuity_residual(const MadelungFields& before, const MadelungFields& after, const PhysicalParams& p);

/// Quantum Hamilton-Jacobi residual at now.t:
/// |grad S|^2/2m + U + dS/dt + qpot, with dS/dt from before/after by centred difference.
Residual hj_residual(const MadelungFields& before, const MadelungFields& now, const MadelungFields& after,
                     const Potential& u, const PhysicalParams& p);

/// Sum of principal-branch phase increments around a closed loop, / 2 pi.
/// Throws LoopThroughNode if |psi| is at or below the node threshold on the loop.
int winding_number(const ComplexField& psi, const std::vector<std::size_t>& loop, double eps_rel = 1e-6);

/// Grid points closest to a circle, ordered counterclockwise without repeats.
std::vector<std::size_t> circle_loop(const Grid& g, double cx, double cy, double radius);

struct NodalRegion {
  std::vector<std::size_t> points;
  double rho_max = 0.0;
  double speed_min = 0.0;
  double speed_max = 0.0;
  /// Current-carrying node: density vanishes but the flow does not.
  bool flagged = false;
};

struct NodalReport {
  std::vector<NodalRegion> regions;
  std::size_t count = 0;
  std::size_t flagged = 0;
  double speed_threshold = 0.0;
};

/// Connected components of {rho < eps} not touching the grid boundary.
/// A region is flagged when its largest |j| / max(rho, eps) exceeds the
/// speed threshold (default 10 * max spacing / dt).
NodalReport detect_nodal_regions(const MadelungFields& fields, double eps,
                                 std::optional<double> speed_threshold = std::nullopt);

}  // namespace stochmech
