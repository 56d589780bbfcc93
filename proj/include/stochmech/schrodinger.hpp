#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "stochmech/field.hpp"
#include "stochmech/potential.hpp"

namespace stochmech {

/// H psi with the three-point Laplacian per axis and psi = 0 just outside the
/// grid (vanishing boundary).
ComplexField apply_hamiltonian(const ComplexField& psi, const ScalarField& u, const PhysicalParams& p);

/// <psi|H|psi> (real part), psi assumed normalized.
double energy(const ComplexField& psi, const Potential& u, const PhysicalParams& p);

/// Crank-Nicolson propagator for i hbar dpsi/dt = H psi.
///
/// 1D: one tridiagonal solve of (1 + i dt H / 2hbar) psi' = (1 - i dt H / 2hbar) psi.
/// 2D: symmetric alternating-direction product C_x(dt/2) C_y(dt) C_x(dt/2),
/// each factor a Cayley transform of (T_axis + U/2), so every factor is
/// unitary and the step is time-symmetric. Factorizations are computed once.
class CrankNicolson {
 public:
  CrankNicolson(const Grid& grid, const Potential& u, const PhysicalParams& p, double dt);

  ComplexField step(const ComplexField& psi) const;
  void step_in_place(ComplexField& psi) const;
  double dt() const { return dt_; }

 private:
  struct LineFactor {
    Complex off;                      // off-diagonal of the implicit matrix
    std::vector<Complex> diag_rhs;    // diagonal of the explicit matrix
    std::vector<Complex> cprime;      // Thomas elimination coefficients
    std::vector<Complex> inv_pivot;
  };
  struct AxisSweep {
    int axis;
    std::vector<LineFactor> lines;
  };

  AxisSweep build_sweep(int axis, double dt, double u_fraction) const;
  void apply_sweep(const AxisSweep& s, ComplexField& psi) const;

  Grid grid_;
  ScalarField u_;
  PhysicalParams params_;
  double dt_;
  std::vector<AxisSweep> sweeps_;
};

ComplexField step_crank_nicolson(const ComplexField& psi, const Potential& u, const PhysicalParams& p, double dt);

struct GroundStateOptions {
  /// Convergence on the eigen-residual ||(H - E) psi||.
  double tol = 1e-10;
  std::size_t max_iterations = 20'000'000;
  /// Imaginary-time step; default 0.1 m h^2 / hbar, capped for explicit stability.
  std::optional<double> tau;
  /// Starting guess; default a centered Gaussian.
  std::optional<ComplexField> guess;
};

struct GroundState {
  ComplexField psi;
  double energy;
  double residual;
  std::size_t iterations;
};

/// Explicit imaginary-time relaxation with renormalization every step.
/// Throws NoConvergence after max_iterations.
GroundState ground_state_imaginary_time(const Potential& u, const PhysicalParams& p, const Grid& grid,
                                        const GroundStateOptions& opts = {});

/// Closed-form free Gaussian packet, product over axes:
/// |psi|^2 has per-axis variance sigma0^2 (1 + (hbar t / 2 m sigma0^2)^2),
/// centered at x0 + p0 t / m.
ComplexField analytic_gaussian_packet(std::array<double, 2> x0, std::array<double, 2> p0, double sigma0, double t,
                                      const PhysicalParams& p, const Grid& grid);

inline ComplexField analytic_gaussian_packet(double x0, double p0, double sigma0, double t, const PhysicalParams& p,
                                             const Grid& grid) {
  return analytic_gaussian_packet({x0, 0.0}, {p0, 0.0}, sigma0, t, p, grid);
}

/// Closed-form variance of the free packet at time t.
double gaussian_packet_variance(double sigma0, double t, const PhysicalParams& p);

}  // namespace stochmech
