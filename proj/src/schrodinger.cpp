#include "stochmech/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stochmech {

namespace {

void require_quantum(const PhysicalParams& p) {
  if (p.is_classical()) throw InvalidArgument("quantum evolution needs hbar > 0 (D > 0)");
}

}  // namespace

ComplexField apply_hamiltonian(const ComplexField& psi, const ScalarField& u, const PhysicalParams& p) {
  const Grid& g = psi.grid;
  if (!(u.grid == g)) throw GridMismatch("apply_hamiltonian");
  ComplexField out(g);
  const double kin = p.hbar() * p.hbar() / (2.0 * p.mass());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = u[i] * psi[i];
  for (int a = 0; a < g.dim(); ++a) {
    const double c = kin / (g.spacing(a) * g.spacing(a));
    const std::size_t s = g.stride(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t k = g.multi_index(i)[a];
      Complex lap = -2.0 * psi[i];
      if (k > 0) lap += psi[i - s];
      if (k + 1 < g.n(a)) lap += psi[i + s];
      out[i] -= c * lap;
    }
  }
  return out;
}

double energy(const ComplexField& psi, const Potential& u, const PhysicalParams& p) {
  require_quantum(p);
  const ComplexField hpsi = apply_hamiltonian(psi, u.sample(psi.grid), p);
  double e = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) e += (std::conj(psi[i]) * hpsi[i]).real();
  return e * psi.grid.cell_volume();
}

CrankNicolson::CrankNicolson(const Grid& grid, const Potential& u, const PhysicalParams& p, double dt)
    : grid_(grid), u_(u.sample(grid)), params_(p), dt_(dt) {
  require_quantum(p);
  if (!std::isfinite(dt)) throw InvalidArgument("time step must be finite");
  if (dt == 0.0) return;
  if (grid_.dim() == 1) {
    sweeps_.push_back(build_sweep(0, dt, 1.0));
  } else {
    sweeps_.push_back(build_sweep(0, 0.5 * dt, 0.5));
    sweeps_.push_back(build_sweep(1, dt, 0.5));
  }
}

CrankNicolson::AxisSweep CrankNicolson::build_sweep(int axis, double dt, double u_fraction) const {
  const Grid& g = grid_;
  const std::size_t n = g.n(axis);
  const std::size_t s = g.stride(axis);
  const std::size_t lines = g.size() / n;
  const double h = g.spacing(axis);
  const double kin = params_.hbar() * params_.hbar() / (2.0 * params_.mass() * h * h);
  const Complex beta(0.0, dt / (2.0 * params_.hbar()));

  AxisSweep sweep{axis, {}};
  sweep.lines.reserve(lines);
  for (std::size_t l = 0; l < lines; ++l) {
    const std::size_t start = (g.dim() == 2 && axis == 0) ? l : l * n;
    LineFactor f;
    f.off = beta * (-kin);
    f.diag_rhs.resize(n);
    f.cprime.resize(n);
    f.inv_pivot.resize(n);
    Complex prev_c(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double hdiag = 2.0 * kin + u_fraction * u_[start + k * s];
      const Complex a_diag = 1.0 + beta * hdiag;
      f.diag_rhs[k] = 1.0 - beta * hdiag;
      const Complex pivot = a_diag - f.off * prev_c;
      if (std::abs(pivot) < 1e-300 || !std::isfinite(std::abs(pivot))) {
        throw LinearSolveFailure("singular tridiagonal system in Crank-Nicolson step");
      }
      f.inv_pivot[k] = 1.0 / pivot;
      f.cprime[k] = f.off * f.inv_pivot[k];
      prev_c = f.cprime[k];
    }
    sweep.lines.push_back(std::move(f));
  }
  return sweep;
}

void CrankNicolson::apply_sweep(const AxisSweep& sw, ComplexField& psi) const {
  const Grid& g = grid_;
  const std::size_t n = g.n(sw.axis);
  const std::size_t s = g.stride(sw.axis);
  std::vector<Complex> rhs(n);
  for (std::size_t l = 0; l < sw.lines.size(); ++l) {
    const std::size_t start = (g.dim() == 2 && sw.axis == 0) ? l : l * n;
    const LineFactor& f = sw.lines[l];
    Complex* x = &psi.values[start];
    const Complex off_rhs = -f.off;  // explicit side carries the opposite sign
    for (std::size_t k = 0; k < n; ++k) {
      Complex r = f.diag_rhs[k] * x[k * s];
      if (k > 0) r += off_rhs * x[(k - 1) * s];
      if (k + 1 < n) r += off_rhs * x[(k + 1) * s];
      rhs[k] = r;
    }
    // Thomas forward elimination and back substitution.
    rhs[0] *= f.inv_pivot[0];
    for (std::size_t k = 1; k < n; ++k) rhs[k] = (rhs[k] - f.off * rhs[k - 1]) * f.inv_pivot[k];
    for (std::size_t k = n - 1; k-- > 0;) rhs[k] -= f.cprime[k] * rhs[k + 1];
    for (std::size_t k = 0; k < n; ++k) x[k * s] = rhs[k];
  }
}

void CrankNicolson::step_in_place(ComplexField& psi) const {
  if (!(psi.grid == grid_)) throw GridMismatch("CrankNicolson::step");
  if (sweeps_.empty()) return;
  if (grid_.dim() == 1) {
    apply_sweep(sweeps_[0], psi);
  } else {
    apply_sweep(sweeps_[0], psi);
    apply_sweep(sweeps_[1], psi);
    apply_sweep(sweeps_[0], psi);
  }
}

ComplexField CrankNicolson::step(const ComplexField& psi) const {
  ComplexField out = psi;
  step_in_place(out);
  return out;
}

ComplexField step_crank_nicolson(const ComplexField& psi, const Potential& u, const PhysicalParams& p, double dt) {
  return CrankNicolson(psi.grid, u, p, dt).step(psi);
}

GroundState ground_state_imaginary_time(const Potential& u, const PhysicalParams& p, const Grid& grid,
                                        const GroundStateOptions& opts) {
  require_quantum(p);
  const ScalarField uval = u.sample(grid);
  double umin = uval[0];
  double umax = uval[0];
  for (double v : uval.values) {
    if (!std::isfinite(v)) throw InvalidArgument("potential must be finite on the grid");
    umin = std::min(umin, v);
    umax = std::max(umax, v);
  }

  double hmin = grid.spacing(0);
  for (int a = 1; a < grid.dim(); ++a) hmin = std::min(hmin, grid.spacing(a));
  // Spectral radius bound of H shifted by umin.
  double lambda_max = umax - umin;
  for (int a = 0; a < grid.dim(); ++a) lambda_max += 2.0 * p.hbar() * p.hbar() / (p.mass() * grid.spacing(a) * grid.spacing(a));
  double tau = opts.tau.value_or(0.1 * p.mass() * hmin * hmin / p.hbar());
  tau = std::min(tau, p.hbar() / lambda_max);

  ComplexField psi(grid);
  if (opts.guess) {
    if (!(opts.guess->grid == grid)) throw GridMismatch("ground_state_imaginary_time guess");
    for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = std::abs((*opts.guess)[i]);
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      auto x = grid.point(i);
      double r2 = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        const Axis& ax = grid.axis(a);
        const double c = 0.5 * (ax.lo + ax.hi);
        const double w = 0.125 * (ax.hi - ax.lo);
        r2 += (x[a] - c) * (x[a] - c) / (w * w);
      }
      psi[i] = std::exp(-0.5 * r2);
    }
  }
  normalize(psi);

  // Shifting by umin leaves eigenvectors unchanged and keeps the explicit
  // update a contraction.
  const ScalarField shifted = [&] {
    ScalarField s = uval;
    for (auto& v : s.values) v -= umin;
    return s;
  }();
  const double cellvol = grid.cell_volume();
  const double rate = tau / p.hbar();
  double e = 0.0;
  double residual = 0.0;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const ComplexField hpsi = apply_hamiltonian(psi, shifted, p);
    e = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) e += psi[i].real() * hpsi[i].real();
    e *= cellvol;
    double r2 = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) r2 += std::norm(hpsi[i] - e * psi[i]);
    residual = std::sqrt(r2 * cellvol);
    if (residual < opts.tol) return {std::move(psi), e + umin, residual, it};
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = psi[i].real() - rate * hpsi[i].real();
    normalize(psi);
  }
  throw NoConvergence("imaginary-time relaxation did not converge (residual " + std::to_string(residual) + ")");
}

double gaussian_packet_variance(double sigma0, double t, const PhysicalParams& p) {
  const double tau = p.hbar() * t / (2.0 * p.mass() * sigma0 * sigma0);
  return sigma0 * sigma0 * (1.0 + tau * tau);
}

ComplexField analytic_gaussian_packet(std::array<double, 2> x0, std::array<double, 2> p0, double sigma0, double t,
                                      const PhysicalParams& p, const Grid& grid) {
  require_quantum(p);
  if (!(sigma0 > 0.0)) throw InvalidArgument("sigma0 must be positive");
  const double hbar = p.hbar();
  const double m = p.mass();
  const Complex spread(1.0, hbar * t / (2.0 * m * sigma0 * sigma0));
  const Complex amp = std::pow(2.0 * std::numbers::pi * sigma0 * sigma0, -0.25) / std::sqrt(spread);
  ComplexField psi(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto x = grid.point(i);
    Complex v(1.0, 0.0);
    for (int a = 0; a < grid.dim(); ++a) {
      const double centre = x0[a] + p0[a] * t / m;
      const double dx = x[a] - centre;
      const Complex expo = -dx * dx / (4.0 * sigma0 * sigma0 * spread) +
                           Complex(0.0, p0[a] * (x[a] - x0[a]) / hbar - p0[a] * p0[a] * t / (2.0 * m * hbar));
      v *= amp * std::exp(expo);
    }
    psi[i] = v;
  }
  return psi;
}

}  // namespace stochmech
