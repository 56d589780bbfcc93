#include "stochmech/classical.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/toms748_solve.hpp>

namespace stochmech {

namespace {

struct State {
  std::array<double, 2> x{};
  std::array<double, 2> p{};
  double action = 0.0;
};

State derivative_of(const State& s, const Potential& u, double m, int dim) {
  State d;
  const auto grad = u.gradient(s.x, dim);
  double p2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    d.x[a] = s.p[a] / m;
    d.p[a] = -grad[a];
    p2 += s.p[a] * s.p[a];
  }
  d.action = p2 / (2.0 * m) - u.value(s.x, dim);
  return d;
}

State axpy(const State& s, double h, const State& d, int dim) {
  State r = s;
  for (int a = 0; a < dim; ++a) {
    r.x[a] += h * d.x[a];
    r.p[a] += h * d.p[a];
  }
  r.action += h * d.action;
  return r;
}

State rk4_step(const State& s, double h, const Potential& u, double m, int dim) {
  const State k1 = derivative_of(s, u, m, dim);
  const State k2 = derivative_of(axpy(s, 0.5 * h, k1, dim), u, m, dim);
  const State k3 = derivative_of(axpy(s, 0.5 * h, k2, dim), u, m, dim);
  const State k4 = derivative_of(axpy(s, h, k3, dim), u, m, dim);
  State r = s;
  for (int a = 0; a < dim; ++a) {
    r.x[a] += h / 6.0 * (k1.x[a] + 2.0 * k2.x[a] + 2.0 * k3.x[a] + k4.x[a]);
    r.p[a] += h / 6.0 * (k1.p[a] + 2.0 * k2.p[a] + 2.0 * k3.p[a] + k4.p[a]);
  }
  r.action += h / 6.0 * (k1.action + 2.0 * k2.action + 2.0 * k3.action + k4.action);
  return r;
}

std::size_t step_count(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("characteristic step must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be finite and nonnegative");
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

State flow(State s, double t, double dt, const Potential& u, double m, int dim) {
  const std::size_t n = step_count(t, dt);
  if (n == 0) return s;
  const double h = t / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) s = rk4_step(s, h, u, m, dim);
  return s;
}

}  // namespace

CharacteristicBundle integrate_characteristics(const Potential& u, double mass,
                                               const std::vector<InitialCondition>& initial, double t_end, double dt,
                                               int dim) {
  if (!(mass > 0.0)) throw InvalidArgument("mass must be positive");
  if (dim < 1 || dim > 2) throw InvalidArgument("characteristics dimension must be 1 or 2");
  const std::size_t n = step_count(t_end, dt);
  const double h = n > 0 ? t_end / static_cast<double>(n) : 0.0;

  CharacteristicBundle b{{}, {}, u, mass, dim};
  b.times.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) b.times[k] = k == n ? t_end : static_cast<double>(k) * h;

  const auto ud = static_cast<std::size_t>(dim);
  for (std::size_t id = 0; id < initial.size(); ++id) {
    const auto& ic = initial[id];
    for (int a = 0; a < dim; ++a) {
      if (!std::isfinite(ic.x[a]) || !std::isfinite(ic.p[a])) throw InvalidArgument("initial conditions must be finite");
    }
    Trajectory tr;
    tr.x.resize((n + 1) * ud);
    tr.p.resize((n + 1) * ud);
    tr.action.resize(n + 1);
    State s{ic.x, ic.p, 0.0};
    auto energy = [&](const State& st) {
      double t = 0.0;
      for (int a = 0; a < dim; ++a) t += st.p[a] * st.p[a] / (2.0 * mass);
      return std::pair{t, u.value(st.x, dim)};
    };
    const auto [t0, u0] = energy(s);
    const double e0 = t0 + u0;
    const double scale = std::abs(t0) + std::abs(u0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k > 0) s = rk4_step(s, h, u, mass, dim);
      for (int a = 0; a < dim; ++a) {
        tr.x[k * ud + a] = s.x[a];
        tr.p[k * ud + a] = s.p[a];
      }
      tr.action[k] = s.action;
      if (scale > 0.0) {
        const auto [tk, uk] = energy(s);
        tr.max_energy_drift = std::max(tr.max_energy_drift, std::abs(tk + uk - e0) / scale);
      }
    }
    if (tr.max_energy_drift > 1e-6) {
      throw StepSizeTooLarge("trajectory " + std::to_string(id) + " energy drift " + std::to_string(tr.max_energy_drift) +
                             " exceeds 1e-6; reduce dt");
    }
    b.trajectories.push_back(std::move(tr));
  }
  return b;
}

std::vector<CausticEvent> detect_caustics(const CharacteristicBundle& b) {
  if (b.dim != 1) throw DimensionUnsupported("caustic detection is implemented for 1D bundles");
  std::vector<CausticEvent> events;
  for (std::size_t k = 0; k + 1 < b.trajectories.size(); ++k) {
    const double d0 = b.x(k + 1, 0) - b.x(k, 0);
    for (std::size_t s = 1; s < b.times.size(); ++s) {
      const double d = b.x(k + 1, s) - b.x(k, s);
      if (d * d0 <= 0.0 && d0 != 0.0) {
        events.push_back({b.times[s], k, k + 1});
        break;
      }
    }
  }
  return events;
}

ScalarField action_from_characteristics(const Potential& u, double mass, const InitialAction& s0, const Grid& grid,
                                        double t, double dt, double launch_lo, double launch_hi,
                                        std::size_t launch_samples) {
  if (grid.dim() != 1) throw DimensionUnsupported("action_from_characteristics is 1D");
  if (!(launch_lo < launch_hi) || launch_samples < 2) throw InvalidArgument("launch interval is empty");
  auto landing = [&](double x0) {
    return flow(State{{x0, 0.0}, {s0.momentum(x0), 0.0}, 0.0}, t, dt, u, mass, 1);
  };

  std::vector<double> x0s(launch_samples), xs(launch_samples);
  for (std::size_t k = 0; k < launch_samples; ++k) {
    x0s[k] = launch_lo + (launch_hi - launch_lo) * static_cast<double>(k) / static_cast<double>(launch_samples - 1);
    xs[k] = landing(x0s[k]).x[0];
    if (k > 0 && !(xs[k] > xs[k - 1])) throw InvalidArgument("characteristics cross before t (caustic)");
  }

  ScalarField S(grid);
  boost::math::tools::eps_tolerance<double> tol(52);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double target = grid.point(i)[0];
    if (target < xs.front() || target > xs.back()) {
      S[i] = std::nan("");
      continue;
    }
    const auto hi = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), target) - xs.begin());
    double x0 = x0s[hi];
    if (xs[hi] != target) {
      const std::size_t lo = hi - 1;
      std::uintmax_t iters = 100;
      auto f = [&](double z) { return landing(z).x[0] - target; };
      auto root = boost::math::tools::toms748_solve(f, x0s[lo], x0s[hi], xs[lo] - target, xs[hi] - target, tol, iters);
      x0 = 0.5 * (root.first + root.second);
    }
    S[i] = s0.action(x0) + landing(x0).action;
  }
  return S;
}

Residual classical_hj_residual(const ScalarField& s_before, const ScalarField& s_now, const ScalarField& s_after,
                               double dt, const Potential& u, double mass) {
  const Grid& g = s_now.grid;
  if (!(s_before.grid == g) || !(s_after.grid == g)) throw GridMismatch("classical_hj_residual");
  if (!(dt > 0.0)) throw InvalidArgument("classical_hj_residual needs dt > 0");
  const std::size_t n = g.size();
  std::vector<std::uint8_t> finite(n);
  for (std::size_t i = 0; i < n; ++i) {
    finite[i] = std::isfinite(s_before[i]) && std::isfinite(s_now[i]) && std::isfinite(s_after[i]);
  }
  // Interior points whose gradient stencil is finite.
  Residual r{ScalarField(g), std::vector<std::uint8_t>(n, 0)};
  std::vector<std::size_t> nbrs;
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite[i] || g.on_boundary(i)) continue;
    g.neighbors(i, nbrs);
    r.mask[i] = std::all_of(nbrs.begin(), nbrs.end(), [&](std::size_t k) { return finite[k] != 0; });
  }
  const VectorField grad = gradient(s_now);
  const double two_m = 2.0 * mass;
  const double span = 2.0 * dt;
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.mask[i]) continue;
    double gs2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) gs2 += grad.components[a][i] * grad.components[a][i];
    const double dsdt = (s_after[i] - s_before[i]) / span;
    r.values[i] = gs2 / two_m + u.value(g.point(i), g.dim()) + dsdt;
  }
  return r;
}

}  // namespace stochmech
