#include "stochmech/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace stochmech {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Keeps points whose axis neighbours within `radius` are all set in `in`.
std::vector<std::uint8_t> erode(const Grid& g, const std::vector<std::uint8_t>& in, int radius) {
  std::vector<std::uint8_t> out(in.size(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in[i] || g.on_boundary(i)) continue;
    auto mi = g.multi_index(i);
    bool ok = true;
    for (int a = 0; a < g.dim() && ok; ++a) {
      const std::size_t s = g.stride(a);
      for (int r = 1; r <= radius && ok; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        if (mi[a] >= ur && !in[i - ur * s]) ok = false;
        if (mi[a] + ur < g.n(a) && !in[i + ur * s]) ok = false;
      }
    }
    out[i] = ok ? 1 : 0;
  }
  return out;
}

}  // namespace

double Residual::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) m = std::max(m, std::abs(values[i]));
  }
  return m;
}

VectorField mean_velocity(const ComplexField& psi, const PhysicalParams& p, double eps_rel) {
  const Grid& g = psi.grid;
  const double threshold = node_threshold(psi, eps_rel);
  const double scale = p.hbar() / p.mass();
  VectorField v(g);
  for (int a = 0; a < g.dim(); ++a) {
    const ComplexField d = derivative(psi, a);
    auto& comp = v.components[a];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double amp = std::abs(psi[i]);
      if (amp <= threshold) continue;
      const Complex z = std::conj(psi[i]) * d[i];
      comp[i] = scale * (z.real() + z.imag()) / (amp * amp);
    }
  }
  return v;
}

MadelungFields decompose(const ComplexField& psi, const PhysicalParams& p, double t, const DecomposeOptions& opts) {
  if (p.is_classical()) throw InvalidArgument("decompose needs hbar > 0");
  const Grid& g = psi.grid;
  const std::size_t n = g.size();
  PhaseField phase = unwrap_phase(psi, {p.hbar(), opts.eps_rel, opts.allow_multivalued});

  if (opts.gauge_reference != nullptr) {
    if (!(opts.gauge_reference->grid == g)) throw GridMismatch("decompose gauge reference");
    const double period = kTwoPi * p.hbar();
    std::vector<double> shift(phase.seeds.size());
    for (std::size_t c = 0; c < phase.seeds.size(); ++c) {
      const std::size_t s = phase.seeds[c];
      shift[c] = period * std::round(((*opts.gauge_reference)[s] - phase.S[s]) / period);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (phase.component[i] != kUnreached) phase.S[i] += shift[phase.component[i]];
    }
  }

  MadelungFields f{density(psi), std::move(phase.S), VectorField(g), VectorField(g), VectorField(g), VectorField(g),
                   ScalarField(g), std::move(phase.reachable), t, phase.winding};
  const double m = p.mass();
  const double D = p.diffusion();
  const double hbar = p.hbar();
  for (int a = 0; a < g.dim(); ++a) {
    const ComplexField d = derivative(psi, a);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex z = std::conj(psi[i]) * d[i];
      f.grad_rho.components[a][i] = 2.0 * z.real();
      f.j.components[a][i] = hbar * z.imag() / m;
      if (!f.valid[i]) continue;
      const double rho = f.rho[i];
      f.grad_S.components[a][i] = hbar * z.imag() / rho;
      f.v.components[a][i] = D * f.grad_rho.components[a][i] / rho + f.grad_S.components[a][i] / m;
    }
  }
  const ScalarField amp = modulus(psi);
  const ScalarField lap = laplacian(amp);
  for (std::size_t i = 0; i < n; ++i) {
    if (f.valid[i]) f.qpot[i] = -2.0 * m * D * D * lap[i] / amp[i];
  }
  return f;
}

MadelungFields from_density_and_action(const ScalarField& rho, const ScalarField& S, const PhysicalParams& p, double t,
                                       double rho_floor) {
  if (!(rho.grid == S.grid)) throw GridMismatch("from_density_and_action");
  const Grid& g = rho.grid;
  const std::size_t n = g.size();
  std::vector<std::uint8_t> valid(n);
  for (std::size_t i = 0; i < n; ++i) valid[i] = rho[i] > rho_floor ? 1 : 0;
  MadelungFields f{rho, S, VectorField(g), VectorField(g), gradient(rho), gradient(S), ScalarField(g), std::move(valid), t, 0};
  const double m = p.mass();
  const double D = p.diffusion();
  for (int a = 0; a < g.dim(); ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      f.j.components[a][i] = rho[i] * f.grad_S.components[a][i] / m;
      if (f.valid[i]) f.v.components[a][i] = D * f.grad_rho.components[a][i] / rho[i] + f.grad_S.components[a][i] / m;
    }
  }
  ScalarField amp(g);
  for (std::size_t i = 0; i < n; ++i) amp[i] = std::sqrt(std::max(rho[i], 0.0));
  const ScalarField lap = laplacian(amp);
  for (std::size_t i = 0; i < n; ++i) {
    if (f.valid[i]) f.qpot[i] = -2.0 * m * D * D * lap[i] / amp[i];
  }
  return f;
}

ScalarField quantum_potential_expanded(const ScalarField& rho, const PhysicalParams& p, double rho_floor) {
  const Grid& g = rho.grid;
  const VectorField grad = gradient(rho);
  const ScalarField lap = laplacian(rho);
  const double c = 0.5 * p.mass() * p.diffusion() * p.diffusion();
  ScalarField q(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(rho[i] > rho_floor)) continue;
    double g2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double r = grad.components[a][i] / rho[i];
      g2 += r * r;
    }
    q[i] = c * (g2 - 2.0 * lap[i] / rho[i]);
  }
  return q;
}

Residual continuity_residual(const MadelungFields& before, const MadelungFields& after, const PhysicalParams& p) {
  if (!(before.rho.grid == after.rho.grid)) throw GridMismatch("continuity_residual");
  const double dt = after.t - before.t;
  if (!(dt > 0.0)) throw InvalidArgument("continuity_residual needs before.t < after.t");
  const Grid& g = before.rho.grid;
  const std::size_t n = g.size();

  ScalarField rho_bar(g), s_bar(g);
  std::vector<std::uint8_t> both(n);
  for (std::size_t i = 0; i < n; ++i) {
    rho_bar[i] = 0.5 * (before.rho[i] + after.rho[i]);
    s_bar[i] = 0.5 * (before.S[i] + after.S[i]);
    both[i] = before.valid[i] && after.valid[i];
  }
  const VectorField grad_s = gradient(s_bar);
  VectorField flux(g);
  for (int a = 0; a < g.dim(); ++a) {
    for (std::size_t i = 0; i < n; ++i) flux.components[a][i] = rho_bar[i] * grad_s.components[a][i] / p.mass();
  }
  const ScalarField div = divergence(flux);
  Residual r{ScalarField(g), erode(g, both, 2)};
  for (std::size_t i = 0; i < n; ++i) {
    r.values[i] = r.mask[i] ? (after.rho[i] - before.rho[i]) / dt + div[i] : 0.0;
  }
  return r;
}

Residual hj_residual(const MadelungFields& before, const MadelungFields& now, const MadelungFields& after,
                     const Potential& u, const PhysicalParams& p) {
  const Grid& g = now.rho.grid;
  if (!(before.rho.grid == g) || !(after.rho.grid == g)) throw GridMismatch("hj_residual");
  const double span = after.t - before.t;
  if (!(before.t < now.t && now.t < after.t)) throw InvalidArgument("hj_residual needs before.t < now.t < after.t");
  const std::size_t n = g.size();
  std::vector<std::uint8_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = before.valid[i] && now.valid[i] && after.valid[i];
  Residual r{ScalarField(g), erode(g, all, 1)};
  const double two_m = 2.0 * p.mass();
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.mask[i]) continue;
    double gs2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) gs2 += now.grad_S.components[a][i] * now.grad_S.components[a][i];
    const double dsdt = (after.S[i] - before.S[i]) / span;
    r.values[i] = gs2 / two_m + u.value(g.point(i), g.dim()) + dsdt + now.qpot[i];
  }
  return r;
}

int winding_number(const ComplexField& psi, const std::vector<std::size_t>& loop, double eps_rel) {
  if (loop.size() < 3) throw InvalidArgument("winding loop needs at least 3 points");
  const double threshold = node_threshold(psi, eps_rel);
  for (std::size_t idx : loop) {
    if (idx >= psi.size()) throw InvalidArgument("winding loop index out of range");
    if (std::abs(psi[idx]) <= threshold) throw LoopThroughNode(idx);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const Complex a = psi[loop[k]];
    const Complex b = psi[loop[(k + 1) % loop.size()]];
    total += wrap_angle(std::arg(b) - std::arg(a));
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

std::vector<std::size_t> circle_loop(const Grid& g, double cx, double cy, double radius) {
  if (g.dim() != 2) throw DimensionUnsupported("circle_loop needs a 2D grid");
  if (!(radius > 0.0)) throw InvalidArgument("circle radius must be positive");
  const double h = std::min(g.spacing(0), g.spacing(1));
  const auto samples = static_cast<std::size_t>(std::ceil(8.0 * kTwoPi * radius / h)) + 16;
  std::vector<std::size_t> loop;
  for (std::size_t k = 0; k < samples; ++k) {
    const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(samples);
    std::size_t ij[2];
    const double xy[2] = {cx + radius * std::cos(th), cy + radius * std::sin(th)};
    for (int a = 0; a < 2; ++a) {
      const Axis& ax = g.axis(a);
      const double s = std::round((xy[a] - ax.lo) / ax.spacing());
      if (s < 0.0 || s > static_cast<double>(ax.n - 1)) throw InvalidArgument("circle leaves the grid");
      ij[a] = static_cast<std::size_t>(s);
    }
    const std::size_t idx = g.index(ij[0], ij[1]);
    if (loop.empty() || loop.back() != idx) loop.push_back(idx);
  }
  while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
  return loop;
}

NodalReport detect_nodal_regions(const MadelungFields& fields, double eps, std::optional<double> speed_threshold) {
  const Grid& g = fields.rho.grid;
  const std::size_t n = g.size();
  NodalReport report;
  report.speed_threshold = speed_threshold.value_or(10.0 * g.max_spacing() / g.dt());

  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> nbrs;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start] || !(fields.rho[start] < eps)) continue;
    NodalRegion region;
    bool touches_boundary = false;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      region.points.push_back(cur);
      touches_boundary = touches_boundary || g.on_boundary(cur);
      g.neighbors(cur, nbrs);
      for (std::size_t nb : nbrs) {
        if (!seen[nb] && fields.rho[nb] < eps) {
          seen[nb] = 1;
          queue.push_back(nb);
        }
      }
    }
    // Low density reaching the grid edge is the vacuum around the state, not a node.
    if (touches_boundary) continue;
    std::sort(region.points.begin(), region.points.end());
    region.speed_min = INFINITY;
    for (std::size_t i : region.points) {
      const double speed = fields.j.norm_at(i) / std::max(fields.rho[i], eps);
      region.rho_max = std::max(region.rho_max, fields.rho[i]);
      region.speed_min = std::min(region.speed_min, speed);
      region.speed_max = std::max(region.speed_max, speed);
    }
    region.flagged = region.speed_max > report.speed_threshold;
    if (region.flagged) ++report.flagged;
    report.regions.push_back(std::move(region));
  }
  report.count = report.regions.size();
  return report;
}

}  // namespace stochmech
