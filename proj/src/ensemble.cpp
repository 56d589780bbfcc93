#include "stochmech/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stochmech/random.hpp"

namespace stochmech {

namespace {

// Index of the first cdf entry strictly greater than u.
std::size_t pick(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

double jitter(const Axis& ax, std::size_t i, double u) {
  const double h = ax.spacing();
  const double lo = std::max(ax.lo, ax.coord(i) - 0.5 * h);
  const double hi = std::min(ax.hi, ax.coord(i) + 0.5 * h);
  return lo + u * (hi - lo);
}

// Fractional cell coordinate on one axis, clamped to the grid.
inline void cell_of(const Axis& ax, double x, std::size_t& i, double& f) {
  const double s = std::clamp((x - ax.lo) / ax.spacing(), 0.0, static_cast<double>(ax.n - 1));
  i = std::min(static_cast<std::size_t>(s), ax.n - 2);
  f = s - static_cast<double>(i);
}

// Multilinear interpolation written as nested lerps so constant fields are reproduced exactly.
inline double interpolate(const Grid& g, const std::vector<double>& v, const double* x) {
  std::size_t i0, i1 = 0;
  double f0, f1 = 0.0;
  cell_of(g.axis(0), x[0], i0, f0);
  if (g.dim() == 1) return v[i0] + f0 * (v[i0 + 1] - v[i0]);
  cell_of(g.axis(1), x[1], i1, f1);
  const std::size_t n1 = g.n(1);
  const double* r0 = &v[i0 * n1 + i1];
  const double* r1 = &v[(i0 + 1) * n1 + i1];
  const double a = r0[0] + f0 * (r1[0] - r0[0]);
  const double b = r0[1] + f0 * (r1[1] - r0[1]);
  return a + f1 * (b - a);
}

}  // namespace

ParticleEnsemble sample_initial(const ScalarField& rho, std::size_t n, std::uint64_t seed) {
  const Grid& g = rho.grid;
  if (n == 0) throw InvalidArgument("ensemble needs at least one particle");
  for (double r : rho.values) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("density must be finite and nonnegative");
  }
  const double total = integrate(rho);
  if (std::abs(total - 1.0) > 1e-6) throw NotNormalized(total);

  ParticleEnsemble e;
  e.dim = g.dim();
  e.seed = seed;
  e.positions.resize(n * static_cast<std::size_t>(e.dim));

  if (g.dim() == 1) {
    std::vector<double> cdf(g.size());
    std::partial_sum(rho.values.begin(), rho.values.end(), cdf.begin());
    for (auto& c : cdf) c /= cdf.back();
    for (std::size_t k = 0; k < n; ++k) {
      const auto b = random_block(seed, Substream::init_sampling, k, 0);
      const std::size_t i = pick(cdf, uniform01(b[0], b[1]));
      e.positions[k] = jitter(g.axis(0), i, uniform01(b[2], b[3]));
    }
    return e;
  }

  // Marginal over axis 0, then the conditional row.
  const std::size_t n0 = g.n(0), n1 = g.n(1);
  std::vector<double> marginal(n0);
  std::vector<std::vector<double>> rows(n0, std::vector<double>(n1));
  for (std::size_t i = 0; i < n0; ++i) {
    std::partial_sum(rho.values.begin() + i * n1, rho.values.begin() + (i + 1) * n1, rows[i].begin());
    marginal[i] = rows[i].back();
    if (rows[i].back() > 0.0) {
      for (auto& c : rows[i]) c /= rows[i].back();
    }
  }
  std::partial_sum(marginal.begin(), marginal.end(), marginal.begin());
  for (auto& c : marginal) c /= marginal.back();
  for (std::size_t k = 0; k < n; ++k) {
    const auto b = random_block(seed, Substream::init_sampling, k, 0);
    const auto b2 = random_block(seed, Substream::init_sampling, k, 1);
    const std::size_t i = pick(marginal, uniform01(b[0], b[1]));
    const std::size_t j = pick(rows[i], uniform01(b[2], b[3]));
    e.positions[2 * k] = jitter(g.axis(0), i, uniform01(b2[0], b2[1]));
    e.positions[2 * k + 1] = jitter(g.axis(1), j, uniform01(b2[2], b2[3]));
  }
  return e;
}

void step_ensemble_in_place(ParticleEnsemble& e, const VectorField& drift, double diffusion, double dt,
                            const Execution& exec) {
  const Grid& g = drift.grid;
  if (g.dim() != e.dim) throw GridMismatch("step_ensemble: drift dimension");
  if (!(dt > 0.0)) throw InvalidArgument("ensemble time step must be positive");
  if (!(diffusion >= 0.0)) throw InvalidArgument("diffusion constant must be nonnegative");
  const double sigma = std::sqrt(2.0 * diffusion * dt);
  const std::size_t n = e.size();
  const int dim = e.dim;
  const std::uint64_t step = e.steps;
  const std::uint64_t seed = e.seed;

  std::vector<std::size_t> escaped(exec.resolved(), 0);
  parallel_chunks(n, exec, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::size_t local = 0;
    for (std::size_t k = begin; k < end; ++k) {
      double* x = &e.positions[k * static_cast<std::size_t>(dim)];
      double v[2];
      for (int a = 0; a < dim; ++a) v[a] = interpolate(g, drift.components[a], x);
      const auto z = normal_pair(random_block(seed, Substream::stepping, k, step));
      bool clamped = false;
      for (int a = 0; a < dim; ++a) {
        double y = x[a] + v[a] * dt + sigma * z[a];
        const Axis& ax = g.axis(a);
        if (y < ax.lo || y > ax.hi || !std::isfinite(y)) {
          y = std::isfinite(y) ? std::clamp(y, ax.lo, ax.hi) : ax.coord(ax.n / 2);
          clamped = true;
        }
        x[a] = y;
      }
      if (clamped) ++local;
    }
    escaped[chunk] = local;
  });
  e.escaped += std::accumulate(escaped.begin(), escaped.end(), std::size_t{0});
  e.t += dt;
  ++e.steps;
}

ParticleEnsemble step_ensemble(const ParticleEnsemble& e, const VectorField& drift, double diffusion, double dt,
                               const Execution& exec) {
  ParticleEnsemble out = e;
  step_ensemble_in_place(out, drift, diffusion, dt, exec);
  return out;
}

namespace {

// Grid points receiving mass from coordinate x on one axis, with weights.
struct AxisWeights {
  std::size_t first = 0;
  std::vector<double> w;
};

bool axis_weights(const Axis& ax, double x, double bandwidth, AxisWeights& out) {
  const double h = ax.spacing();
  const double s = (x - ax.lo) / h;
  if (s < -0.5 || s > static_cast<double>(ax.n) - 0.5) return false;
  out.w.clear();
  if (bandwidth <= 0.0) {
    out.first = std::min(static_cast<std::size_t>(std::llround(std::max(s, 0.0))), ax.n - 1);
    out.w.push_back(1.0);
    return true;
  }
  const double reach = bandwidth / h;
  const auto lo = static_cast<long>(std::ceil(s - reach));
  const auto hi = static_cast<long>(std::floor(s + reach));
  const long first = std::max(lo, 0L);
  const long last = std::min(hi, static_cast<long>(ax.n) - 1);
  double sum = 0.0;
  for (long i = first; i <= last; ++i) {
    const double w = std::max(0.0, 1.0 - std::abs(s - static_cast<double>(i)) / reach);
    out.w.push_back(w);
    sum += w;
  }
  if (sum <= 0.0) {
    // Bandwidth below the distance to any point: fall back to the nearest one.
    return axis_weights(ax, x, 0.0, out);
  }
  out.first = static_cast<std::size_t>(first);
  for (auto& w : out.w) w /= sum;
  return true;
}

}  // namespace

DensityEstimate estimate_density(const ParticleEnsemble& e, const Grid& grid, double bandwidth) {
  if (grid.dim() != e.dim) throw GridMismatch("estimate_density: dimension");
  DensityEstimate est{ScalarField(grid), 0, 0};
  AxisWeights wx, wy;
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (!axis_weights(grid.axis(0), e.coord(k, 0), bandwidth, wx) ||
        (e.dim == 2 && !axis_weights(grid.axis(1), e.coord(k, 1), bandwidth, wy))) {
      ++est.excluded;
      continue;
    }
    ++est.counted;
    if (e.dim == 1) {
      for (std::size_t a = 0; a < wx.w.size(); ++a) est.density[wx.first + a] += wx.w[a];
    } else {
      for (std::size_t a = 0; a < wx.w.size(); ++a) {
        for (std::size_t b = 0; b < wy.w.size(); ++b) {
          est.density[grid.index(wx.first + a, wy.first + b)] += wx.w[a] * wy.w[b];
        }
      }
    }
  }
  if (est.counted > 0) {
    const double scale = 1.0 / (static_cast<double>(est.counted) * grid.cell_volume());
    for (auto& v : est.density.values) v *= scale;
  }
  return est;
}

double particle_average(const ParticleEnsemble& e, const ScalarField& f) {
  if (f.grid.dim() != e.dim) throw GridMismatch("particle_average: dimension");
  double s = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) s += interpolate(f.grid, f.values, &e.positions[k * e.dim]);
  return s / static_cast<double>(e.size());
}

SampleMoments sample_moments(const ParticleEnsemble& e) {
  SampleMoments m{std::vector<double>(e.dim, 0.0), std::vector<double>(e.dim, 0.0)};
  const double n = static_cast<double>(e.size());
  for (int a = 0; a < e.dim; ++a) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) s += e.coord(k, a);
    m.mean[a] = s / n;
    double v = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      const double d = e.coord(k, a) - m.mean[a];
      v += d * d;
    }
    m.variance[a] = v / n;
  }
  return m;
}

KineticEnergyReport kinetic_energy_estimate(const MadelungFields& f, const PhysicalParams& p) {
  const Grid& g = f.rho.grid;
  KineticEnergyReport r{ScalarField(g), 0.0, 0.0};
  const double m = p.mass();
  const double D = p.diffusion();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!f.valid[i]) continue;
    const double v2 = f.v.dot_at(i, f.v);
    const double v_grad = f.v.dot_at(i, f.grad_rho) / f.rho[i];
    r.T_field[i] = 0.5 * m * (v2 - 2.0 * D * v_grad);
    r.T_mean += f.rho[i] * r.T_field[i];
  }
  r.T_mean *= g.cell_volume();
  return r;
}

ComDiffusionResult com_diffusion_experiment(const ComDiffusionConfig& cfg) {
  if (cfg.n_particles == 0) throw InvalidArgument("com experiment needs at least one particle per system");
  if (cfg.ensembles < 2) throw InvalidArgument("com experiment needs at least two systems");
  if (cfg.steps < 3) throw InvalidArgument("com experiment needs at least three steps");
  if (!(cfg.diffusion > 0.0) || !(cfg.dt > 0.0)) throw InvalidArgument("com experiment needs D > 0 and dt > 0");
  if (cfg.dim < 1 || cfg.dim > 2) throw InvalidArgument("com experiment dimension must be 1 or 2");
  const std::size_t max_lag = cfg.max_lag > 0 ? std::min(cfg.max_lag, cfg.steps - 1) : std::max<std::size_t>(1, cfg.steps / 10);
  const std::size_t batches = std::clamp<std::size_t>(cfg.batches, 2, cfg.ensembles);
  const double sigma = std::sqrt(2.0 * cfg.diffusion * cfg.dt);
  const auto dim = static_cast<std::size_t>(cfg.dim);

  // Per system: sum of squared COM displacements at each lag, pooled over axes and origins.
  std::vector<std::vector<double>> msd_sum(cfg.ensembles, std::vector<double>(max_lag + 1, 0.0));
  std::vector<double> com((cfg.steps + 1) * dim);
  std::vector<double> pos(cfg.n_particles * dim);
  for (std::size_t s = 0; s < cfg.ensembles; ++s) {
    std::fill(pos.begin(), pos.end(), 0.0);
    std::fill(com.begin(), com.begin() + dim, 0.0);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
      for (std::size_t k = 0; k < cfg.n_particles; ++k) {
        const auto z = normal_pair(random_block(cfg.seed, Substream::com_experiment, s * cfg.n_particles + k, step));
        for (std::size_t a = 0; a < dim; ++a) pos[k * dim + a] += sigma * z[a];
      }
      for (std::size_t a = 0; a < dim; ++a) {
        double c = 0.0;
        for (std::size_t k = 0; k < cfg.n_particles; ++k) c += pos[k * dim + a];
        com[(step + 1) * dim + a] = c / static_cast<double>(cfg.n_particles);
      }
    }
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
      double acc = 0.0;
      for (std::size_t t0 = 0; t0 + lag <= cfg.steps; ++t0) {
        for (std::size_t a = 0; a < dim; ++a) {
          const double d = com[(t0 + lag) * dim + a] - com[t0 * dim + a];
          acc += d * d;
        }
      }
      msd_sum[s][lag] = acc;
    }
  }

  // Least squares through the origin on the pooled MSD curve of a set of systems.
  auto fit = [&](std::size_t first, std::size_t last) {
    double num = 0.0, den = 0.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
      double acc = 0.0;
      for (std::size_t s = first; s < last; ++s) acc += msd_sum[s][lag];
      const double samples = static_cast<double>((last - first) * (cfg.steps - lag + 1) * dim);
      const double msd = acc / samples;
      const double tau = static_cast<double>(lag) * cfg.dt;
      num += tau * msd;
      den += tau * tau;
    }
    return num / den / 2.0;
  };

  ComDiffusionResult r;
  r.d_com_fit = fit(0, cfg.ensembles);
  std::vector<double> per_batch;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t first = b * cfg.ensembles / batches;
    const std::size_t last = (b + 1) * cfg.ensembles / batches;
    per_batch.push_back(fit(first, last));
  }
  const double mean = std::accumulate(per_batch.begin(), per_batch.end(), 0.0) / static_cast<double>(batches);
  double var = 0.0;
  for (double d : per_batch) var += (d - mean) * (d - mean);
  var /= static_cast<double>(batches - 1);
  r.standard_error = std::sqrt(var / static_cast<double>(batches));
  r.n_particles = cfg.n_particles;
  r.ensembles = cfg.ensembles;
  r.seed = cfg.seed;
  return r;
}

}  // namespace stochmech
