#include "stochmech/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochmech {

KlDivergence kl_divergence(const ScalarField& p, const ScalarField& q) {
  if (!(p.grid == q.grid)) throw GridMismatch("kl_divergence");
  KlDivergence r;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) continue;
    // Both sides are floored so that equal densities give exactly zero even
    // in tails below the floor.
    if (q[i] < kKlFloor && p[i] > kKlFloor) ++r.floored;
    r.value += p[i] * std::log(std::max(p[i], kKlFloor) / std::max(q[i], kKlFloor));
  }
  r.value *= p.grid.cell_volume();
  return r;
}

double wasserstein1_1d(const ScalarField& p, const ScalarField& q) {
  if (p.grid.dim() != 1) throw DimensionUnsupported("wasserstein1_1d needs a 1D grid");
  if (!(p.grid == q.grid)) throw GridMismatch("wasserstein1_1d");
  const double h = p.grid.spacing(0);
  double cp = 0.0, cq = 0.0, prev = 0.0, w = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cp += p[i] * h;
    cq += q[i] * h;
    const double d = std::abs(cp - cq);
    if (i > 0) w += 0.5 * (prev + d) * h;
    prev = d;
  }
  return w;
}

double l2_distance(const ScalarField& p, const ScalarField& q) {
  if (!(p.grid == q.grid)) throw GridMismatch("l2_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
  return std::sqrt(s * p.grid.cell_volume());
}

LinearFit fit_linear(std::span<const double> ts, std::span<const double> ys) {
  if (ts.size() != ys.size()) throw InvalidArgument("fit_linear: length mismatch");
  const std::size_t n = ts.size();
  if (n < 3) throw DegenerateAbscissae();
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    sty += (ts[i] - tm) * (ys[i] - ym);
  }
  if (!(stt > 0.0)) throw DegenerateAbscissae();
  LinearFit f;
  f.slope = sty / stt;
  f.intercept = ym - f.slope * tm;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (f.intercept + f.slope * ts[i]);
    sse += r * r;
  }
  f.stderr_slope = std::sqrt(sse / static_cast<double>(n - 2) / stt);
  return f;
}

DensityMoments density_moments(const ScalarField& rho) {
  const Grid& g = rho.grid;
  DensityMoments m{std::vector<double>(g.dim(), 0.0), std::vector<double>(g.dim(), 0.0)};
  double mass = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    mass += rho[i];
    for (int a = 0; a < g.dim(); ++a) m.mean[a] += rho[i] * x[a];
  }
  for (int a = 0; a < g.dim(); ++a) m.mean[a] /= mass;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.point(i);
    for (int a = 0; a < g.dim(); ++a) m.variance[a] += rho[i] * (x[a] - m.mean[a]) * (x[a] - m.mean[a]);
  }
  for (int a = 0; a < g.dim(); ++a) m.variance[a] /= mass;
  return m;
}

ComparisonReport compare_densities(const ScalarField& empirical, const ScalarField& reference,
                                   std::size_t n_effective) {
  ComparisonReport r;
  const auto kl = kl_divergence(empirical, reference);
  r.kl = kl.value;
  r.kl_floored = kl.floored;
  r.w1 = empirical.grid.dim() == 1 ? wasserstein1_1d(empirical, reference) : std::numeric_limits<double>::quiet_NaN();
  r.l2 = l2_distance(empirical, reference);
  const auto me = density_moments(empirical);
  const auto mr = density_moments(reference);
  for (std::size_t a = 0; a < me.mean.size(); ++a) {
    r.mean_delta.push_back(me.mean[a] - mr.mean[a]);
    r.variance_delta.push_back(me.variance[a] - mr.variance[a]);
  }
  if (n_effective == 0) {
    n_effective = static_cast<std::size_t>(
        std::count_if(empirical.values.begin(), empirical.values.end(), [](double v) { return v > 0.0; }));
  }
  r.n_effective = n_effective;
  return r;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json j{{"kl", kl},       {"kl_floored_cells", kl_floored}, {"l2", l2},
                   {"moments", {{"mean_delta", mean_delta}, {"variance_delta", variance_delta}}},
                   {"n_effective", n_effective}};
  j["w1"] = std::isnan(w1) ? nlohmann::json(nullptr) : nlohmann::json(w1);
  return j;
}

}  // namespace stochmech
