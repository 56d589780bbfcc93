#include "stochmech/potential.hpp"

#include <algorithm>
#include <cmath>

#include "stochmech/field_io.hpp"

namespace stochmech {

PhysicalParams PhysicalParams::from_diffusion(double mass, double diffusion) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("mass must be positive");
  if (!(diffusion > 0.0) || !std::isfinite(diffusion)) throw InvalidArgument("diffusion constant must be positive");
  return {mass, diffusion, 2.0 * mass * diffusion};
}

PhysicalParams PhysicalParams::from_hbar(double mass, double hbar) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("mass must be positive");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidArgument("hbar must be positive");
  return {mass, hbar / (2.0 * mass), hbar};
}

PhysicalParams PhysicalParams::classical(double mass) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("mass must be positive");
  return {mass, 0.0, 0.0};
}

Potential Potential::harmonic(double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("harmonic spring constant must be positive");
  return Potential(HarmonicPotential{k});
}

Potential Potential::barrier(double height, double center, double width) {
  if (!std::isfinite(height) || !std::isfinite(center)) throw InvalidArgument("barrier height and center must be finite");
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidArgument("barrier width must be positive");
  return Potential(BarrierPotential{height, center, width});
}

Potential Potential::tabulated(ScalarField table) {
  for (double v : table.values) {
    if (!std::isfinite(v)) throw InvalidArgument("tabulated potential values must be finite");
  }
  return Potential(TabulatedPotential{std::move(table)});
}

Potential Potential::shifted(double c) const {
  Potential p = *this;
  p.offset_ += c;
  return p;
}

std::string Potential::name() const {
  struct {
    std::string operator()(const FreePotential&) const { return "free"; }
    std::string operator()(const HarmonicPotential&) const { return "harmonic"; }
    std::string operator()(const BarrierPotential&) const { return "barrier"; }
    std::string operator()(const TabulatedPotential&) const { return "tabulated"; }
  } v;
  return std::visit(v, kind_);
}

namespace {

// Bilinear (or linear) interpolation weights on a table grid, clamped.
struct Stencil {
  std::size_t idx[4];
  double w[4];
  int count;
};

Stencil locate(const Grid& g, std::array<double, 2> x) {
  std::size_t i[2] = {0, 0};
  double f[2] = {0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const Axis& ax = g.axis(a);
    const double s = std::clamp((x[a] - ax.lo) / ax.spacing(), 0.0, static_cast<double>(ax.n - 1));
    i[a] = std::min(static_cast<std::size_t>(s), ax.n - 2);
    f[a] = s - static_cast<double>(i[a]);
  }
  if (g.dim() == 1) return {{i[0], i[0] + 1, 0, 0}, {1.0 - f[0], f[0], 0, 0}, 2};
  return {{g.index(i[0], i[1]), g.index(i[0] + 1, i[1]), g.index(i[0], i[1] + 1), g.index(i[0] + 1, i[1] + 1)},
          {(1 - f[0]) * (1 - f[1]), f[0] * (1 - f[1]), (1 - f[0]) * f[1], f[0] * f[1]},
          4};
}

double interpolate(const ScalarField& t, std::array<double, 2> x) {
  const Stencil s = locate(t.grid, x);
  double v = 0.0;
  for (int k = 0; k < s.count; ++k) v += s.w[k] * t[s.idx[k]];
  return v;
}

}  // namespace

double Potential::value(std::array<double, 2> x, int dim) const {
  double u = 0.0;
  if (const auto* h = std::get_if<HarmonicPotential>(&kind_)) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
    u = 0.5 * h->k * r2;
  } else if (const auto* b = std::get_if<BarrierPotential>(&kind_)) {
    const double z = (x[0] - b->center) / b->width;
    u = b->height * std::exp(-0.5 * z * z);
  } else if (const auto* t = std::get_if<TabulatedPotential>(&kind_)) {
    u = interpolate(t->table, x);
  }
  return u + offset_;
}

std::array<double, 2> Potential::gradient(std::array<double, 2> x, int dim) const {
  std::array<double, 2> g{0.0, 0.0};
  if (const auto* h = std::get_if<HarmonicPotential>(&kind_)) {
    for (int a = 0; a < dim; ++a) g[a] = h->k * x[a];
  } else if (const auto* b = std::get_if<BarrierPotential>(&kind_)) {
    const double z = (x[0] - b->center) / b->width;
    g[0] = -b->height * z / b->width * std::exp(-0.5 * z * z);
  } else if (const auto* t = std::get_if<TabulatedPotential>(&kind_)) {
    // Central difference of the interpolant over one table cell.
    for (int a = 0; a < dim; ++a) {
      const double h = t->table.grid.spacing(a);
      auto xp = x, xm = x;
      xp[a] += 0.5 * h;
      xm[a] -= 0.5 * h;
      g[a] = (interpolate(t->table, xp) - interpolate(t->table, xm)) / h;
    }
  }
  return g;
}

ScalarField Potential::sample(const Grid& g) const {
  ScalarField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = value(g.point(i), g.dim());
  return u;
}

nlohmann::json Potential::to_json() const {
  nlohmann::json j{{"kind", name()}};
  if (const auto* h = std::get_if<HarmonicPotential>(&kind_)) {
    j["k"] = h->k;
  } else if (const auto* b = std::get_if<BarrierPotential>(&kind_)) {
    j["height"] = b->height;
    j["center"] = b->center;
    j["width"] = b->width;
  } else if (const auto* t = std::get_if<TabulatedPotential>(&kind_)) {
    j["grid"] = grid_to_json(t->table.grid);
    j["values"] = t->table.values;
  }
  if (offset_ != 0.0) j["offset"] = offset_;
  return j;
}

Potential Potential::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  Potential p;
  if (kind == "free") {
    p = free();
  } else if (kind == "harmonic") {
    p = harmonic(j.at("k").get<double>());
  } else if (kind == "barrier") {
    p = barrier(j.at("height").get<double>(), j.at("center").get<double>(), j.at("width").get<double>());
  } else if (kind == "tabulated") {
    p = tabulated(ScalarField(grid_from_json(j.at("grid")), j.at("values").get<std::vector<double>>()));
  } else {
    throw InvalidArgument("unknown potential kind '" + kind + "'");
  }
  return p.shifted(j.value("offset", 0.0));
}

}  // namespace stochmech
