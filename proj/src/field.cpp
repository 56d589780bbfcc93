#include "stochmech/field.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <sstream>

namespace stochmech {

Grid::Grid(std::vector<Axis> axes, double dt) : axes_(std::move(axes)), dt_(dt) {
  if (axes_.empty() || axes_.size() > 2) throw InvalidArgument("grid dimension must be 1 or 2");
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const Axis& ax = axes_[a];
    if (ax.n < 8) throw InvalidArgument("grid axis " + std::to_string(a) + " needs at least 8 points");
    if (!std::isfinite(ax.lo) || !std::isfinite(ax.hi) || !(ax.spacing() > 0.0)) {
      throw InvalidArgument("grid axis " + std::to_string(a) + " must have finite lo < hi");
    }
  }
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidArgument("grid dt must be positive");
}

Grid Grid::line(double lo, double hi, std::size_t n, double dt) { return Grid({Axis{lo, hi, n}}, dt); }

Grid Grid::plane(Axis x, Axis y, double dt) { return Grid({x, y}, dt); }

double Grid::max_spacing() const {
  double h = 0.0;
  for (const auto& ax : axes_) h = std::max(h, ax.spacing());
  return h;
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (const auto& ax : axes_) s *= ax.n;
  return s;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (const auto& ax : axes_) v *= ax.spacing();
  return v;
}

std::array<std::size_t, 2> Grid::multi_index(std::size_t idx) const {
  if (dim() == 1) return {idx, 0};
  return {idx / axes_[1].n, idx % axes_[1].n};
}

std::array<double, 2> Grid::point(std::size_t idx) const {
  auto [i, j] = multi_index(idx);
  if (dim() == 1) return {axes_[0].coord(i), 0.0};
  return {axes_[0].coord(i), axes_[1].coord(j)};
}

bool Grid::on_boundary(std::size_t idx) const {
  auto mi = multi_index(idx);
  for (int a = 0; a < dim(); ++a) {
    if (mi[a] == 0 || mi[a] + 1 == axes_[a].n) return true;
  }
  return false;
}

bool Grid::contains(std::array<double, 2> x) const {
  for (int a = 0; a < dim(); ++a) {
    if (x[a] < axes_[a].lo || x[a] > axes_[a].hi) return false;
  }
  return true;
}

void Grid::neighbors(std::size_t idx, std::vector<std::size_t>& out) const {
  out.clear();
  auto mi = multi_index(idx);
  for (int a = 0; a < dim(); ++a) {
    const std::size_t s = stride(a);
    if (mi[a] > 0) out.push_back(idx - s);
    if (mi[a] + 1 < axes_[a].n) out.push_back(idx + s);
  }
}

VectorField::VectorField(Grid g) : grid(std::move(g)) {
  components.assign(grid.dim(), std::vector<double>(grid.size(), 0.0));
}

double VectorField::norm_at(std::size_t idx) const { return std::sqrt(dot_at(idx, *this)); }

double VectorField::dot_at(std::size_t idx, const VectorField& other) const {
  double s = 0.0;
  for (std::size_t a = 0; a < components.size(); ++a) s += components[a][idx] * other.components[a][idx];
  return s;
}

namespace {

// Applies a 1D stencil along `axis` to every grid line.
template <class T, class Line>
Field<T> along_axis(const Field<T>& f, int axis, Line&& line) {
  const Grid& g = f.grid;
  Field<T> out(g);
  const std::size_t n = g.n(axis);
  const std::size_t stride = g.stride(axis);
  const std::size_t lines = g.size() / n;
  for (std::size_t l = 0; l < lines; ++l) {
    // Start index of line l: in 2D, axis 0 lines start at j, axis 1 lines at i*n1.
    const std::size_t start = (g.dim() == 2 && axis == 0) ? l : l * n;
    line(&f.values[start], &out.values[start], n, stride, g.spacing(axis));
  }
  return out;
}

template <class T>
Field<T> first_derivative(const Field<T>& f, int axis) {
  return along_axis(f, axis, [](const T* in, T* out, std::size_t n, std::size_t s, double h) {
    const double inv2h = 1.0 / (2.0 * h);
    out[0] = (-3.0 * in[0] + 4.0 * in[s] - in[2 * s]) * inv2h;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i * s] = (in[(i + 1) * s] - in[(i - 1) * s]) * inv2h;
    const std::size_t l = n - 1;
    out[l * s] = (3.0 * in[l * s] - 4.0 * in[(l - 1) * s] + in[(l - 2) * s]) * inv2h;
  });
}

template <class T>
Field<T> second_derivative_impl(const Field<T>& f, int axis) {
  return along_axis(f, axis, [](const T* in, T* out, std::size_t n, std::size_t s, double h) {
    const double invh2 = 1.0 / (h * h);
    out[0] = (2.0 * in[0] - 5.0 * in[s] + 4.0 * in[2 * s] - in[3 * s]) * invh2;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      out[i * s] = (in[(i + 1) * s] - 2.0 * in[i * s] + in[(i - 1) * s]) * invh2;
    }
    const std::size_t l = n - 1;
    out[l * s] = (2.0 * in[l * s] - 5.0 * in[(l - 1) * s] + 4.0 * in[(l - 2) * s] - in[(l - 3) * s]) * invh2;
  });
}

}  // namespace

ScalarField derivative(const ScalarField& f, int axis) { return first_derivative(f, axis); }
ComplexField derivative(const ComplexField& f, int axis) { return first_derivative(f, axis); }
ScalarField second_derivative(const ScalarField& f, int axis) { return second_derivative_impl(f, axis); }
ComplexField second_derivative(const ComplexField& f, int axis) { return second_derivative_impl(f, axis); }

VectorField gradient(const ScalarField& f) {
  VectorField g(f.grid);
  for (int a = 0; a < f.grid.dim(); ++a) g.components[a] = derivative(f, a).values;
  return g;
}

ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.grid);
  for (int a = 0; a < f.grid.dim(); ++a) {
    auto d2 = second_derivative(f, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d2[i];
  }
  return out;
}

ComplexField complex_laplacian(const ComplexField& f) {
  ComplexField out(f.grid);
  for (int a = 0; a < f.grid.dim(); ++a) {
    auto d2 = second_derivative(f, a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d2[i];
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  ScalarField out(v.grid);
  for (int a = 0; a < v.grid.dim(); ++a) {
    auto d = derivative(ScalarField(v.grid, v.components[a]), a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  return out;
}

double integrate(const ScalarField& f) {
  return std::accumulate(f.values.begin(), f.values.end(), 0.0) * f.grid.cell_volume();
}

double norm_squared(const ComplexField& psi) {
  double s = 0.0;
  for (const auto& z : psi.values) s += std::norm(z);
  return s * psi.grid.cell_volume();
}

ScalarField density(const ComplexField& psi) {
  ScalarField rho(psi.grid);
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
  return rho;
}

ScalarField modulus(const ComplexField& psi) {
  ScalarField a(psi.grid);
  for (std::size_t i = 0; i < psi.size(); ++i) a[i] = std::abs(psi[i]);
  return a;
}

void normalize(ComplexField& psi) {
  const double n2 = norm_squared(psi);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw InvalidArgument("cannot normalize a zero or non-finite field");
  const double scale = 1.0 / std::sqrt(n2);
  for (auto& z : psi.values) z *= scale;
}

double max_modulus(const ComplexField& psi) {
  double m = 0.0;
  for (const auto& z : psi.values) m = std::max(m, std::abs(z));
  return m;
}

double node_threshold(const ComplexField& psi, double eps_rel) { return eps_rel * max_modulus(psi); }

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  double r = std::remainder(a, 2.0 * pi);
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

namespace {

std::vector<std::size_t> path_to_root(std::size_t v, const std::vector<std::size_t>& parent) {
  std::vector<std::size_t> path{v};
  while (parent[v] != v) {
    v = parent[v];
    path.push_back(v);
  }
  return path;
}

// Signed polygon area of a loop; positive for counterclockwise.
double signed_area(const Grid& g, const std::vector<std::size_t>& loop) {
  double area = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    auto p = g.point(loop[k]);
    auto q = g.point(loop[(k + 1) % loop.size()]);
    area += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * area;
}

}  // namespace

PhaseField unwrap_phase(const ComplexField& psi, const UnwrapOptions& opts) {
  const Grid& g = psi.grid;
  const std::size_t n = g.size();
  const double threshold = node_threshold(psi, opts.eps_rel);

  PhaseField out{ScalarField(g), std::vector<std::uint8_t>(n, 0), {}, std::vector<std::uint32_t>(n, kUnreached), 0, {}};
  std::vector<double> arg(n);
  for (std::size_t i = 0; i < n; ++i) {
    arg[i] = std::arg(psi[i]);
    out.reachable[i] = std::abs(psi[i]) > threshold ? 1 : 0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(psi[a]) > std::abs(psi[b]); });

  std::vector<std::size_t> parent(n, n);
  std::vector<std::size_t> nbrs;
  std::deque<std::size_t> queue;
  for (std::size_t seed : order) {
    if (!out.reachable[seed]) break;
    if (parent[seed] != n) continue;
    parent[seed] = seed;
    out.S[seed] = opts.hbar * arg[seed];
    const auto comp = static_cast<std::uint32_t>(out.seeds.size());
    out.seeds.push_back(seed);
    out.component[seed] = comp;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      g.neighbors(cur, nbrs);
      for (std::size_t nb : nbrs) {
        if (!out.reachable[nb] || parent[nb] != n) continue;
        parent[nb] = cur;
        out.component[nb] = out.component[cur];
        out.S[nb] = out.S[cur] + opts.hbar * wrap_angle(arg[nb] - arg[cur]);
        queue.push_back(nb);
      }
    }
  }
  if (out.seeds.empty()) throw AllBelowThreshold();

  // Loop consistency: every non-tree edge must agree with the principal
  // phase difference, otherwise the cycle it closes winds.
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t a = 0; a < n; ++a) {
    if (!out.reachable[a]) continue;
    g.neighbors(a, nbrs);
    for (std::size_t b : nbrs) {
      if (b < a || !out.reachable[b]) continue;
      const double d = (out.S[b] - out.S[a]) / opts.hbar - wrap_angle(arg[b] - arg[a]);
      const long k = std::lround(d / two_pi);
      if (k == 0) continue;

      auto pa = path_to_root(a, parent);
      auto pb = path_to_root(b, parent);
      while (pa.size() > 1 && pb.size() > 1 && pa[pa.size() - 2] == pb[pb.size() - 2]) {
        pa.pop_back();
        pb.pop_back();
      }
      // pa and pb now end at the common ancestor; loop runs a -> lca -> b -> a.
      std::vector<std::size_t> loop(pa.begin(), pa.end());
      for (auto it = pb.rbegin() + 1; it != pb.rend(); ++it) loop.push_back(*it);
      int winding = static_cast<int>(k);
      if (signed_area(g, loop) < 0.0) {
        std::reverse(loop.begin(), loop.end());
        winding = -winding;
      }
      if (!opts.allow_multivalued) throw MultivaluedPhase(winding, std::move(loop));
      if (out.loop.empty()) {
        out.winding = winding;
        out.loop = std::move(loop);
      }
    }
  }
  return out;
}

ConfigInvalid::ConfigInvalid(std::vector<std::string> problems)
    : Error(ErrorClass::config,
            [&] {
              std::ostringstream os;
              os << "invalid configuration:";
              for (const auto& p : problems) os << "\n  - " << p;
              return os.str();
            }()),
      problems_(std::move(problems)) {}

MultivaluedPhase::MultivaluedPhase(int winding, std::vector<std::size_t> loop)
    : Error(ErrorClass::physics, "phase is multivalued: winding " + std::to_string(winding) + " around a loop of " +
                                     std::to_string(loop.size()) + " points"),
      winding_(winding),
      loop_(std::move(loop)) {}

}  // namespace stochmech
