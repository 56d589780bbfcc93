#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "stochmech/errors.hpp"

namespace stochmech {

using Complex = std::complex<double>;

/// One closed interval [lo, hi] sampled at n equally spaced points.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 8;

  double spacing() const { return (hi - lo) / static_cast<double>(n - 1); }
  /// Coordinate of point i. The last point is exactly hi.
  double coord(std::size_t i) const { return i + 1 == n ? hi : lo + static_cast<double>(i) * spacing(); }

  bool operator==(const Axis&) const = default;
};

/// Uniform 1D or 2D grid plus the time step used to advance fields on it.
///
/// Points are stored row-major with axis 0 slowest: idx = i * n1 + j.
class Grid {
 public:
  Grid(std::vector<Axis> axes, double dt);

  static Grid line(double lo, double hi, std::size_t n, double dt);
  static Grid plane(Axis x, Axis y, double dt);

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int a) const { return axes_[a]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t n(int a) const { return axes_[a].n; }
  double spacing(int a) const { return axes_[a].spacing(); }
  double max_spacing() const;
  double dt() const { return dt_; }
  std::size_t size() const;
  double cell_volume() const;

  std::size_t stride(int a) const { return (dim() == 2 && a == 0) ? axes_[1].n : 1; }
  std::size_t index(std::size_t i, std::size_t j = 0) const { return dim() == 2 ? i * axes_[1].n + j : i; }
  std::array<std::size_t, 2> multi_index(std::size_t idx) const;
  std::array<double, 2> point(std::size_t idx) const;
  bool on_boundary(std::size_t idx) const;
  bool contains(std::array<double, 2> x) const;

  /// Neighbor indices along the axes (4-connectivity in 2D).
  void neighbors(std::size_t idx, std::vector<std::size_t>& out) const;

  Grid with_dt(double dt) const { return Grid(axes_, dt); }

  bool operator==(const Grid&) const = default;

 private:
  std::vector<Axis> axes_;
  double dt_;
};

template <class T>
struct Field {
  Grid grid;
  std::vector<T> values;

  explicit Field(Grid g) : grid(std::move(g)), values(grid.size()) {}
  Field(Grid g, std::vector<T> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw InvalidArgument("field value count does not match grid point count");
  }

  std::size_t size() const { return values.size(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
};

using ScalarField = Field<double>;
using ComplexField = Field<Complex>;

/// Per-point d-vector, stored as one component array per axis.
struct VectorField {
  Grid grid;
  std::vector<std::vector<double>> components;

  explicit VectorField(Grid g);
  std::size_t size() const { return grid.size(); }
  double norm_at(std::size_t idx) const;
  double dot_at(std::size_t idx, const VectorField& other) const;
};

// -- calculus -------------------------------------------------------------
//
// Second-order central differences in the interior, second-order one-sided
// stencils on boundary rows. No ghost data is invented.

ScalarField derivative(const ScalarField& f, int axis);
ComplexField derivative(const ComplexField& f, int axis);
ScalarField second_derivative(const ScalarField& f, int axis);
ComplexField second_derivative(const ComplexField& f, int axis);

VectorField gradient(const ScalarField& f);
ScalarField laplacian(const ScalarField& f);
ComplexField complex_laplacian(const ComplexField& f);
ScalarField divergence(const VectorField& v);

/// Riemann sum: sum(f) * cell volume.
double integrate(const ScalarField& f);
double norm_squared(const ComplexField& psi);
ScalarField density(const ComplexField& psi);
ScalarField modulus(const ComplexField& psi);
/// Scales psi so that sum |psi|^2 * cellvol == 1. Throws on a zero field.
void normalize(ComplexField& psi);
double max_modulus(const ComplexField& psi);

/// Absolute node threshold: eps_rel * max|psi|.
double node_threshold(const ComplexField& psi, double eps_rel = 1e-6);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// -- phase unwrapping ------------------------------------------------------

inline constexpr std::uint32_t kUnreached = 0xFFFFFFFFu;

struct PhaseField {
  ScalarField S;                        ///< hbar * unwrapped arg(psi); 0 where unreachable
  std::vector<std::uint8_t> reachable;  ///< 1 where |psi| > threshold
  std::vector<std::size_t> seeds;       ///< one seed per connected reachable component
  std::vector<std::uint32_t> component; ///< index into seeds; kUnreached where unreachable
  /// Set only when unwrapping with allow_multivalued: the first offending loop.
  int winding = 0;
  std::vector<std::size_t> loop;
};

struct UnwrapOptions {
  double hbar = 1.0;
  double eps_rel = 1e-6;
  /// Return the breadth-first (path-dependent) phase instead of throwing.
  bool allow_multivalued = false;
};

/// Breadth-first unwrapping from the global max of |psi|; each edge adds the
/// principal-branch phase difference. Further components are seeded from
/// their own maxima. Throws MultivaluedPhase if any closed loop of reachable
/// points winds, AllBelowThreshold if nothing is reachable.
PhaseField unwrap_phase(const ComplexField& psi, const UnwrapOptions& opts = {});

}  // namespace stochmech
