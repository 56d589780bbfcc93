#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "stochmech/field.hpp"

namespace stochmech {

inline constexpr double kKlFloor = 1e-12;

struct KlDivergence {
  double value = 0.0;
  /// Cells where p exceeds the floor but q had to be raised to it.
  std::size_t floored = 0;
};

/// sum p ln(max(p, f) / max(q, f)) * cellvol with f = 1e-12. Not symmetric: p is the
/// empirical density, q the reference.
KlDivergence kl_divergence(const ScalarField& p, const ScalarField& q);

/// Integral of |CDF_p - CDF_q| by the trapezoid rule. 1D only.
double wasserstein1_1d(const ScalarField& p, const ScalarField& q);

double l2_distance(const ScalarField& p, const ScalarField& q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

/// Ordinary least squares. Throws DegenerateAbscissae with fewer than 3
/// points or all abscissae equal.
LinearFit fit_linear(std::span<const double> ts, std::span<const double> ys);

struct ComparisonReport {
  double kl = 0.0;
  std::size_t kl_floored = 0;
  double w1 = 0.0;  ///< NaN for 2D
  double l2 = 0.0;
  std::vector<double> mean_delta;      ///< per axis, empirical - reference
  std::vector<double> variance_delta;  ///< per axis
  std::size_t n_effective = 0;

  nlohmann::json to_json() const;
};

/// Full comparison, argument order (empirical, reference).
ComparisonReport compare_densities(const ScalarField& empirical, const ScalarField& reference,
                                   std::size_t n_effective = 0);

/// Per-axis mean and variance of a density on its grid.
struct DensityMoments {
  std::vector<double> mean;
  std::vector<double> variance;
};
DensityMoments density_moments(const ScalarField& rho);

}  // namespace stochmech
