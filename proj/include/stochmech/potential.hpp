#pragma once

#include <array>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "stochmech/field.hpp"

namespace stochmech {

/// Mass and diffusion constant. hbar is always derived as 2 m D (or D as
/// hbar / 2m when hbar is the given one), never stored independently.
class PhysicalParams {
 public:
  static PhysicalParams from_diffusion(double mass, double diffusion);
  static PhysicalParams from_hbar(double mass, double hbar);
  /// D = 0: the non-random limit. Not valid input to the quantum solvers.
  static PhysicalParams classical(double mass);

  double mass() const { return mass_; }
  double diffusion() const { return diffusion_; }
  double hbar() const { return hbar_; }
  bool is_classical() const { return diffusion_ == 0.0; }

  bool operator==(const PhysicalParams&) const = default;

 private:
  PhysicalParams(double m, double d, double h) : mass_(m), diffusion_(d), hbar_(h) {}
  double mass_;
  double diffusion_;
  double hbar_;
};

struct FreePotential {};
/// U = k |x|^2 / 2.
struct HarmonicPotential {
  double k;
};
/// Finite Gaussian wall across axis 0: U = height exp(-(x - center)^2 / 2 width^2).
struct BarrierPotential {
  double height;
  double center;
  double width;
};
/// Values on a grid, multilinear in between, clamped outside.
struct TabulatedPotential {
  ScalarField table;
};

class Potential {
 public:
  using Kind = std::variant<FreePotential, HarmonicPotential, BarrierPotential, TabulatedPotential>;

  Potential() : kind_(FreePotential{}) {}
  static Potential free() { return Potential(FreePotential{}); }
  static Potential harmonic(double k);
  static Potential barrier(double height, double center, double width);
  static Potential tabulated(ScalarField table);

  /// Same shape, every value raised by c.
  Potential shifted(double c) const;
  double offset() const { return offset_; }
  const Kind& kind() const { return kind_; }
  std::string name() const;

  double value(std::array<double, 2> x, int dim) const;
  std::array<double, 2> gradient(std::array<double, 2> x, int dim) const;
  ScalarField sample(const Grid& g) const;

  nlohmann::json to_json() const;
  static Potential from_json(const nlohmann::json& j);

 private:
  explicit Potential(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
  double offset_ = 0.0;
};

}  // namespace stochmech
