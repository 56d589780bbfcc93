#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmech {

/// Coarse error classes. The CLI maps each class to its own exit code.
enum class ErrorClass : int {
  config = 2,
  numerical = 3,
  io = 4,
  physics = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorClass::config, what) {}
};

/// Field-level configuration problems, one message per offending field.
class ConfigInvalid : public Error {
 public:
  explicit ConfigInvalid(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class GridMismatch : public Error {
 public:
  explicit GridMismatch(const std::string& where)
      : Error(ErrorClass::config, "grid mismatch in " + where) {}
};

class DimensionUnsupported : public Error {
 public:
  explicit DimensionUnsupported(const std::string& what) : Error(ErrorClass::config, what) {}
};

/// The phase of psi cannot be unwrapped to a single-valued field: some closed
/// loop of reachable points carries a nonzero winding.
class MultivaluedPhase : public Error {
 public:
  MultivaluedPhase(int winding, std::vector<std::size_t> loop);
  int winding() const noexcept { return winding_; }
  const std::vector<std::size_t>& loop() const noexcept { return loop_; }

 private:
  int winding_;
  std::vector<std::size_t> loop_;
};

class AllBelowThreshold : public Error {
 public:
  AllBelowThreshold() : Error(ErrorClass::physics, "no point of psi exceeds the node threshold") {}
};

class LoopThroughNode : public Error {
 public:
  explicit LoopThroughNode(std::size_t point)
      : Error(ErrorClass::physics, "winding loop passes through a node at point " + std::to_string(point)),
        point_(point) {}
  std::size_t point() const noexcept { return point_; }

 private:
  std::size_t point_;
};

class LinearSolveFailure : public Error {
 public:
  explicit LinearSolveFailure(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class StepSizeTooLarge : public Error {
 public:
  explicit StepSizeTooLarge(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

class NotNormalized : public Error {
 public:
  explicit NotNormalized(double integral)
      : Error(ErrorClass::physics, "density is not normalized (integral " + std::to_string(integral) + ")") {}
};

class DegenerateAbscissae : public Error {
 public:
  DegenerateAbscissae() : Error(ErrorClass::numerical, "fit needs at least 3 points with distinct abscissae") {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

}  // namespace stochmech
