#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace elcap {

/// Machine-readable failure categories shared by every module.
enum class ErrorCode {
  EmptySet,
  BoundaryClipped,
  RadiusTooSmall,
  MixedGrids,
  DegenerateElement,
  OutOfBounds,
  Inadmissible,
  DegenerateSeparation,
  SolverDiverged,
  NeedThreeRadii,
  FeatureBelowResolution,
  InfeasibleStart,
  InvalidArgument,
  ConfigInvalid,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown when the linear solve stops before reaching its tolerance.
class SolverDivergedError : public Error {
 public:
  SolverDivergedError(double residual, int iterations)
      : Error(ErrorCode::SolverDiverged,
              "relative residual " + std::to_string(residual) + " after " +
                  std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace elcap
