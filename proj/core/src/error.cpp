#include "elcap/error.hpp"

namespace elcap {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::BoundaryClipped: return "BoundaryClipped";
    case ErrorCode::RadiusTooSmall: return "RadiusTooSmall";
    case ErrorCode::MixedGrids: return "MixedGrids";
    case ErrorCode::DegenerateElement: return "DegenerateElement";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::Inadmissible: return "Inadmissible";
    case ErrorCode::DegenerateSeparation: return "DegenerateSeparation";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::NeedThreeRadii: return "NeedThreeRadii";
    case ErrorCode::FeatureBelowResolution: return "FeatureBelowResolution";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace elcap
