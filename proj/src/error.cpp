#include "qsa/error.hpp"

namespace qsa {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::PositivityLost: return "PositivityLost";
    case ErrorCode::StepLimit: return "StepLimit";
    case ErrorCode::OutOfSpan: return "OutOfSpan";
    case ErrorCode::NoDeviation: return "NoDeviation";
    case ErrorCode::NotSuperarrival: return "NotSuperarrival";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::SupportOverflow: return "SupportOverflow";
    case ErrorCode::EdgeLeak: return "EdgeLeak";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Caustic: return "Caustic";
    case ErrorCode::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorCode::AmbiguousDecode: return "AmbiguousDecode";
  }
  return "Unknown";
}

}  // namespace qsa
