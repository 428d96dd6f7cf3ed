#include "aleanav/error.hpp"

namespace aleanav {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnknownAnchor: return "UnknownAnchor";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::NoMeasurements: return "NoMeasurements";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::MissingHead: return "MissingHead";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace aleanav
