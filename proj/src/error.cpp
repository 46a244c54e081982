#include "vfollow/error.hpp"

namespace vfollow {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonPositiveDepth: return "NonPositiveDepth";
    case Errc::EmptyDepthMap: return "EmptyDepthMap";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::EmptyIntersection: return "EmptyIntersection";
    case Errc::TooFewPixels: return "TooFewPixels";
    case Errc::InsufficientPoints: return "InsufficientPoints";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::TimeReversal: return "TimeReversal";
    case Errc::NonPositiveDt: return "NonPositiveDt";
    case Errc::NoMatchingFrame: return "NoMatchingFrame";
    case Errc::EmptyBuffer: return "EmptyBuffer";
    case Errc::Uninitialized: return "Uninitialized";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::SamplingExhausted: return "SamplingExhausted";
    case Errc::DegenerateTriplet: return "DegenerateTriplet";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::CheiralityFailure: return "CheiralityFailure";
    case Errc::NumericalBreakdown: return "NumericalBreakdown";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::NoValidPixels: return "NoValidPixels";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace vfollow
