#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vfollow {

enum class Errc {
  // input / validation
  InvalidArgument,
  NonPositiveDepth,
  EmptyDepthMap,
  ShapeMismatch,
  LengthMismatch,
  ImageTooSmall,
  EmptyIntersection,
  TooFewPixels,
  InsufficientPoints,
  InsufficientSamples,
  TimeReversal,
  NonPositiveDt,
  NoMatchingFrame,
  EmptyBuffer,
  Uninitialized,
  InvalidConfig,
  // numerical
  SamplingExhausted,
  DegenerateTriplet,
  DegenerateConfiguration,
  CheiralityFailure,
  NumericalBreakdown,
  IllConditioned,
  NoValidPixels,
  // i/o
  Io,
  Parse,
};

enum class ErrorKind { Validation, Numerical, Io };

constexpr ErrorKind kind_of(Errc code) {
  switch (code) {
    case Errc::SamplingExhausted:
    case Errc::DegenerateTriplet:
    case Errc::DegenerateConfiguration:
    case Errc::CheiralityFailure:
    case Errc::NumericalBreakdown:
    case Errc::IllConditioned:
    case Errc::NoValidPixels:
    case Errc::InsufficientPoints:
      return ErrorKind::Numerical;
    case Errc::Io:
    case Errc::Parse:
      return ErrorKind::Io;
    default:
      return ErrorKind::Validation;
  }
}

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  Errc code_;
};

}  // namespace vfollow
