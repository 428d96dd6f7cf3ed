#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aleanav {

enum class ErrorCode {
  DegenerateInput,
  InvalidSpec,
  EmptyBatch,
  Divergence,
  LengthMismatch,
  TooFewSamples,
  UnknownAnchor,
  UnknownObject,
  NonMonotonicTime,
  NoMeasurements,
  EmptyOverlap,
  MissingHead,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. The code is machine readable and is
/// what the CLI prints on failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aleanav
